#include "bmi/calibration.hpp"

#include "bmi/error.hpp"
#include "bmi/hash.hpp"
#include "bmi/json_io.hpp"
#include "bmi/util.hpp"

#include <Eigen/Eigenvalues>

#include <cstring>

namespace bmi {

const GroupCalibration& CalibrationModel::group(JointGroup g) const {
  for (const auto& gc : groups)
    if (gc.group == g) return gc;
  throw ValidationError("calibration has no group " + std::string(to_string(g)));
}

bool CalibrationModel::unstable() const {
  return std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.unstable; });
}

std::string hash_frames(std::span<const SensorFrame> frames) {
  std::uint64_t h = fnv1a({});
  for (const auto& f : frames) {
    h = fnv1a({reinterpret_cast<const char*>(&f.t), sizeof f.t}, h);
    h = fnv1a({reinterpret_cast<const char*>(f.values.data()),
               static_cast<std::size_t>(f.values.size()) * sizeof(double)},
              h);
  }
  return hex_digest(h);
}

CalibrationModel fit_calibration(std::span<const SensorFrame> frames, const ChannelLayout& layout,
                                 const TimeWindow& window, const FitOptions& options) {
  layout.validate();
  std::vector<const SensorFrame*> in_window;
  for (const auto& f : frames) {
    if (f.values.size() != static_cast<Eigen::Index>(layout.total_channels))
      throw ValidationError("frame length does not match the channel layout");
    if (window.contains(f.t)) in_window.push_back(&f);
  }
  const std::size_t needed = 2 * layout.largest_control_group();
  if (in_window.size() < needed)
    throw WindowTooShortError("calibration window holds " + std::to_string(in_window.size()) +
                              " frames, need at least " + std::to_string(needed));

  CalibrationModel model;
  model.layout = layout;
  model.window = window;
  model.source_hash = hash_frames(frames);

  const auto n = static_cast<Eigen::Index>(in_window.size());
  for (std::size_t gi = 0; gi < kControlGroups.size(); ++gi) {
    const JointGroup g = kControlGroups[gi];
    const auto& idx = layout.channels(g);
    const auto k = static_cast<Eigen::Index>(idx.size());

    Eigen::MatrixXd samples(n, k);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < k; ++c)
        samples(r, c) = in_window[static_cast<std::size_t>(r)]->values[static_cast<Eigen::Index>(idx[c])];

    GroupCalibration gc;
    gc.group = g;
    gc.channels = idx;
    gc.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - gc.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    const double trace = cov.trace();
    if (!(trace > 1e-24 * std::max(1.0, gc.mean.squaredNorm())))
      throw DegenerateCalibrationError("joint group " + std::string(to_string(g)) +
                                       " has constant signals in the calibration window");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
      throw DegenerateCalibrationError("eigen-decomposition failed for group " + std::string(to_string(g)));
    // Eigen returns ascending eigenvalues.
    gc.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
    gc.axis = eig.eigenvectors().col(k - 1).normalized();
    gc.explained_variance_ratio = std::clamp(gc.eigenvalues[0] / trace, 0.0, 1.0);
    gc.unstable = k > 1 && (gc.eigenvalues[0] - gc.eigenvalues[1]) < options.degeneracy_gap * trace;

    if (const auto& ref = options.reference[gi]) {
      double mean_proj = 0.0;
      std::size_t count = 0;
      for (Eigen::Index r = 0; r < n; ++r) {
        if (ref->contains(in_window[static_cast<std::size_t>(r)]->t)) {
          mean_proj += centered.row(r).dot(gc.axis);
          ++count;
        }
      }
      if (count == 0)
        throw ValidationError("reference segment for " + std::string(to_string(g)) +
                              " lies outside the calibration window");
      if (mean_proj < 0.0) gc.axis = -gc.axis;
      gc.sign = SignConvention::ReferenceGesture;
    } else {
      if (gc.axis[0] < 0.0) gc.axis = -gc.axis;
      gc.sign = SignConvention::FirstComponent;
    }
    model.groups[gi] = std::move(gc);
  }
  return model;
}

PcVector project(const Eigen::VectorXd& values, const CalibrationModel& model) {
  if (values.size() != static_cast<Eigen::Index>(model.layout.total_channels))
    throw ValidationError("frame has " + std::to_string(values.size()) + " values, calibration expects " +
                          std::to_string(model.layout.total_channels));
  PcVector h;
  for (std::size_t gi = 0; gi < model.groups.size(); ++gi) {
    const auto& gc = model.groups[gi];
    double acc = 0.0;
    for (std::size_t c = 0; c < gc.channels.size(); ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      acc += gc.axis[ci] * (values[static_cast<Eigen::Index>(gc.channels[c])] - gc.mean[ci]);
    }
    h[static_cast<Eigen::Index>(gi)] = acc;
  }
  return h;
}

std::string format_calibration(const CalibrationModel& model) {
  json groups = json::array();
  for (const auto& gc : model.groups) {
    groups.push_back({{"group", std::string(to_string(gc.group))},
                      {"channels", gc.channels},
                      {"mean", vector_to_json(gc.mean)},
                      {"axis", vector_to_json(gc.axis)},
                      {"eigenvalues", vector_to_json(gc.eigenvalues)},
                      {"explained_variance_ratio", gc.explained_variance_ratio},
                      {"sign_convention", gc.sign == SignConvention::ReferenceGesture ? "reference_gesture"
                                                                                      : "first_component"},
                      {"unstable", gc.unstable}});
  }
  const json doc = {{"format", "bcal"},
                    {"version", 1},
                    {"layout", to_json(model.layout)},
                    {"groups", groups},
                    {"provenance",
                     {{"source_hash", model.source_hash},
                      {"window", json::array({model.window.t0, model.window.t1})}}}};
  return doc.dump(2) + "\n";
}

CalibrationModel parse_calibration(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "bcal") throw FormatError("not a bcal document");
    CalibrationModel model;
    model.layout = layout_from_json(doc.at("layout"));
    const json& groups = doc.at("groups");
    if (!groups.is_array() || groups.size() != 4) throw FormatError("bcal needs four groups");
    for (std::size_t gi = 0; gi < 4; ++gi) {
      const json& g = groups[gi];
      GroupCalibration gc;
      gc.group = parse_joint_group(g.at("group").get<std::string>());
      if (gc.group != kControlGroups[gi]) throw FormatError("bcal groups out of order");
      gc.channels = g.at("channels").get<std::vector<std::size_t>>();
      gc.mean = vector_from_json(g.at("mean"));
      gc.axis = vector_from_json(g.at("axis"));
      gc.eigenvalues = vector_from_json(g.at("eigenvalues"));
      gc.explained_variance_ratio = g.at("explained_variance_ratio").get<double>();
      gc.sign = g.at("sign_convention").get<std::string>() == "reference_gesture"
                    ? SignConvention::ReferenceGesture
                    : SignConvention::FirstComponent;
      gc.unstable = g.value("unstable", false);
      if (gc.mean.size() != static_cast<Eigen::Index>(gc.channels.size()) ||
          gc.axis.size() != gc.mean.size())
        throw FormatError("bcal group " + std::string(to_string(gc.group)) + " has inconsistent sizes");
      if (gc.channels != model.layout.channels(gc.group))
        throw FormatError("bcal group channels disagree with the layout");
      model.groups[gi] = std::move(gc);
    }
    const json& prov = doc.at("provenance");
    model.source_hash = prov.at("source_hash").get<std::string>();
    model.window = {prov.at("window").at(0).get<double>(), prov.at("window").at(1).get<double>()};
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed calibration file: ") + e.what());
  }
}

void write_calibration(const std::string& path, const CalibrationModel& model) {
  write_file_atomic(path, format_calibration(model));
}

CalibrationModel read_calibration(const std::string& path) { return parse_calibration(read_file(path)); }

}  // namespace bmi
