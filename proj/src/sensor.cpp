#include "bmi/sensor.hpp"

#include "bmi/error.hpp"
#include "bmi/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bmi {

namespace {

constexpr std::array<std::string_view, 5> kGroupNames = {"right_shoulder", "left_shoulder",
                                                         "right_elbow", "left_elbow", "other"};
constexpr std::array<std::string_view, kGestureCount> kGestureNames = {
    "right_elbow_flex", "left_elbow_flex", "right_shoulder_protract", "left_shoulder_protract"};

}  // namespace

std::string_view to_string(JointGroup g) { return kGroupNames[static_cast<std::size_t>(g)]; }

JointGroup parse_joint_group(std::string_view name) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i)
    if (kGroupNames[i] == name) return static_cast<JointGroup>(i);
  throw ValidationError("unknown joint group '" + std::string(name) + "'");
}

std::string_view to_string(Gesture g) { return kGestureNames[static_cast<std::size_t>(g)]; }

Gesture parse_gesture(std::string_view name) {
  for (std::size_t i = 0; i < kGestureNames.size(); ++i)
    if (kGestureNames[i] == name) return static_cast<Gesture>(i);
  throw UnknownGestureError("unknown gesture id '" + std::string(name) + "'");
}

JointGroup primary_group(Gesture g) {
  switch (g) {
    case Gesture::RightElbowFlex: return JointGroup::RightElbow;
    case Gesture::LeftElbowFlex: return JointGroup::LeftElbow;
    case Gesture::RightShoulderProtract: return JointGroup::RightShoulder;
    case Gesture::LeftShoulderProtract: return JointGroup::LeftShoulder;
  }
  return JointGroup::Other;
}

// ---------------------------------------------------------------------------
// ChannelLayout

const std::vector<std::size_t>& ChannelLayout::channels(JointGroup g) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = groups.find(g);
  return it == groups.end() ? kEmpty : it->second;
}

std::size_t ChannelLayout::largest_control_group() const {
  std::size_t n = 0;
  for (JointGroup g : kControlGroups) n = std::max(n, channels(g).size());
  return n;
}

void ChannelLayout::validate() const {
  std::set<std::size_t> seen;
  for (const auto& [group, idx] : groups) {
    for (std::size_t c : idx) {
      if (c >= total_channels)
        throw ValidationError("channel " + std::to_string(c) + " in group " +
                              std::string(to_string(group)) + " exceeds total_channels " +
                              std::to_string(total_channels));
      if (!seen.insert(c).second)
        throw ValidationError("channel " + std::to_string(c) + " assigned to more than one group");
    }
  }
  for (JointGroup g : kControlGroups)
    if (channels(g).empty())
      throw ValidationError("joint group " + std::string(to_string(g)) + " has no channels");
}

ChannelLayout ChannelLayout::default_shirt() {
  ChannelLayout layout;
  layout.total_channels = 52;
  auto range = [](std::size_t first, std::size_t count) {
    std::vector<std::size_t> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = first + i;
    return v;
  };
  layout.groups[JointGroup::RightShoulder] = range(0, 8);
  layout.groups[JointGroup::LeftShoulder] = range(8, 8);
  layout.groups[JointGroup::RightElbow] = range(16, 6);
  layout.groups[JointGroup::LeftElbow] = range(22, 6);
  layout.groups[JointGroup::Other] = range(28, 24);
  return layout;
}

// ---------------------------------------------------------------------------
// GestureCommand

GestureCommand GestureCommand::clamped() const {
  GestureCommand c = *this;
  for (double& v : c.intensities) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  return c;
}

bool GestureCommand::valid() const {
  return std::all_of(intensities.begin(), intensities.end(),
                     [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

// ---------------------------------------------------------------------------
// SignalModelParams

void SignalModelParams::validate() const {
  if (!(relaxation_time > 0.0)) throw ValidationError("relaxation_time must be > 0");
  if (!(sample_rate > 0.0)) throw ValidationError("sample_rate must be > 0");
  if (!(noise_std >= 0.0)) throw ValidationError("noise_std must be >= 0");
  if (!std::isfinite(drift_rate)) throw ValidationError("drift_rate must be finite");
  for (const auto& g : gain_per_gesture)
    if (g.size() != baseline.size())
      throw ValidationError("gain vector length differs from channel count");
}

SignalModelParams SignalModelParams::defaults(const ChannelLayout& layout) {
  layout.validate();
  const auto n = static_cast<Eigen::Index>(layout.total_channels);
  SignalModelParams p;
  p.baseline.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) p.baseline[c] = 1.0 + 0.05 * static_cast<double>(c % 7);

  for (Gesture g : kGestures) {
    Eigen::VectorXd gain = Eigen::VectorXd::Zero(n);
    const auto gi = static_cast<double>(static_cast<int>(g));
    const JointGroup own = primary_group(g);
    // Same-side neighbour joint picks up cross-talk.
    const JointGroup neighbour = [&] {
      switch (own) {
        case JointGroup::RightElbow: return JointGroup::RightShoulder;
        case JointGroup::LeftElbow: return JointGroup::LeftShoulder;
        case JointGroup::RightShoulder: return JointGroup::RightElbow;
        default: return JointGroup::LeftElbow;
      }
    }();
    const auto& own_idx = layout.channels(own);
    for (std::size_t k = 0; k < own_idx.size(); ++k)
      gain[static_cast<Eigen::Index>(own_idx[k])] =
          1.0 + 0.4 * std::sin(1.7 * static_cast<double>(k) + gi);
    const auto& nb_idx = layout.channels(neighbour);
    for (std::size_t k = 0; k < nb_idx.size(); ++k)
      gain[static_cast<Eigen::Index>(nb_idx[k])] =
          0.2 + 0.15 * std::cos(2.3 * static_cast<double>(k) + 0.5 * gi);
    const auto& other_idx = layout.channels(JointGroup::Other);
    for (std::size_t k = 0; k < other_idx.size(); ++k)
      gain[static_cast<Eigen::Index>(other_idx[k])] =
          0.15 + 0.1 * std::sin(0.9 * static_cast<double>(k) * (gi + 1.0));
    p.gain_per_gesture[static_cast<std::size_t>(g)] = std::move(gain);
  }
  return p;
}

// ---------------------------------------------------------------------------
// SignalGenerator

SignalGenerator::SignalGenerator(SignalModelParams params, std::uint64_t seed)
    : params_(std::move(params)) {
  params_.validate();
  reset(seed);
}

void SignalGenerator::reset(std::uint64_t seed) {
  lag_.fill(0.0);
  last_t_.reset();
  rng_.seed(seed);
  normal_.reset();
}

SensorFrame SignalGenerator::synthesize_frame(const GestureCommand& raw) {
  const GestureCommand cmd = raw.clamped();
  if (last_t_ && cmd.t < *last_t_)
    throw ValidationError("gesture command timestamps must be non-decreasing");
  const double dt = last_t_ ? cmd.t - *last_t_ : 0.0;
  // Exact zero-order-hold discretisation of the first-order lag.
  const double decay = std::exp(-dt / params_.relaxation_time);
  for (std::size_t g = 0; g < kGestureCount; ++g)
    lag_[g] = cmd.intensities[g] + (lag_[g] - cmd.intensities[g]) * decay;
  last_t_ = cmd.t;

  SensorFrame f;
  f.t = cmd.t;
  f.values = params_.baseline.array() + params_.drift_rate * cmd.t;
  for (std::size_t g = 0; g < kGestureCount; ++g)
    if (lag_[g] != 0.0) f.values += saturate(lag_[g]) * params_.gain_per_gesture[g];
  if (params_.noise_std > 0.0)
    for (Eigen::Index c = 0; c < f.values.size(); ++c) f.values[c] += params_.noise_std * normal_(rng_);
  return f;
}

// ---------------------------------------------------------------------------
// GestureScript

GestureScript::GestureScript(std::vector<GestureCommand> keyframes) : keys_(std::move(keyframes)) {
  for (std::size_t i = 1; i < keys_.size(); ++i)
    if (keys_[i].t < keys_[i - 1].t)
      throw ValidationError("gesture script keyframes must be time-ordered");
  for (auto& k : keys_) k = k.clamped();
}

GestureCommand GestureScript::at(double t) const {
  GestureCommand out;
  out.t = t;
  if (keys_.empty()) return out;
  if (t <= keys_.front().t) {
    out.intensities = keys_.front().intensities;
    return out;
  }
  if (t >= keys_.back().t) {
    out.intensities = keys_.back().intensities;
    return out;
  }
  auto hi = std::upper_bound(keys_.begin(), keys_.end(), t,
                             [](double v, const GestureCommand& k) { return v < k.t; });
  auto lo = hi - 1;
  const double span = hi->t - lo->t;
  const double w = span > 0.0 ? (t - lo->t) / span : 1.0;
  for (std::size_t g = 0; g < kGestureCount; ++g)
    out.intensities[g] = (1.0 - w) * lo->intensities[g] + w * hi->intensities[g];
  return out;
}

std::vector<SensorFrame> synthesize(const GestureScript& script, const SignalModelParams& params,
                                    std::uint64_t seed, double duration) {
  SignalGenerator gen(params, seed);
  const auto n = static_cast<std::size_t>(std::floor(duration * params.sample_rate + 1e-9)) + 1;
  std::vector<SensorFrame> frames;
  frames.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / params.sample_rate;
    frames.push_back(gen.synthesize_frame(script.at(t)));
  }
  return frames;
}

GestureScript uninstructed_movement_script(double duration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> depth(0.5, 1.0);
  std::uniform_real_distribution<double> move_len(0.4, 1.2);
  std::uniform_real_distribution<double> rest_len(0.1, 0.6);

  // Per-gesture breakpoint lists, then merged onto a common time grid.
  std::array<std::vector<std::pair<double, double>>, kGestureCount> tracks;
  for (std::size_t g = 0; g < kGestureCount; ++g) {
    double t = rest_len(rng) * static_cast<double>(g % 2);
    tracks[g].emplace_back(0.0, 0.0);
    while (t < duration) {
      const double up = move_len(rng);
      const double d = depth(rng);
      tracks[g].emplace_back(t, 0.0);
      tracks[g].emplace_back(t + 0.5 * up, d);
      tracks[g].emplace_back(t + up, 0.0);
      t += up + rest_len(rng);
    }
  }
  auto sample = [](const std::vector<std::pair<double, double>>& tr, double t) {
    if (t <= tr.front().first) return tr.front().second;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      if (t <= tr[i].first) {
        const double span = tr[i].first - tr[i - 1].first;
        const double w = span > 0.0 ? (t - tr[i - 1].first) / span : 1.0;
        return (1.0 - w) * tr[i - 1].second + w * tr[i].second;
      }
    }
    return tr.back().second;
  };
  std::set<double> times;
  for (const auto& tr : tracks)
    for (const auto& [t, v] : tr)
      if (t <= duration) times.insert(t);
  times.insert(duration);
  std::vector<GestureCommand> keys;
  for (double t : times) {
    GestureCommand c;
    c.t = t;
    for (std::size_t g = 0; g < kGestureCount; ++g) c.intensities[g] = sample(tracks[g], t);
    keys.push_back(c);
  }
  return GestureScript(std::move(keys));
}

GestureScript read_gesture_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gesture script '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("gesture script '" + path + "' is empty");
  const auto header = split(trim(line), ',');
  if (header.empty() || trim(header[0]) != "t")
    throw FormatError("gesture script header must start with 't'");
  std::vector<Gesture> columns;
  for (std::size_t i = 1; i < header.size(); ++i) columns.push_back(parse_gesture(trim(header[i])));

  std::vector<GestureCommand> keys;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size())
      throw FormatError("gesture script row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " fields, expected " +
                        std::to_string(header.size()));
    GestureCommand c;
    c.t = parse_double(cells[0]);
    for (std::size_t i = 0; i < columns.size(); ++i) c[columns[i]] = parse_double(cells[i + 1]);
    if (!keys.empty() && c.t < keys.back().t)
      throw NonMonotonicTimestampError("gesture script time decreases at row " + std::to_string(row),
                                       row);
    keys.push_back(c);
  }
  return GestureScript(std::move(keys));
}

void write_gesture_script(const std::string& path, const GestureScript& script) {
  std::ostringstream out;
  out << "t";
  for (Gesture g : kGestures) out << ',' << to_string(g);
  out << '\n';
  for (const auto& k : script.keyframes()) {
    out << format_double(k.t);
    for (double v : k.intensities) out << ',' << format_double(v);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace bmi
