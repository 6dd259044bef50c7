#include "bmi/trial.hpp"

#include "bmi/error.hpp"
#include "bmi/hash.hpp"
#include "bmi/json_io.hpp"
#include "bmi/util.hpp"

#include <cmath>

namespace bmi {

namespace {
// Slack when comparing sample times against tick times built as k * dt.
constexpr double kTimeSlack = 1e-9;
}  // namespace

std::string_view to_string(CollisionMode m) { return m == CollisionMode::Stop ? "stop" : "slide"; }

CollisionMode parse_collision_mode(std::string_view name) {
  if (name == "stop") return CollisionMode::Stop;
  if (name == "slide") return CollisionMode::Slide;
  throw ValidationError("unknown collision mode '" + std::string(name) + "'");
}

Polylined TrialRecord::path() const {
  Polylined p(static_cast<Eigen::Index>(trajectory.size()), 2);
  for (std::size_t i = 0; i < trajectory.size(); ++i)
    p.row(static_cast<Eigen::Index>(i)) << trajectory[i].pose.x, trajectory[i].pose.y;
  return p;
}

std::string hash_pcs(std::span<const PcSample> pcs) {
  std::uint64_t h = fnv1a({});
  for (const auto& s : pcs) {
    h = fnv1a({reinterpret_cast<const char*>(&s.t), sizeof s.t}, h);
    h = fnv1a({reinterpret_cast<const char*>(s.h.data()), 4 * sizeof(double)}, h);
  }
  return hex_digest(h);
}

// ---------------------------------------------------------------------------
// SignalChain and drivers

SignalChain::SignalChain(CalibrationModel model, PipelineConfig cfg) : model_(std::move(model)), cfg_(cfg) {
  cfg_.validate();
}

void SignalChain::consume(const SensorFrame& frame) {
  const PcVector h = project(frame, model_);
  state_ = step_controls(state_, h, frame.t, cfg_);
  pcs_.push_back({frame.t, h});
}

ControlStreamDriver::ControlStreamDriver(std::vector<ControlSample> stream) : stream_(std::move(stream)) {
  for (std::size_t i = 1; i < stream_.size(); ++i)
    if (!(stream_[i].t > stream_[i - 1].t))
      throw ValidationError("control stream timestamps must strictly increase");
}

ControlSample ControlStreamDriver::advance_to(const Observation& obs) {
  while (next_ < stream_.size() && stream_[next_].t <= obs.t + kTimeSlack) current_ = stream_[next_++];
  current_.u1 = std::clamp(current_.u1, -1.0, 1.0);
  current_.u2 = std::clamp(current_.u2, -1.0, 1.0);
  return {obs.t, current_.u1, current_.u2};
}

bool ControlStreamDriver::exhausted(double t) const {
  return stream_.empty() || (next_ >= stream_.size() && t >= stream_.back().t);
}

FrameReplayDriver::FrameReplayDriver(std::span<const SensorFrame> frames, CalibrationModel model,
                                     PipelineConfig cfg)
    : frames_(frames), chain_(std::move(model), cfg) {}

ControlSample FrameReplayDriver::advance_to(const Observation& obs) {
  while (next_ < frames_.size() && frames_[next_].t <= obs.t + kTimeSlack) chain_.consume(frames_[next_++]);
  return {obs.t, chain_.state().u1, chain_.state().u2};
}

bool FrameReplayDriver::exhausted(double /*t*/) const { return next_ >= frames_.size(); }

std::vector<SensorFrame> FrameReplayDriver::take_frames() {
  return {frames_.begin(), frames_.begin() + static_cast<std::ptrdiff_t>(next_)};
}

std::vector<PcSample> FrameReplayDriver::take_pcs() { return chain_.pcs(); }

GestureDriver::GestureDriver(GestureSource& source, SignalModelParams params, std::uint64_t seed,
                             CalibrationModel model, PipelineConfig cfg)
    : source_(source),
      generator_(params, seed),
      sample_rate_(params.sample_rate),
      chain_(std::move(model), cfg) {}

ControlSample GestureDriver::advance_to(const Observation& obs) {
  while (true) {
    const double ts = static_cast<double>(next_sample_) / sample_rate_;
    if (ts > obs.t + kTimeSlack) break;
    Observation o = obs;
    o.u1 = chain_.state().u1;
    o.u2 = chain_.state().u2;
    const SensorFrame f = generator_.synthesize_frame(source_.command(ts, o));
    chain_.consume(f);
    frames_.push_back(f);
    ++next_sample_;
  }
  return {obs.t, chain_.state().u1, chain_.state().u2};
}

bool GestureDriver::exhausted(double t) const { return source_.finished(t); }

std::vector<SensorFrame> GestureDriver::take_frames() { return std::move(frames_); }
std::vector<PcSample> GestureDriver::take_pcs() { return chain_.pcs(); }

// ---------------------------------------------------------------------------
// Trial loop

TrialRunner::TrialRunner(World world, VehicleParams vehicle, TrialSettings settings)
    : world_(std::move(world)), vehicle_(vehicle), settings_(settings) {
  vehicle_.validate();
  if (!(settings_.dt > 0.0)) throw ValidationError("trial dt must be > 0");
  world_.validate(vehicle_.body_radius);
  record_.world_id = world_.id;
  record_.world_hash = world_hash(world_);
}

const TrajectorySample& TrialRunner::begin(TrialDriver& driver) {
  Observation obs{0.0, world_.start, 0.0, 0.0};
  const ControlSample c = driver.advance_to(obs);
  record_.trajectory.push_back({0.0, world_.start, c.u1, c.u2});
  return record_.trajectory.back();
}

bool TrialRunner::tick(TrialDriver& driver) {
  if (done()) return false;
  const TrajectorySample prev = record_.trajectory.back();
  ++step_;
  const double t = static_cast<double>(step_) * settings_.dt;

  const Pose proposed = step_pose(prev.pose, prev.u1, prev.u2, vehicle_, settings_.dt);
  Pose next = proposed;
  if (auto contact = check_collision(proposed, vehicle_, world_)) {
    record_.contacts.push_back({t, contact->wall, contact->point});
    // Rotation never moves the disc centre, so the turn is always kept.
    Pose held = prev.pose;
    held.theta = proposed.theta;
    next = held;
    if (settings_.collision == CollisionMode::Slide) {
      const Vec2d d = proposed.position() - prev.pose.position();
      const Vec2d away = proposed.position() - contact->point;
      if (away.norm() > 0.0) {
        const Vec2d n = away.normalized();
        const double into = d.dot(n);
        const Vec2d slid = into < 0.0 ? Vec2d(d - into * n) : d;
        Pose candidate = held;
        candidate.x += slid.x();
        candidate.y += slid.y();
        if (!check_collision(candidate, vehicle_, world_)) next = candidate;
      }
    }
  }

  Observation obs{t, next, prev.u1, prev.u2};
  const ControlSample c = driver.advance_to(obs);
  record_.trajectory.push_back({t, next, c.u1, c.u2});

  if (settings_.stop_at_goal && world_.at_goal(next)) stop_reason_ = "goal";
  else if (t >= settings_.timeout - kTimeSlack) stop_reason_ = "timeout";
  else if (driver.exhausted(t)) stop_reason_ = "stream_end";
  return !done();
}

TrialRecord TrialRunner::finish(TrialDriver& driver, std::string stop_reason) {
  if (!stop_reason.empty()) stop_reason_ = std::move(stop_reason);
  if (stop_reason_.empty()) stop_reason_ = "aborted";
  record_.stop_reason = stop_reason_;
  record_.frames = driver.take_frames();
  record_.pcs = driver.take_pcs();
  record_.frames_hash = hash_frames(record_.frames);
  record_.pc_hash = hash_pcs(record_.pcs);
  record_.metrics = score_trial(record_, world_);
  return std::move(record_);
}

TrialRecord run_trial(const World& world, const VehicleParams& vehicle, TrialDriver& driver,
                      const TrialSettings& settings, const TickObserver& on_tick) {
  TrialRunner runner(world, vehicle, settings);
  const auto& first = runner.begin(driver);
  if (on_tick) on_tick(first);
  if (driver.exhausted(0.0)) return runner.finish(driver, "stream_end");
  while (runner.tick(driver))
    if (on_tick) on_tick(runner.last());
  if (on_tick) on_tick(runner.last());
  return runner.finish(driver);
}

MetricReport score_trial(const TrialRecord& rec, const World& world) {
  Polylined actual = rec.path();
  if (actual.rows() == 1) {
    // A single held pose: nothing travelled, nothing enclosed.
    MetricReport r;
    return r;
  }
  return area_error<double>(world.prescribed_path, actual);
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

json point_json(const Vec2d& p) { return json::array({p.x(), p.y()}); }

json report_json(const MetricReport& r) {
  json segs = json::array();
  for (const auto& s : r.segments)
    segs.push_back({{"from", point_json(s.from)}, {"to", point_json(s.to)}, {"area", s.area}});
  json pts = json::array();
  for (const auto& p : r.intersection_points) pts.push_back(point_json(p));
  return {{"dist", r.dist}, {"e_diff", r.e_diff}, {"segments", segs}, {"intersection_points", pts}};
}

MetricReport report_from_json(const json& j) {
  MetricReport r;
  r.dist = j.at("dist").get<double>();
  r.e_diff = j.at("e_diff").get<double>();
  for (const auto& s : j.at("segments")) {
    AreaSegment<double> seg;
    seg.from = {s.at("from").at(0).get<double>(), s.at("from").at(1).get<double>()};
    seg.to = {s.at("to").at(0).get<double>(), s.at("to").at(1).get<double>()};
    seg.area = s.at("area").get<double>();
    r.segments.push_back(std::move(seg));
  }
  for (const auto& p : j.at("intersection_points"))
    r.intersection_points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return r;
}

}  // namespace

std::string format_metric_report(const MetricReport& report) { return report_json(report).dump(2) + "\n"; }

std::string format_plot_data(const MetricReport& report, const Polylined& prescribed, const Polylined& actual) {
  auto poly_json = [](const Polylined& p) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < p.rows(); ++i) arr.push_back(json::array({p(i, 0), p(i, 1)}));
    return arr;
  };
  json polys = json::array();
  for (const auto& s : report.segments) polys.push_back({{"area", s.area}, {"polygon", poly_json(s.polygon)}});
  const json doc = {{"prescribed", poly_json(prescribed)}, {"actual", poly_json(actual)}, {"segments", polys}};
  return doc.dump() + "\n";
}

std::string format_trial(const TrialRecord& rec) {
  json contacts = json::array();
  for (const auto& c : rec.contacts)
    contacts.push_back({{"t", c.t}, {"wall", c.wall}, {"point", point_json(c.point)}});
  json config = rec.config.empty() ? json::object() : json::parse(rec.config);
  const json header = {{"format", "btrial"},
                       {"version", 1},
                       {"trial_id", rec.trial_id},
                       {"world_id", rec.world_id},
                       {"world_hash", rec.world_hash},
                       {"config", config},
                       {"frames_hash", rec.frames_hash},
                       {"pc_hash", rec.pc_hash},
                       {"stop_reason", rec.stop_reason},
                       {"contacts", contacts},
                       {"metrics", report_json(rec.metrics)}};
  std::string out = header.dump() + "\n";
  for (const auto& s : rec.trajectory) {
    out += format_double(s.t) + ',' + format_double(s.pose.x) + ',' + format_double(s.pose.y) + ',' +
           format_double(s.pose.theta) + ',' + format_double(s.u1) + ',' + format_double(s.u2) + '\n';
  }
  return out;
}

TrialRecord parse_trial(const std::string& text) {
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]).empty()) throw FormatError("trial file has no header");
  TrialRecord rec;
  try {
    const json h = json::parse(trim(lines[0]));
    if (h.value("format", "") != "btrial") throw FormatError("not a btrial file");
    rec.trial_id = h.at("trial_id").get<std::string>();
    rec.world_id = h.at("world_id").get<std::string>();
    rec.world_hash = h.at("world_hash").get<std::string>();
    rec.config = h.at("config").dump();
    rec.frames_hash = h.value("frames_hash", "");
    rec.pc_hash = h.value("pc_hash", "");
    rec.stop_reason = h.value("stop_reason", "");
    for (const auto& c : h.at("contacts"))
      rec.contacts.push_back({c.at("t").get<double>(), c.at("wall").get<std::size_t>(),
                              {c.at("point").at(0).get<double>(), c.at("point").at(1).get<double>()}});
    rec.metrics = report_from_json(h.at("metrics"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed trial header: ") + e.what());
  }
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = trim(lines[li]);
    if (line.empty()) continue;
    ++row;
    const auto cells = split(line, ',');
    if (cells.size() != 6) throw FormatError("trial row " + std::to_string(row) + " needs 6 fields");
    TrajectorySample s;
    s.t = parse_double(cells[0]);
    s.pose = {parse_double(cells[1]), parse_double(cells[2]), parse_double(cells[3])};
    s.u1 = parse_double(cells[4]);
    s.u2 = parse_double(cells[5]);
    if (!rec.trajectory.empty() && !(s.t > rec.trajectory.back().t))
      throw NonMonotonicTimestampError("trial timestamps not increasing at row " + std::to_string(row), row);
    rec.trajectory.push_back(s);
  }
  return rec;
}

void write_trial(const std::string& path, const TrialRecord& rec) { write_file_atomic(path, format_trial(rec)); }

TrialRecord read_trial(const std::string& path) { return parse_trial(read_file(path)); }

}  // namespace bmi
