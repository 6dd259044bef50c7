#include "bmi/session.hpp"

#include "bmi/error.hpp"
#include "bmi/hash.hpp"
#include "bmi/json_io.hpp"
#include "bmi/recording.hpp"
#include "bmi/util.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>

namespace bmi {

namespace fs = std::filesystem;

std::string_view to_string(SessionMode m) {
  switch (m) {
    case SessionMode::Live: return "live";
    case SessionMode::Replay: return "replay";
    case SessionMode::Scripted: return "scripted";
  }
  return "scripted";
}

SessionMode parse_session_mode(std::string_view name) {
  if (name == "live") return SessionMode::Live;
  if (name == "replay") return SessionMode::Replay;
  if (name == "scripted") return SessionMode::Scripted;
  throw ValidationError("unknown session mode '" + std::string(name) + "'");
}

void SessionConfig::validate() const {
  if (!(trial.dt > 0.0)) throw ValidationError("session dt must be > 0");
  if (!(trial.timeout > 0.0)) throw ValidationError("session timeout must be > 0");
  vehicle.validate();
  pipeline.validate();
  layout.validate();
  signal.validate();
  if (!(gesture_drop_rate >= 0.0 && gesture_drop_rate < 1.0))
    throw ValidationError("gesture_drop_rate must lie in [0, 1)");
  if (signal.channels() != layout.total_channels)
    throw ValidationError("signal model channel count differs from the layout");
}

std::string data_dir() {
  if (const char* env = std::getenv("BMI_DATA_DIR"); env && *env) return env;
  return "data";
}

namespace {

std::string resolve_ref(const std::string& ref, const std::string& base_dir) {
  if (ref.empty() || ref.starts_with("builtin:")) return ref;
  const fs::path p(ref);
  if (p.is_absolute()) return ref;
  const fs::path local = fs::path(base_dir) / p;
  if (fs::exists(local)) return local.string();
  const fs::path data = fs::path(data_dir()) / p;
  if (fs::exists(data)) return data.string();
  return local.string();
}

}  // namespace

SessionConfig parse_session_config(const std::string& text, const std::string& base_dir) {
  SessionConfig c;
  try {
    const json j = json::parse(text);
    c.world = resolve_ref(optional_field<std::string>(j, "world", "builtin:corridor"), base_dir);
    c.calibration = resolve_ref(optional_field<std::string>(j, "calibration", ""), base_dir);
    c.calibration_recording = resolve_ref(optional_field<std::string>(j, "calibration_recording", ""), base_dir);
    if (j.contains("layout")) c.layout = layout_from_json(j.at("layout"));
    c.signal = j.contains("signal_model") ? signal_params_from_json(j.at("signal_model"), c.layout)
                                          : SignalModelParams::defaults(c.layout);
    if (j.contains("vehicle")) c.vehicle = vehicle_params_from_json(j.at("vehicle"));
    if (j.contains("pipeline")) {
      c.pipeline = pipeline_config_from_json(j.at("pipeline"));
      c.auto_tune = optional_field(j.at("pipeline"), "auto_tune", true);
    }
    c.trial.dt = optional_field(j, "dt", c.trial.dt);
    c.trial.timeout = optional_field(j, "timeout", c.trial.timeout);
    c.trial.collision = parse_collision_mode(optional_field<std::string>(j, "collision", "stop"));
    c.trial.stop_at_goal = optional_field(j, "stop_at_goal", true);
    c.mode = parse_session_mode(optional_field<std::string>(j, "mode", "scripted"));
    c.seed = optional_field<std::uint64_t>(j, "seed", c.seed);
    c.gesture_drop_rate = optional_field(j, "gesture_drop_rate", 0.0);
    const std::string out = optional_field<std::string>(j, "out_dir", "");
    c.out_dir = out.empty() || fs::path(out).is_absolute() ? out : (fs::path(base_dir) / out).string();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed session config: ") + e.what());
  }
  c.validate();
  return c;
}

SessionConfig load_session_config(const std::string& path) {
  return parse_session_config(read_file(path), fs::path(path).parent_path().string());
}

SessionContext resolve(const SessionConfig& config) {
  config.validate();
  SessionContext ctx;
  ctx.config = config;
  if (config.world.empty() || config.world == "builtin:corridor") ctx.world = corridor_world();
  else ctx.world = read_world(config.world);
  ctx.world.validate(config.vehicle.body_radius);

  if (!config.calibration.empty()) {
    ctx.calibration = read_calibration(config.calibration);
  } else {
    std::vector<SensorFrame> frames;
    if (!config.calibration_recording.empty()) {
      frames = read_recording(config.calibration_recording).frames;
    } else {
      frames = synthesize(uninstructed_movement_script(10.0, config.seed), config.signal, config.seed, 10.0);
    }
    if (frames.empty()) throw ValidationError("calibration recording has no frames");
    ctx.calibration = fit_calibration(frames, config.layout, {frames.front().t, frames.back().t});
  }
  if (ctx.calibration.layout != config.layout)
    throw ValidationError("calibration layout differs from the session layout");
  ctx.pipeline = config.auto_tune ? tune_pipeline(ctx.calibration, config.signal, config.pipeline) : config.pipeline;
  return ctx;
}

std::string snapshot(const SessionContext& ctx) {
  const auto& c = ctx.config;
  const json j = {{"world_id", ctx.world.id},
                  {"world_hash", world_hash(ctx.world)},
                  {"calibration_source", ctx.calibration.source_hash},
                  {"calibration_hash", content_hash(format_calibration(ctx.calibration))},
                  {"vehicle", to_json(c.vehicle)},
                  {"pipeline", to_json(ctx.pipeline)},
                  {"signal_model_hash", content_hash(to_json(c.signal).dump())},
                  {"dt", c.trial.dt},
                  {"timeout", c.trial.timeout},
                  {"collision", to_string(c.trial.collision)},
                  {"stop_at_goal", c.trial.stop_at_goal},
                  {"mode", to_string(c.mode)},
                  {"seed", c.seed},
                  {"gesture_drop_rate", c.gesture_drop_rate}};
  return j.dump();
}

std::uint64_t trial_seed(std::uint64_t session_seed, std::size_t index) {
  return session_seed * 1000003ull + static_cast<std::uint64_t>(index);
}

TrialRecord run_scripted_in_process(const SessionContext& ctx, const GestureScript& script,
                                    const std::string& trial_id, std::size_t trial_index) {
  HeldGestureSource source;
  GestureDriver driver(source, ctx.config.signal, trial_seed(ctx.config.seed, trial_index), ctx.calibration,
                       ctx.pipeline);
  TrialRunner runner(ctx.world, ctx.config.vehicle, ctx.config.trial);
  source.set(script.at(0.0));
  runner.begin(driver);
  const double dt = ctx.config.trial.dt;
  const auto ticks = static_cast<std::uint64_t>(std::floor(script.duration() / dt + 1e-9));
  bool running = true;
  for (std::uint64_t k = 1; k <= ticks && running; ++k) {
    source.set(script.at(static_cast<double>(k) * dt));
    running = runner.tick(driver);
  }
  TrialRecord rec = runner.finish(driver, running ? "stopped" : "");
  rec.trial_id = trial_id;
  rec.config = snapshot(ctx);
  return rec;
}

// ---------------------------------------------------------------------------
// Session

namespace pr = protocol;

Session::Session(SessionContext ctx)
    : ctx_(std::move(ctx)), last_pose_(ctx_.world.start), drop_rng_(ctx_.config.seed ^ 0x9e3779b97f4a7c15ull) {}

const TrajectorySample& Session::current_sample() const {
  if (trial_->replay) return trial_->replay->trajectory[trial_->tick];
  return trial_->runner->last();
}

std::vector<Outbound> Session::on_connect(ClientId id) {
  clients_[id] = Client{};
  return {};
}

std::vector<Outbound> Session::on_disconnect(ClientId id) {
  clients_.erase(id);
  if (driver_ == id) driver_.reset();
  return {};
}

std::vector<Outbound> Session::on_line(ClientId id, std::string_view line) {
  if (trim(line).empty()) return {};
  pr::json msg;
  try {
    msg = pr::decode(line);
  } catch (const ProtocolError& e) {
    return {{id, pr::error(pr::code::kMalformed, e.what())}};
  }
  return handle(id, msg);
}

pr::json Session::snapshot_message() const {
  pr::json hist = pr::json::array();
  for (const auto& p : history_) hist.push_back({{"trial_id", p.trial_id}, {"dist", p.dist}, {"e_diff", p.e_diff}});
  const Pose pose = trial_ ? current_sample().pose : last_pose_;
  pr::json snap = pr::world_snapshot(ctx_.world, pose, trial_ ? trial_->id : "", static_cast<bool>(trial_), hist);
  if (trial_) snap["trial"]["tick"] = trial_->tick;
  return snap;
}

std::vector<Outbound> Session::handle(ClientId id, const pr::json& msg) {
  auto it = clients_.find(id);
  if (it == clients_.end()) it = clients_.emplace(id, Client{}).first;
  Client& client = it->second;
  const std::string type = msg.at("type").get<std::string>();

  if (type == pr::type::kHello) {
    const auto version = msg.contains("version") && msg.at("version").is_number_integer()
                             ? msg.at("version").get<int>()
                             : -1;
    if (version != pr::kVersion)
      return {{id, pr::error(pr::code::kVersionMismatch, "server speaks protocol version " +
                                                             std::to_string(pr::kVersion) + ", client sent " +
                                                             std::to_string(version))}};
    const bool wants_driver = msg.value("role", std::string("driver")) == "driver";
    if (wants_driver && (!driver_ || *driver_ == id)) {
      driver_ = id;
      client.role = pr::Role::Driver;
    } else {
      client.role = pr::Role::Observer;
    }
    client.greeted = true;
    return {{id, pr::hello(client.role, dt())}, {id, snapshot_message()}};
  }

  if (!client.greeted) return {{id, pr::error(pr::code::kBadState, "send hello before '" + type + "'")}};

  const bool is_control = type == pr::type::kGesture || type == pr::type::kTrialStart || type == pr::type::kTrialEnd;
  if (!is_control) {
    if (type == pr::type::kWorldSnapshot) return {{id, snapshot_message()}};
    return {{id, pr::error(pr::code::kUnknownType, "unknown message type '" + type + "'")}};
  }
  if (client.role != pr::Role::Driver)
    return {{id, pr::error(pr::code::kNotDriver, "observers cannot send '" + type + "'")}};

  if (type == pr::type::kGesture) {
    GestureCommand cmd;
    try {
      cmd = gesture_command_from_json(msg);
    } catch (const ValidationError& e) {
      return {{id, pr::error(pr::code::kValidation, e.what())}};
    } catch (const FormatError& e) {
      return {{id, pr::error(pr::code::kMalformed, e.what())}};
    }
    if (!cmd.valid()) return {{id, pr::error(pr::code::kValidation, "gesture intensities must lie in [0, 1]")}};
    if (!trial_) {
      pending_ = cmd;
      return {};
    }
    if (trial_->replay) return {};
    if (!trial_->lockstep && ctx_.config.gesture_drop_rate > 0.0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(drop_rng_) < ctx_.config.gesture_drop_rate)
      return {};
    trial_->source.set(cmd);
    std::vector<Outbound> out;
    if (trial_->lockstep) {
      if (msg.contains("tick")) {
        const auto tick = msg.at("tick").get<std::uint64_t>();
        if (tick != trial_->tick + 1)
          return {{id, pr::error(pr::code::kBadState, "expected tick " + std::to_string(trial_->tick + 1) +
                                                          ", got " + std::to_string(tick))}};
      }
      advance(out);
    }
    return out;
  }

  if (type == pr::type::kTrialStart) {
    if (trial_) return {{id, pr::error(pr::code::kBadState, "a trial is already running")}};
    if (msg.contains("replay")) return start_replay(msg);
    return start_trial(msg);
  }

  // trial_end
  if (!trial_) return {{id, pr::error(pr::code::kBadState, "no trial is running")}};
  std::vector<Outbound> out;
  end_trial(out, "stopped");
  return out;
}

std::vector<Outbound> Session::start_trial(const pr::json& msg) {
  auto t = std::make_unique<ActiveTrial>();
  t->id = msg.value("trial_id", std::string());
  if (t->id.empty()) t->id = "trial-" + std::to_string(trials_started_ + 1);
  t->lockstep = msg.value("lockstep", false);
  t->source.set(pending_);
  t->driver = std::make_unique<GestureDriver>(t->source, ctx_.config.signal, trial_seed(ctx_.config.seed, trials_started_),
                                              ctx_.calibration, ctx_.pipeline);
  t->runner = std::make_unique<TrialRunner>(ctx_.world, ctx_.config.vehicle, ctx_.config.trial);
  ++trials_started_;
  const TrajectorySample& first = t->runner->begin(*t->driver);
  std::vector<Outbound> out;
  out.push_back({std::nullopt, pr::trial_start(t->id, t->lockstep)});
  out.push_back({std::nullopt, pr::tick_telemetry(t->id, 0, first), true});
  trial_ = std::move(t);
  return out;
}

std::vector<Outbound> Session::start_replay(const pr::json& msg) {
  if (!msg.at("replay").is_string())
    return {{driver_, pr::error(pr::code::kMalformed, "replay must name a .btrial file")}};
  const fs::path ref(msg.at("replay").get<std::string>());
  std::vector<fs::path> candidates{ref};
  if (ref.is_relative()) {
    if (!ctx_.config.out_dir.empty()) candidates.insert(candidates.begin(), fs::path(ctx_.config.out_dir) / ref);
    candidates.push_back(fs::path(data_dir()) / ref);
  }
  std::optional<TrialRecord> rec;
  try {
    for (const auto& c : candidates)
      if (fs::exists(c)) {
        rec = read_trial(c.string());
        break;
      }
  } catch (const Error& e) {
    return {{driver_, pr::error(pr::code::kValidation, e.what())}};
  }
  if (!rec) return {{driver_, pr::error(pr::code::kValidation, "no trial file '" + ref.string() + "'")}};
  if (rec->trajectory.empty()) return {{driver_, pr::error(pr::code::kValidation, "trial file has no samples")}};
  if (rec->world_hash != world_hash(ctx_.world))
    return {{driver_, pr::error(pr::code::kValidation, "trial was recorded in a different world")}};

  auto t = std::make_unique<ActiveTrial>();
  t->id = msg.value("trial_id", rec->trial_id);
  rec->trial_id = t->id;
  t->replay = std::move(rec);
  trial_ = std::move(t);
  std::vector<Outbound> out;
  pr::json start = pr::trial_start(trial_->id, false);
  start["replay"] = true;
  out.push_back({std::nullopt, start});
  out.push_back({std::nullopt, pr::tick_telemetry(trial_->id, 0, current_sample()), true});
  if (trial_->replay->trajectory.size() == 1) end_trial(out, "");
  return out;
}

void Session::advance(std::vector<Outbound>& out) {
  if (trial_->replay) {
    ++trial_->tick;
    out.push_back({std::nullopt, pr::tick_telemetry(trial_->id, trial_->tick, current_sample()), true});
    if (trial_->tick + 1 >= trial_->replay->trajectory.size()) end_trial(out, "");
    return;
  }
  const bool running = trial_->runner->tick(*trial_->driver);
  ++trial_->tick;
  out.push_back({std::nullopt, pr::tick_telemetry(trial_->id, trial_->tick, trial_->runner->last()), true});
  if (!running) end_trial(out, "");
}

void Session::end_trial(std::vector<Outbound>& out, const std::string& reason) {
  if (trial_->replay) {
    // Replays report the stored record and leave the session history alone.
    TrialRecord& rec = *trial_->replay;
    if (!reason.empty()) rec.stop_reason = reason;
    pr::json end = pr::trial_end(rec);
    end["replay"] = true;
    out.push_back({std::nullopt, end});
    trial_.reset();
    return;
  }
  TrialRecord rec = trial_->runner->finish(*trial_->driver, reason);
  rec.trial_id = trial_->id;
  rec.config = snapshot(ctx_);
  last_pose_ = rec.trajectory.back().pose;
  history_.push_back({rec.trial_id, rec.metrics.dist, rec.metrics.e_diff});
  out.push_back({std::nullopt, pr::trial_end(rec)});
  completed_.push_back(std::move(rec));
  trial_.reset();
  pending_ = GestureCommand{};
}

std::vector<Outbound> Session::on_timer() {
  std::vector<Outbound> out;
  if (free_running()) advance(out);
  return out;
}

std::vector<ClientId> Session::greeted_clients() const {
  std::vector<ClientId> ids;
  for (const auto& [id, c] : clients_)
    if (c.greeted) ids.push_back(id);
  return ids;
}

std::vector<TrialRecord> Session::take_completed() { return std::exchange(completed_, {}); }

}  // namespace bmi
