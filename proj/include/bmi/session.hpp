#pragma once

// Session configuration and the transport-independent session core.
//
// Session consumes protocol lines from numbered clients and produces the
// messages to send back. The TCP server (transport.hpp) and the in-process
// test harness both drive the same core, which is what makes a session run
// over the network reproduce an in-process run exactly.

#include "bmi/calibration.hpp"
#include "bmi/control.hpp"
#include "bmi/learner.hpp"
#include "bmi/protocol.hpp"
#include "bmi/trial.hpp"
#include "bmi/world.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bmi {

enum class SessionMode { Live, Replay, Scripted };
std::string_view to_string(SessionMode m);
SessionMode parse_session_mode(std::string_view name);

struct SessionConfig {
  std::string world;        // .bworld path, or "builtin:corridor"
  std::string calibration;  // .bcal path; empty fits one from calibration_recording
  std::string calibration_recording;
  VehicleParams vehicle{0.5, 2.0, 0.35};
  PipelineConfig pipeline;
  bool auto_tune = true;  // derive dead-zone and gains from the calibration
  ChannelLayout layout = ChannelLayout::default_shirt();
  SignalModelParams signal = SignalModelParams::defaults(ChannelLayout::default_shirt());
  TrialSettings trial;
  SessionMode mode = SessionMode::Scripted;
  std::uint64_t seed = 7;
  std::string out_dir;
  /// Probability of discarding each gesture during a free-running trial, to
  /// mimic a lossy datagram link. Lockstep trials never drop.
  double gesture_drop_rate = 0.0;

  void validate() const;
};

/// Parse a config document. Relative refs resolve against base_dir, then the
/// BMI_DATA_DIR environment variable.
SessionConfig parse_session_config(const std::string& text, const std::string& base_dir);
SessionConfig load_session_config(const std::string& path);

std::string data_dir();

/// Resolved inputs: the loaded world, calibration, and (possibly tuned)
/// pipeline configuration.
struct SessionContext {
  SessionConfig config;
  World world;
  CalibrationModel calibration;
  PipelineConfig pipeline;
};

SessionContext resolve(const SessionConfig& config);

/// JSON snapshot of every resolved setting that influences a trial.
std::string snapshot(const SessionContext& ctx);

/// Generator seed for the index-th trial of a session.
std::uint64_t trial_seed(std::uint64_t session_seed, std::size_t index);

/// Gesture source fed from outside; the most recent command wins.
class HeldGestureSource final : public GestureSource {
 public:
  void set(const GestureCommand& cmd) { held_ = cmd.intensities; }
  GestureCommand command(double t, const Observation&) override {
    GestureCommand c;
    c.t = t;
    c.intensities = held_;
    return c;
  }

 private:
  GestureIntensities held_{};
};

/// Run a gesture script the way a lockstep protocol client does: the script
/// is sampled once per tick and held between ticks.
TrialRecord run_scripted_in_process(const SessionContext& ctx, const GestureScript& script,
                                    const std::string& trial_id, std::size_t trial_index = 0);

using ClientId = std::uint64_t;

struct Outbound {
  std::optional<ClientId> to;  // empty broadcasts to every handshaken client
  protocol::json message;
  bool telemetry = false;      // droppable under backpressure
};

class Session {
 public:
  explicit Session(SessionContext ctx);

  std::vector<Outbound> on_connect(ClientId id);
  std::vector<Outbound> on_line(ClientId id, std::string_view line);
  std::vector<Outbound> on_disconnect(ClientId id);
  /// Advance a free-running (non-lockstep) trial by one tick.
  std::vector<Outbound> on_timer();

  bool free_running() const { return trial_ && !trial_->lockstep; }
  double dt() const { return ctx_.config.trial.dt; }
  const SessionContext& context() const { return ctx_; }

  /// Completed trials not yet collected for persistence.
  std::vector<TrialRecord> take_completed();
  const std::vector<CurvePoint>& history() const { return history_; }
  /// Clients that completed the handshake; broadcasts go to these.
  std::vector<ClientId> greeted_clients() const;

 private:
  struct Client {
    bool greeted = false;
    protocol::Role role = protocol::Role::Observer;
  };
  struct ActiveTrial {
    std::string id;
    bool lockstep = false;
    std::uint64_t tick = 0;
    HeldGestureSource source;
    std::unique_ptr<GestureDriver> driver;
    std::unique_ptr<TrialRunner> runner;
    std::optional<TrialRecord> replay;  // set when streaming a stored trial
  };

  std::vector<Outbound> handle(ClientId id, const protocol::json& msg);
  std::vector<Outbound> start_trial(const protocol::json& msg);
  void advance(std::vector<Outbound>& out);
  void end_trial(std::vector<Outbound>& out, const std::string& reason);
  std::vector<Outbound> start_replay(const protocol::json& msg);
  const TrajectorySample& current_sample() const;
  protocol::json snapshot_message() const;

  SessionContext ctx_;
  std::map<ClientId, Client> clients_;
  std::optional<ClientId> driver_;
  std::unique_ptr<ActiveTrial> trial_;
  std::size_t trials_started_ = 0;
  std::vector<TrialRecord> completed_;
  std::vector<CurvePoint> history_;
  Pose last_pose_;
  GestureCommand pending_;  // gesture received outside a trial; seeds the next one
  std::mt19937_64 drop_rng_;
};

}  // namespace bmi
