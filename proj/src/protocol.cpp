#include "bmi/protocol.hpp"

#include "bmi/error.hpp"
#include "bmi/json_io.hpp"

namespace bmi::protocol {

std::string_view to_string(Role r) { return r == Role::Driver ? "driver" : "observer"; }

std::string encode(const json& msg) { return msg.dump() + "\n"; }

json decode(std::string_view line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("not valid JSON: ") + e.what());
  }
  if (!msg.is_object()) throw ProtocolError("message must be a JSON object");
  if (!msg.contains("type") || !msg.at("type").is_string()) throw ProtocolError("message needs a string 'type'");
  return msg;
}

json hello(Role role, double dt) {
  return {{"type", type::kHello}, {"version", kVersion}, {"role", to_string(role)}, {"dt", dt}};
}

json client_hello(Role role, int version) {
  return {{"type", type::kHello}, {"version", version}, {"role", to_string(role)}};
}

json world_snapshot(const World& world, const Pose& pose, const std::string& trial_id, bool trial_active,
                    const json& history) {
  return {{"type", type::kWorldSnapshot},
          {"world", to_json(world)},
          {"pose", {{"x", pose.x}, {"y", pose.y}, {"theta", pose.theta}}},
          {"trial", {{"id", trial_id}, {"active", trial_active}}},
          {"history", history}};
}

json gesture(const GestureCommand& cmd, std::optional<std::uint64_t> tick) {
  json m = to_json(cmd);
  m["type"] = type::kGesture;
  if (tick) m["tick"] = *tick;
  return m;
}

json tick_telemetry(const std::string& trial_id, std::uint64_t tick, const TrajectorySample& s) {
  return {{"type", type::kTickTelemetry},
          {"trial_id", trial_id},
          {"tick", tick},
          {"t", s.t},
          {"x", s.pose.x},
          {"y", s.pose.y},
          {"theta", s.pose.theta},
          {"u1", s.u1},
          {"u2", s.u2}};
}

json trial_start(const std::string& trial_id, bool lockstep) {
  return {{"type", type::kTrialStart}, {"trial_id", trial_id}, {"lockstep", lockstep}};
}

json trial_end(const TrialRecord& record) {
  return {{"type", type::kTrialEnd},
          {"trial_id", record.trial_id},
          {"stop_reason", record.stop_reason},
          {"samples", record.trajectory.size()},
          {"metrics", {{"dist", record.metrics.dist}, {"e_diff", record.metrics.e_diff}}}};
}

json error(std::string_view code, const std::string& message) {
  return {{"type", type::kError}, {"code", code}, {"message", message}};
}

}  // namespace bmi::protocol
