#pragma once

// Session wire protocol: one JSON object per line over a stream socket.
// Every message carries a "type" field; see docs/protocol.md for the fields of
// each type. Lengths are metres, angles radians, times seconds.

#include "bmi/trial.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace bmi::protocol {

using json = nlohmann::json;

inline constexpr int kVersion = 1;

enum class Role { Driver, Observer };
std::string_view to_string(Role r);

namespace type {
inline constexpr std::string_view kHello = "hello";
inline constexpr std::string_view kWorldSnapshot = "world_snapshot";
inline constexpr std::string_view kGesture = "gesture";
inline constexpr std::string_view kTickTelemetry = "tick_telemetry";
inline constexpr std::string_view kTrialStart = "trial_start";
inline constexpr std::string_view kTrialEnd = "trial_end";
inline constexpr std::string_view kError = "error";
}  // namespace type

namespace code {
inline constexpr std::string_view kMalformed = "malformed";
inline constexpr std::string_view kVersionMismatch = "version_mismatch";
inline constexpr std::string_view kUnknownType = "unknown_type";
inline constexpr std::string_view kValidation = "validation";
inline constexpr std::string_view kNotDriver = "not_driver";
inline constexpr std::string_view kBadState = "bad_state";
}  // namespace code

/// Serialise with a trailing newline.
std::string encode(const json& msg);

/// Parse one line. Throws ProtocolError when the line is not a JSON object
/// with a string "type" field.
json decode(std::string_view line);

json hello(Role role, double dt);
json client_hello(Role role, int version = kVersion);
json world_snapshot(const World& world, const Pose& pose, const std::string& trial_id, bool trial_active,
                    const json& history);
json gesture(const GestureCommand& cmd, std::optional<std::uint64_t> tick = std::nullopt);
json tick_telemetry(const std::string& trial_id, std::uint64_t tick, const TrajectorySample& s);
json trial_start(const std::string& trial_id, bool lockstep);
json trial_end(const TrialRecord& record);
json error(std::string_view code, const std::string& message);

}  // namespace bmi::protocol
