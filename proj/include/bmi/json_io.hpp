#pragma once

// JSON mappings for the configuration types. Kept out of the domain headers so
// only the file-format code pulls in nlohmann/json.

#include "bmi/calibration.hpp"
#include "bmi/control.hpp"
#include "bmi/kinematics.hpp"
#include "bmi/sensor.hpp"
#include "bmi/world.hpp"

#include "bmi/error.hpp"

#include <json.hpp>

namespace bmi {

using json = nlohmann::json;

json to_json(const ChannelLayout& layout);
ChannelLayout layout_from_json(const json& j);

json to_json(const SignalModelParams& p);
SignalModelParams signal_params_from_json(const json& j, const ChannelLayout& layout);

json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const json& j);

json to_json(const VehicleParams& v);
VehicleParams vehicle_params_from_json(const json& j);

json to_json(const World& w);
World world_from_json(const json& j);

json to_json(const GestureCommand& c);
/// Rejects unknown gesture ids; activations are not clamped here.
GestureCommand gesture_command_from_json(const json& j);

json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

/// Read a required field, converting nlohmann type errors into FormatError.
template <typename T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad field '") + key + "': " + e.what());
  }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace bmi
