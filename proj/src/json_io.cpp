#include "bmi/json_io.hpp"

namespace bmi {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("expected numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError("expected numeric array element");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const ChannelLayout& layout) {
  json groups = json::object();
  for (const auto& [g, idx] : layout.groups) groups[std::string(to_string(g))] = idx;
  return {{"total_channels", layout.total_channels}, {"groups", groups}};
}

ChannelLayout layout_from_json(const json& j) {
  ChannelLayout layout;
  layout.total_channels = required<std::size_t>(j, "total_channels");
  const json& groups = j.at("groups");
  if (!groups.is_object()) throw FormatError("layout groups must be an object");
  for (const auto& [name, idx] : groups.items()) {
    try {
      layout.groups[parse_joint_group(name)] = idx.get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      throw FormatError("bad channel list for group '" + name + "': " + e.what());
    }
  }
  layout.validate();
  return layout;
}

json to_json(const SignalModelParams& p) {
  json gains = json::object();
  for (Gesture g : kGestures) gains[std::string(to_string(g))] = vector_to_json(p.gain(g));
  return {{"relaxation_time", p.relaxation_time}, {"drift_rate", p.drift_rate},
          {"noise_std", p.noise_std},             {"sample_rate", p.sample_rate},
          {"baseline", vector_to_json(p.baseline)}, {"gain_per_gesture", gains}};
}

SignalModelParams signal_params_from_json(const json& j, const ChannelLayout& layout) {
  SignalModelParams p = SignalModelParams::defaults(layout);
  p.relaxation_time = optional_field(j, "relaxation_time", p.relaxation_time);
  p.drift_rate = optional_field(j, "drift_rate", p.drift_rate);
  p.noise_std = optional_field(j, "noise_std", p.noise_std);
  p.sample_rate = optional_field(j, "sample_rate", p.sample_rate);
  if (j.contains("baseline")) p.baseline = vector_from_json(j.at("baseline"));
  if (j.contains("gain_per_gesture")) {
    for (const auto& [name, v] : j.at("gain_per_gesture").items())
      p.gain_per_gesture[static_cast<std::size_t>(parse_gesture(name))] = vector_from_json(v);
  }
  p.validate();
  return p;
}

json to_json(const PipelineConfig& c) {
  return {{"dead_zone", c.dead_zone}, {"derivative_smoothing", c.derivative_smoothing},
          {"u1_gain", c.u1_gain},     {"u2_gain", c.u2_gain},
          {"u1_leak", c.u1_leak},     {"clamp", c.clamp}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  c.dead_zone = optional_field(j, "dead_zone", c.dead_zone);
  c.derivative_smoothing = optional_field(j, "derivative_smoothing", c.derivative_smoothing);
  c.u1_gain = optional_field(j, "u1_gain", c.u1_gain);
  c.u2_gain = optional_field(j, "u2_gain", c.u2_gain);
  c.u1_leak = optional_field(j, "u1_leak", c.u1_leak);
  c.clamp = optional_field(j, "clamp", c.clamp);
  c.validate();
  return c;
}

json to_json(const VehicleParams& v) {
  return {{"max_forward_velocity", v.max_forward_velocity},
          {"max_rotational_velocity", v.max_rotational_velocity},
          {"body_radius", v.body_radius}};
}

VehicleParams vehicle_params_from_json(const json& j) {
  VehicleParams v;
  v.max_forward_velocity = optional_field(j, "max_forward_velocity", v.max_forward_velocity);
  v.max_rotational_velocity = optional_field(j, "max_rotational_velocity", v.max_rotational_velocity);
  v.body_radius = optional_field(j, "body_radius", v.body_radius);
  v.validate();
  return v;
}

namespace {

json point_json(const Vec2d& p) { return json::array({p.x(), p.y()}); }

Vec2d point_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw FormatError("expected [x, y] point");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json to_json(const World& w) {
  json walls = json::array();
  for (const auto& s : w.walls) walls.push_back(json::array({point_json(s.a), point_json(s.b)}));
  json path = json::array();
  for (Eigen::Index i = 0; i < w.prescribed_path.rows(); ++i)
    path.push_back(point_json(row_point(w.prescribed_path, i)));
  return {{"format", "bworld"},
          {"version", 1},
          {"id", w.id},
          {"walls", walls},
          {"prescribed_path", path},
          {"start", {{"x", w.start.x}, {"y", w.start.y}, {"theta", w.start.theta}}},
          {"goal", {{"center", point_json(w.goal_center)}, {"radius", w.goal_radius}}}};
}

World world_from_json(const json& j) {
  World w;
  w.id = required<std::string>(j, "id");
  if (!j.contains("walls") || !j.at("walls").is_array()) throw FormatError("world needs a walls array");
  for (const auto& s : j.at("walls")) {
    if (!s.is_array() || s.size() != 2) throw FormatError("wall must be [[x,y],[x,y]]");
    w.walls.push_back({point_from(s[0]), point_from(s[1])});
  }
  if (!j.contains("prescribed_path") || !j.at("prescribed_path").is_array())
    throw FormatError("world needs a prescribed_path array");
  const auto& path = j.at("prescribed_path");
  w.prescribed_path.resize(static_cast<Eigen::Index>(path.size()), 2);
  for (std::size_t i = 0; i < path.size(); ++i)
    w.prescribed_path.row(static_cast<Eigen::Index>(i)) = point_from(path[i]).transpose();
  const json& start = j.at("start");
  w.start = {required<double>(start, "x"), required<double>(start, "y"),
             normalize_angle(required<double>(start, "theta"))};
  const json& goal = j.at("goal");
  w.goal_center = point_from(goal.at("center"));
  w.goal_radius = required<double>(goal, "radius");
  return w;
}

json to_json(const GestureCommand& c) {
  json in = json::object();
  for (Gesture g : kGestures) in[std::string(to_string(g))] = c[g];
  return {{"t", c.t}, {"intensities", in}};
}

GestureCommand gesture_command_from_json(const json& j) {
  GestureCommand c;
  c.t = optional_field(j, "t", 0.0);
  if (!j.contains("intensities") || !j.at("intensities").is_object())
    throw FormatError("gesture needs an intensities object");
  for (const auto& [name, v] : j.at("intensities").items()) {
    if (!v.is_number()) throw FormatError("gesture intensity for '" + name + "' must be numeric");
    c[parse_gesture(name)] = v.get<double>();
  }
  return c;
}

}  // namespace bmi
