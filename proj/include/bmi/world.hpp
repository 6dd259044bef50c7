#pragma once

// 2D training world: wall segments, the prescribed guide path, start pose and
// goal disc. Stored as `.bworld` JSON documents.

#include "bmi/geometry.hpp"
#include "bmi/kinematics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmi {

struct Segment {
  Vec2d a = Vec2d::Zero();
  Vec2d b = Vec2d::Zero();
};

struct World {
  std::string id;
  std::vector<Segment> walls;
  Polylined prescribed_path;
  Pose start;
  Vec2d goal_center = Vec2d::Zero();
  double goal_radius = 0.5;

  /// Path has at least two points and the start pose is collision-free for
  /// the given body radius.
  void validate(double body_radius) const;
  bool at_goal(const Pose& p) const { return (p.position() - goal_center).norm() <= goal_radius; }
};

struct Contact {
  std::size_t wall = 0;
  Vec2d point = Vec2d::Zero();  // closest point on the wall
  double distance = 0.0;
};

/// First wall (in list order) closer than body_radius to the pose's position.
std::optional<Contact> check_collision(const Pose& p, const VehicleParams& vp, const World& w);

/// Apply a rigid motion (rotation about the origin, then translation) to
/// every coordinate of the world.
World transformed(const World& w, double rotation, const Vec2d& translation);

/// Straight-then-turning corridor used by the learning suite and examples.
World corridor_world();

std::string format_world(const World& w);
World parse_world(const std::string& text);
World read_world(const std::string& path);
void write_world(const std::string& path, const World& w);
std::string world_hash(const World& w);

}  // namespace bmi
