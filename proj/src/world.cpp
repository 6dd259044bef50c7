#include "bmi/world.hpp"

#include "bmi/error.hpp"
#include "bmi/hash.hpp"
#include "bmi/json_io.hpp"
#include "bmi/util.hpp"

#include <Eigen/Geometry>

namespace bmi {

void World::validate(double body_radius) const {
  if (prescribed_path.rows() < 2) throw ValidationError("world '" + id + "' needs a path of >= 2 points");
  if (!prescribed_path.allFinite()) throw ValidationError("world '" + id + "' has a non-finite path point");
  if (!(goal_radius > 0.0)) throw ValidationError("world '" + id + "' needs a positive goal radius");
  VehicleParams vp;
  vp.body_radius = body_radius;
  if (auto c = check_collision(start, vp, *this))
    throw ValidationError("world '" + id + "' start pose collides with wall " + std::to_string(c->wall));
}

std::optional<Contact> check_collision(const Pose& p, const VehicleParams& vp, const World& w) {
  const Vec2d x = p.position();
  for (std::size_t i = 0; i < w.walls.size(); ++i) {
    const Vec2d q = closest_point_on_segment(x, w.walls[i].a, w.walls[i].b);
    const double d = (x - q).norm();
    if (d < vp.body_radius) return Contact{i, q, d};
  }
  return std::nullopt;
}

World transformed(const World& w, double rotation, const Vec2d& translation) {
  const Eigen::Rotation2Dd rot(rotation);
  auto map = [&](const Vec2d& p) -> Vec2d { return rot * p + translation; };
  World out = w;
  for (auto& s : out.walls) {
    s.a = map(s.a);
    s.b = map(s.b);
  }
  for (Eigen::Index i = 0; i < out.prescribed_path.rows(); ++i)
    out.prescribed_path.row(i) = map(row_point(w.prescribed_path, i)).transpose();
  const Vec2d s = map(w.start.position());
  out.start = {s.x(), s.y(), normalize_angle(w.start.theta + rotation)};
  out.goal_center = map(w.goal_center);
  return out;
}

World corridor_world() {
  World w;
  w.id = "corridor";
  w.prescribed_path.resize(4, 2);
  w.prescribed_path << 0, 0, 8, 0, 8, 6, 16, 6;
  auto wall = [](double ax, double ay, double bx, double by) { return Segment{{ax, ay}, {bx, by}}; };
  // Right-hand wall, 1.5 m outside the path.
  w.walls.push_back(wall(-1.0, -1.5, 9.5, -1.5));
  w.walls.push_back(wall(9.5, -1.5, 9.5, 4.5));
  w.walls.push_back(wall(9.5, 4.5, 17.0, 4.5));
  // Left-hand wall.
  w.walls.push_back(wall(-1.0, 1.5, 6.5, 1.5));
  w.walls.push_back(wall(6.5, 1.5, 6.5, 7.5));
  w.walls.push_back(wall(6.5, 7.5, 17.0, 7.5));
  // End caps.
  w.walls.push_back(wall(-1.0, -1.5, -1.0, 1.5));
  w.walls.push_back(wall(17.0, 4.5, 17.0, 7.5));
  w.start = {0.0, 0.0, 0.0};
  w.goal_center = {16.0, 6.0};
  w.goal_radius = 0.6;
  return w;
}

std::string format_world(const World& w) { return to_json(w).dump(2) + "\n"; }

World parse_world(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "bworld") throw FormatError("not a bworld document");
    return world_from_json(j);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed world file: ") + e.what());
  }
}

World read_world(const std::string& path) { return parse_world(read_file(path)); }

void write_world(const std::string& path, const World& w) { write_file_atomic(path, format_world(w)); }

std::string world_hash(const World& w) { return content_hash(to_json(w).dump()); }

}  // namespace bmi
