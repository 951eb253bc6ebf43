#pragma once

#include <array>
#include <cmath>
#include <variant>
#include <vector>

namespace ttb {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 rotate(Vec2 v, double angle_rad) {
  double c = std::cos(angle_rad), s = std::sin(angle_rad);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  while (a <= -M_PI) a += 2.0 * M_PI;
  while (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

struct Aabb {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  void expand(Vec2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
};

// Object outline in the object's own frame, centred on the origin.
// Either a disc or a simple polygon (counter-clockwise).
struct Footprint {
  struct Circle {
    double radius = 0.0;
  };
  struct Polygon {
    std::vector<Vec2> vertices;
  };
  std::variant<Circle, Polygon> shape;

  static Footprint circle(double radius) { return {Circle{radius}}; }
  static Footprint polygon(std::vector<Vec2> vertices) { return {Polygon{std::move(vertices)}}; }

  bool is_circle() const { return std::holds_alternative<Circle>(shape); }

  // Strict interior test for a point given the footprint's world placement.
  bool contains(Vec2 world_point, Vec2 center, double yaw_rad) const;

  // World axis-aligned bounding box for the given placement.
  Aabb world_aabb(Vec2 center, double yaw_rad) const;

  // Largest center distance any outline point can reach.
  double outer_radius() const;
};

// Strict point-in-polygon (crossing number); boundary points count as outside.
bool point_in_polygon_strict(Vec2 p, const std::vector<Vec2>& poly);

}  // namespace ttb
