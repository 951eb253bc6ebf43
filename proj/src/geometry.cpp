#include "ttb/geometry.hpp"

#include <algorithm>

namespace ttb {

bool point_in_polygon_strict(Vec2 p, const std::vector<Vec2>& poly) {
  // On-edge points are resolved as outside by nudging the crossing test:
  // count edge crossings of the horizontal ray, then reject points that lie
  // on an edge within a small tolerance.
  const double kEdgeEps = 1e-12;
  bool inside = false;
  size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    Vec2 a = poly[j], b = poly[i];
    // Distance from p to segment ab.
    Vec2 ab = b - a, ap = p - a;
    double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = len2 > 0 ? std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0) : 0.0;
    Vec2 closest = a + ab * t;
    if ((p - closest).norm() <= kEdgeEps) return false;

    if ((a.y > p.y) != (b.y > p.y)) {
      double x_at = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x_at) inside = !inside;
    }
  }
  return inside;
}

bool Footprint::contains(Vec2 world_point, Vec2 center, double yaw_rad) const {
  if (const auto* c = std::get_if<Circle>(&shape))
    return (world_point - center).norm() < c->radius;
  const auto& poly = std::get<Polygon>(shape).vertices;
  // Transform the query point into the object frame.
  Vec2 local = rotate(world_point - center, -yaw_rad);
  return point_in_polygon_strict(local, poly);
}

Aabb Footprint::world_aabb(Vec2 center, double yaw_rad) const {
  if (const auto* c = std::get_if<Circle>(&shape))
    return {center.x - c->radius, center.y - c->radius, center.x + c->radius,
            center.y + c->radius};
  const auto& poly = std::get<Polygon>(shape).vertices;
  Aabb box{1e300, 1e300, -1e300, -1e300};
  for (Vec2 v : poly) box.expand(center + rotate(v, yaw_rad));
  return box;
}

double Footprint::outer_radius() const {
  if (const auto* c = std::get_if<Circle>(&shape)) return c->radius;
  double r = 0.0;
  for (Vec2 v : std::get<Polygon>(shape).vertices) r = std::max(r, v.norm());
  return r;
}

}  // namespace ttb
