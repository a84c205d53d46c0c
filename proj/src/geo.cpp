#include "fdmm/geo.hpp"

#include <algorithm>
#include <numbers>

namespace fdmm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void require_segment(PlanePoint a, PlanePoint b) {
  if (a == b) throw Error("degenerate segment");
}

}  // namespace

Projection Projection::centered_at(GeoPoint origin) {
  Projection proj;
  proj.origin = origin;
  proj.meters_per_deg_lat = kMetersPerDegLat;
  proj.meters_per_deg_lon = kMetersPerDegLat * std::cos(origin.lat * kDegToRad);
  return proj;
}

Projection make_projection(std::span<const GeoPoint> points) {
  if (points.empty()) throw Error("no points");
  auto [min_lat, max_lat] = std::minmax_element(
      points.begin(), points.end(), [](const auto& a, const auto& b) { return a.lat < b.lat; });
  auto [min_lon, max_lon] = std::minmax_element(
      points.begin(), points.end(), [](const auto& a, const auto& b) { return a.lon < b.lon; });
  return Projection::centered_at(
      {0.5 * (min_lat->lat + max_lat->lat), 0.5 * (min_lon->lon + max_lon->lon)});
}

PlanePoint project(GeoPoint p, const Projection& proj) {
  return {(p.lon - proj.origin.lon) * proj.meters_per_deg_lon,
          (p.lat - proj.origin.lat) * proj.meters_per_deg_lat};
}

GeoPoint unproject(PlanePoint p, const Projection& proj) {
  return {proj.origin.lat + p.y / proj.meters_per_deg_lat,
          proj.origin.lon + p.x / proj.meters_per_deg_lon};
}

SegmentDistance dist_point_segment(PlanePoint p, PlanePoint a, PlanePoint b) {
  require_segment(a, b);
  const Vec2 ab = b - a;
  const double t = dot(p - a, ab) / dot(ab, ab);
  if (t < 0.0) return {distance(p, a), a, FootKind::endpoint, 0.0};
  if (t > 1.0) return {distance(p, b), b, FootKind::endpoint, 1.0};
  const PlanePoint foot = a + t * ab;
  return {distance(p, foot), foot, FootKind::perpendicular, t};
}

double dist_point_line(PlanePoint p, PlanePoint a, PlanePoint b) {
  require_segment(a, b);
  const Vec2 ab = b - a;
  return std::abs(cross(ab, p - a)) / norm(ab);
}

double dist_point_midpoint(PlanePoint p, PlanePoint a, PlanePoint b) {
  require_segment(a, b);
  return distance(p, 0.5 * (a + b));
}

double cos_between(Vec2 u, Vec2 v) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error("undefined heading");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

}  // namespace fdmm
