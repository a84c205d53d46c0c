#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace fdmm {

/// Error raised for invalid input anywhere in the engine. The message is the
/// user-facing reason ("no points", "degenerate segment", ...).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// WGS84 position in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Position (or displacement) in the local metric frame: x east, y north.
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;

  PlanePoint& operator+=(PlanePoint o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  PlanePoint& operator-=(PlanePoint o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend PlanePoint operator+(PlanePoint a, PlanePoint b) { return a += b; }
  friend PlanePoint operator-(PlanePoint a, PlanePoint b) { return a -= b; }
  friend PlanePoint operator*(double s, PlanePoint p) { return {s * p.x, s * p.y}; }
  friend PlanePoint operator*(PlanePoint p, double s) { return {s * p.x, s * p.y}; }
  friend PlanePoint operator-(PlanePoint p) { return {-p.x, -p.y}; }
  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

using Vec2 = PlanePoint;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(PlanePoint a, PlanePoint b) { return norm(b - a); }

/// Local equirectangular projection centred on `origin`.
struct Projection {
  static constexpr double kMetersPerDegLat = 111320.0;

  GeoPoint origin;
  double meters_per_deg_lat = kMetersPerDegLat;
  double meters_per_deg_lon = kMetersPerDegLat;

  static Projection centered_at(GeoPoint origin);
};

/// Projection centred on the bounding-box centroid of `points`.
/// Throws Error("no points") for an empty sequence.
Projection make_projection(std::span<const GeoPoint> points);

PlanePoint project(GeoPoint p, const Projection& proj);
GeoPoint unproject(PlanePoint p, const Projection& proj);

enum class FootKind { perpendicular, endpoint };

struct SegmentDistance {
  double distance = 0.0;
  PlanePoint foot;
  FootKind kind = FootKind::perpendicular;
  /// Position of the foot along a->b in [0, 1].
  double t = 0.0;
};

/// Distance from p to the closed segment [a, b]. The perpendicular foot is
/// used when it falls inside the segment, otherwise the nearer endpoint.
SegmentDistance dist_point_segment(PlanePoint p, PlanePoint a, PlanePoint b);

/// Unbounded perpendicular distance from p to the line through a and b.
double dist_point_line(PlanePoint p, PlanePoint a, PlanePoint b);

/// Distance from p to the midpoint of [a, b].
double dist_point_midpoint(PlanePoint p, PlanePoint a, PlanePoint b);

/// Cosine of the angle between u and v. Throws Error("undefined heading")
/// when either vector has zero length.
double cos_between(Vec2 u, Vec2 v);

}  // namespace fdmm
