#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdmm/geo.hpp"
#include "fdmm/roadnet.hpp"
#include "fdmm/trajectory.hpp"

namespace fdmm {

struct Candidate {
  EdgeIndex edge = 0;
  PlanePoint foot;
  double offset = 0.0;
  double d_s = 0.0;
  double cos_theta = 1.0;
};

enum class SnapScore {
  aligned,  ///< d_s / max(cos_theta, epsilon)
  nearest,  ///< d_s
};

struct SnapConfig {
  std::vector<double> radii{25.0, 50.0, 100.0, 200.0};
  double epsilon = 0.1;
  bool require_alignment = true;
  SnapScore score = SnapScore::aligned;
  /// Route between every `stride`-th point (plus the last one). 1 routes
  /// between all consecutive points; larger values coarsen segmentation.
  std::size_t stride = 1;
  /// Backward moves along the same edge up to this many meters are treated
  /// as standing still instead of forcing a detour around the block. A snap
  /// this close to its edge's head may also be routed as if at the head.
  double reverse_tolerance = 5.0;
  /// A snap is skipped when routing through it is longer than routing from
  /// the previous snap straight to the next one by more than detour_slack.
  bool skip_detours = false;
  double detour_slack = 20.0;

  void validate() const;
};

/// Sets one `snap.*` option (key without the prefix). Returns false for an
/// unknown key.
bool set_snap_option(SnapConfig& cfg, std::string_view key, std::string_view value);

/// Edges within `radius` of p, sorted by d_s then edge id. With
/// `require_alignment`, edges pointing against `heading` are dropped. An
/// undefined heading counts as aligned with everything (cos_theta = 1).
std::vector<Candidate> candidates(PlanePoint p, std::optional<Vec2> heading, const RoadGraph& g,
                                  double radius, bool require_alignment);

struct SnapPoint {
  EdgePosition at;
  PlanePoint foot;
  double cos_theta = 1.0;
  bool inherited = false;
};

struct MatchResult {
  std::string trajectory_id;
  /// Traversed edge fragments in driving order.
  std::vector<PathStep> path;
  /// Indices into `path` where a new piece starts after a routing gap.
  std::vector<std::size_t> breaks;
  /// Snap per trajectory point; empty for points skipped by the stride.
  std::vector<std::optional<SnapPoint>> snapped;
  /// Point index pairs (a, b) between which no route exists.
  std::vector<std::pair<std::size_t, std::size_t>> gaps;
  double path_length = 0.0;
};

/// Snaps every (stride-selected) point to its best-scoring candidate and
/// joins consecutive snaps with directed shortest paths. Throws
/// Error("unmatchable trajectory") when no point has a candidate.
MatchResult snap_route(const Trajectory& t, const RoadGraph& g, const SnapConfig& cfg = {});

/// Matched geometry in the metric frame, one polyline per gap-free piece.
std::vector<std::vector<PlanePoint>> route_plane_geometry(const MatchResult& m, const RoadGraph& g);
/// Same as route_plane_geometry, unprojected to WGS84.
std::vector<std::vector<GeoPoint>> route_geometry(const MatchResult& m, const RoadGraph& g);

/// FeatureCollection: matched route (LineString, or MultiLineString across
/// gaps) and the original fixes as a MultiPoint.
void write_geojson(std::ostream& out, const MatchResult& m, const Trajectory& t,
                   const RoadGraph& g);

/// `trajectory_id,seq,edge_id,entry_offset_m,exit_offset_m`.
void write_edge_csv_header(std::ostream& out);
void write_edge_csv(std::ostream& out, const MatchResult& m, const RoadGraph& g);

/// Rebuilds path and breaks from edge CSV rows of one trajectory.
MatchResult match_from_steps(std::string trajectory_id, std::vector<PathStep> steps,
                             const RoadGraph& g);

}  // namespace fdmm
