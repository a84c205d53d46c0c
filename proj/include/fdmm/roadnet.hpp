#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fdmm/geo.hpp"

namespace fdmm {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

struct RoadNode {
  std::string id;
  PlanePoint pos;
  GeoPoint geo;
};

/// Directed straight road segment. A two-way street declared as `E 7 ...`
/// becomes edge "7" (from -> to) and its twin "-7" (to -> from).
struct RoadEdge {
  std::string id;
  NodeIndex from = 0;
  NodeIndex to = 0;
  double length = 0.0;
  std::string way_name;
  std::string street_id;
  std::optional<EdgeIndex> twin;
};

/// Uniform grid bucketing edges by the cells their bounding boxes overlap.
class SpatialGrid {
public:
  explicit SpatialGrid(double cell_size = 100.0);

  double cell_size() const { return cell_size_; }
  void insert(EdgeIndex edge, PlanePoint a, PlanePoint b);

  /// Edges stored in any cell overlapping the axis-aligned box [lo, hi].
  /// Sorted, without duplicates.
  std::vector<EdgeIndex> query_box(PlanePoint lo, PlanePoint hi) const;

private:
  std::int64_t cell_of(double v) const;
  static std::uint64_t key(std::int64_t cx, std::int64_t cy);

  double cell_size_;
  std::unordered_map<std::uint64_t, std::vector<EdgeIndex>> cells_;
};

struct EdgeHit {
  EdgeIndex edge = 0;
  double distance = 0.0;
};

/// Position along a directed edge, `offset` meters from its tail.
struct EdgePosition {
  EdgeIndex edge = 0;
  double offset = 0.0;
};

/// Traversal of [entry, exit] meters along one directed edge.
struct PathStep {
  EdgeIndex edge = 0;
  double entry = 0.0;
  double exit = 0.0;

  double length() const { return exit - entry; }
};

struct Route {
  std::vector<PathStep> steps;
  double length = 0.0;
};

/// Directed road graph with a spatial index. Built once, then only read.
class RoadGraph {
public:
  explicit RoadGraph(Projection proj, double cell_size = 100.0);

  NodeIndex add_node(std::string id, GeoPoint geo);

  /// Declares a street between two nodes. One-way streets yield one directed
  /// edge, others a pair. Returns false (and adds nothing) for a zero-length
  /// street.
  bool add_street(const std::string& id, NodeIndex from, NodeIndex to, bool oneway,
                  std::string way_name = {});

  const Projection& projection() const { return proj_; }
  const SpatialGrid& grid() const { return grid_; }
  const std::vector<RoadNode>& nodes() const { return nodes_; }
  const std::vector<RoadEdge>& edges() const { return edges_; }
  const RoadNode& node(NodeIndex n) const { return nodes_.at(n); }
  const RoadEdge& edge(EdgeIndex e) const { return edges_.at(e); }
  const std::vector<EdgeIndex>& out_edges(NodeIndex n) const { return out_.at(n); }

  PlanePoint tail_pos(EdgeIndex e) const { return nodes_[edges_[e].from].pos; }
  PlanePoint head_pos(EdgeIndex e) const { return nodes_[edges_[e].to].pos; }
  PlanePoint point_at(EdgePosition at) const;
  Vec2 direction(EdgeIndex e) const { return head_pos(e) - tail_pos(e); }

  std::optional<NodeIndex> find_node(std::string_view id) const;
  std::optional<EdgeIndex> find_edge(std::string_view id) const;

  /// All edges whose segment distance to p is at most r.
  std::vector<EdgeHit> edges_within(PlanePoint p, double r) const;

private:
  EdgeIndex add_edge(const std::string& id, const std::string& street_id, NodeIndex from,
                     NodeIndex to, const std::string& name);

  Projection proj_;
  SpatialGrid grid_;
  std::vector<RoadNode> nodes_;
  std::vector<RoadEdge> edges_;
  std::vector<std::vector<EdgeIndex>> out_;
  std::unordered_map<std::string, NodeIndex> node_ids_;
  std::unordered_map<std::string, EdgeIndex> edge_ids_;
};

struct LoadStats {
  std::size_t streets_declared = 0;
  std::size_t streets_dropped = 0;
};

/// Parses the line-oriented road file:
///   N <id> <lat> <lon>
///   E <id> <from> <to> <oneway:0|1> [name]
/// Without a projection, one is centred on the node bounding box.
RoadGraph load_graph(std::istream& in, std::optional<Projection> proj = std::nullopt,
                     LoadStats* stats = nullptr);
RoadGraph load_graph(const std::filesystem::path& path,
                     std::optional<Projection> proj = std::nullopt, LoadStats* stats = nullptr);

void write_road_file(const RoadGraph& g, std::ostream& out);

std::vector<EdgeHit> edges_within(const RoadGraph& g, PlanePoint p, double r);

/// Minimum-length directed route between two edge positions, including the
/// partial first and last edges. nullopt when `to` is unreachable.
/// A position at offset 0 also counts as standing on the edge's tail node,
/// and one at the full length as standing on its head node.
std::optional<Route> shortest_path(const RoadGraph& g, EdgePosition from, EdgePosition to);

}  // namespace fdmm
