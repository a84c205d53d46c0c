#include "fdmm/roadnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace fdmm {

// ---------------------------------------------------------------------------
// SpatialGrid

SpatialGrid::SpatialGrid(double cell_size) : cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw Error("cell size must be positive");
}

std::int64_t SpatialGrid::cell_of(double v) const {
  return static_cast<std::int64_t>(std::floor(v / cell_size_));
}

std::uint64_t SpatialGrid::key(std::int64_t cx, std::int64_t cy) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
         static_cast<std::uint32_t>(cy);
}

void SpatialGrid::insert(EdgeIndex edge, PlanePoint a, PlanePoint b) {
  const auto x0 = cell_of(std::min(a.x, b.x)), x1 = cell_of(std::max(a.x, b.x));
  const auto y0 = cell_of(std::min(a.y, b.y)), y1 = cell_of(std::max(a.y, b.y));
  for (auto cx = x0; cx <= x1; ++cx)
    for (auto cy = y0; cy <= y1; ++cy) cells_[key(cx, cy)].push_back(edge);
}

std::vector<EdgeIndex> SpatialGrid::query_box(PlanePoint lo, PlanePoint hi) const {
  std::vector<EdgeIndex> out;
  const auto x0 = cell_of(lo.x), x1 = cell_of(hi.x);
  const auto y0 = cell_of(lo.y), y1 = cell_of(hi.y);
  for (auto cx = x0; cx <= x1; ++cx) {
    for (auto cy = y0; cy <= y1; ++cy) {
      auto it = cells_.find(key(cx, cy));
      if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// RoadGraph

RoadGraph::RoadGraph(Projection proj, double cell_size) : proj_(proj), grid_(cell_size) {}

NodeIndex RoadGraph::add_node(std::string id, GeoPoint geo) {
  if (node_ids_.contains(id)) throw Error(fmt::format("duplicate node id '{}'", id));
  const auto idx = static_cast<NodeIndex>(nodes_.size());
  node_ids_.emplace(id, idx);
  nodes_.push_back({std::move(id), project(geo, proj_), geo});
  out_.emplace_back();
  return idx;
}

EdgeIndex RoadGraph::add_edge(const std::string& id, const std::string& street_id,
                              NodeIndex from, NodeIndex to, const std::string& name) {
  if (edge_ids_.contains(id)) throw Error(fmt::format("duplicate edge id '{}'", id));
  const auto idx = static_cast<EdgeIndex>(edges_.size());
  const PlanePoint a = nodes_[from].pos, b = nodes_[to].pos;
  edges_.push_back({id, from, to, distance(a, b), name, street_id, std::nullopt});
  edge_ids_.emplace(id, idx);
  out_[from].push_back(idx);
  grid_.insert(idx, a, b);
  return idx;
}

bool RoadGraph::add_street(const std::string& id, NodeIndex from, NodeIndex to, bool oneway,
                           std::string way_name) {
  if (from >= nodes_.size() || to >= nodes_.size()) throw Error("edge references missing node");
  if (from == to || nodes_[from].pos == nodes_[to].pos) return false;
  if (!oneway && edge_ids_.contains("-" + id))
    throw Error(fmt::format("duplicate edge id '-{}'", id));
  const EdgeIndex fwd = add_edge(id, id, from, to, way_name);
  if (!oneway) {
    const EdgeIndex bwd = add_edge("-" + id, id, to, from, way_name);
    edges_[fwd].twin = bwd;
    edges_[bwd].twin = fwd;
  }
  return true;
}

PlanePoint RoadGraph::point_at(EdgePosition at) const {
  const auto& e = edges_.at(at.edge);
  return tail_pos(at.edge) + (at.offset / e.length) * direction(at.edge);
}

std::optional<NodeIndex> RoadGraph::find_node(std::string_view id) const {
  auto it = node_ids_.find(std::string(id));
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeIndex> RoadGraph::find_edge(std::string_view id) const {
  auto it = edge_ids_.find(std::string(id));
  if (it == edge_ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<EdgeHit> RoadGraph::edges_within(PlanePoint p, double r) const {
  if (!(r > 0.0)) throw Error("query radius must be positive");
  std::vector<EdgeHit> hits;
  for (EdgeIndex e : grid_.query_box({p.x - r, p.y - r}, {p.x + r, p.y + r})) {
    const double d = dist_point_segment(p, tail_pos(e), head_pos(e)).distance;
    if (d <= r) hits.push_back({e, d});
  }
  return hits;
}

std::vector<EdgeHit> edges_within(const RoadGraph& g, PlanePoint p, double r) {
  return g.edges_within(p, r);
}

// ---------------------------------------------------------------------------
// Road file I/O

namespace {

struct NodeRecord {
  std::string id;
  GeoPoint geo;
};

struct StreetRecord {
  std::string id, from, to, name;
  bool oneway = false;
  std::size_t line = 0;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void parse_fail(std::size_t line, std::string_view what) {
  throw Error(fmt::format("road file line {}: {}", line, what));
}

}  // namespace

RoadGraph load_graph(std::istream& in, std::optional<Projection> proj, LoadStats* stats) {
  std::vector<NodeRecord> nodes;
  std::vector<StreetRecord> streets;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "N") {
      NodeRecord n;
      if (!(ss >> n.id >> n.geo.lat >> n.geo.lon)) parse_fail(line_no, "expected N <id> <lat> <lon>");
      if (std::abs(n.geo.lat) > 90.0 || std::abs(n.geo.lon) > 180.0)
        parse_fail(line_no, "coordinate out of range");
      nodes.push_back(std::move(n));
    } else if (tag == "E") {
      StreetRecord s;
      int oneway = -1;
      if (!(ss >> s.id >> s.from >> s.to >> oneway) || (oneway != 0 && oneway != 1))
        parse_fail(line_no, "expected E <id> <from> <to> <0|1> [name]");
      std::string rest;
      std::getline(ss, rest);
      s.name = trim(rest);
      s.oneway = oneway == 1;
      s.line = line_no;
      streets.push_back(std::move(s));
    } else {
      parse_fail(line_no, fmt::format("unknown record '{}'", tag));
    }
  }

  if (!proj) {
    std::vector<GeoPoint> pts;
    pts.reserve(nodes.size());
    for (const auto& n : nodes) pts.push_back(n.geo);
    proj = pts.empty() ? Projection::centered_at({}) : make_projection(pts);
  }

  RoadGraph g(*proj);
  for (auto& n : nodes) g.add_node(std::move(n.id), n.geo);

  LoadStats local;
  for (const auto& s : streets) {
    ++local.streets_declared;
    const auto from = g.find_node(s.from);
    const auto to = g.find_node(s.to);
    if (!from || !to)
      parse_fail(s.line, fmt::format("edge '{}' references missing node", s.id));
    if (!g.add_street(s.id, *from, *to, s.oneway, s.name)) {
      ++local.streets_dropped;
      spdlog::warn("road file line {}: dropping zero-length edge '{}'", s.line, s.id);
    }
  }
  if (stats) *stats = local;
  return g;
}

RoadGraph load_graph(const std::filesystem::path& path, std::optional<Projection> proj,
                     LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open road file '{}'", path.string()));
  return load_graph(in, proj, stats);
}

void write_road_file(const RoadGraph& g, std::ostream& out) {
  for (const auto& n : g.nodes())
    out << fmt::format("N {} {:.6f} {:.6f}\n", n.id, n.geo.lat, n.geo.lon);
  for (const auto& e : g.edges()) {
    if (e.id != e.street_id) continue;  // reverse twin, declared with its street
    out << fmt::format("E {} {} {} {}", e.street_id, g.node(e.from).id, g.node(e.to).id,
                       e.twin ? 0 : 1);
    if (!e.way_name.empty()) out << ' ' << e.way_name;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Routing

std::optional<Route> shortest_path(const RoadGraph& g, EdgePosition from, EdgePosition to) {
  constexpr double kTie = 1e-9;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr EdgeIndex kNone = std::numeric_limits<EdgeIndex>::max();

  const RoadEdge& ef = g.edge(from.edge);
  const RoadEdge& et = g.edge(to.edge);
  from.offset = std::clamp(from.offset, 0.0, ef.length);
  to.offset = std::clamp(to.offset, 0.0, et.length);

  if (from.edge == to.edge && to.offset >= from.offset) {
    return Route{{{from.edge, from.offset, to.offset}}, to.offset - from.offset};
  }

  const std::size_t n = g.nodes().size();
  std::vector<double> dist(n, kInf);
  std::vector<EdgeIndex> pred(n, kNone);
  std::vector<char> settled(n, 0);
  using Item = std::pair<double, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;

  auto seed = [&](NodeIndex node, double d) {
    if (d < dist[node]) {
      dist[node] = d;
      queue.emplace(d, node);
    }
  };
  seed(ef.to, ef.length - from.offset);
  if (from.offset <= kTie) seed(ef.from, 0.0);

  // Reaching the tail of `to` costs the offset along it; a position at the
  // very end of the edge is also its head node.
  const bool at_head = to.offset >= et.length - kTie;
  double best = kInf;
  NodeIndex best_node = 0;
  auto offer = [&](NodeIndex node, double total) {
    if (total < best - kTie) {
      best = total;
      best_node = node;
    }
  };

  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (settled[u] || d > dist[u]) continue;
    if (d > best + kTie) break;
    settled[u] = 1;
    if (at_head && u == et.to) offer(u, d);
    if (u == et.from) offer(u, d + to.offset);
    for (EdgeIndex e : g.out_edges(u)) {
      const NodeIndex v = g.edge(e).to;
      if (settled[v]) continue;
      const double nd = d + g.edge(e).length;
      if (nd < dist[v] - kTie) {
        dist[v] = nd;
        pred[v] = e;
        queue.emplace(nd, v);
      } else if (nd <= dist[v] + kTie && pred[v] != kNone &&
                 g.edge(e).id < g.edge(pred[v]).id) {
        pred[v] = e;
      }
    }
  }
  if (best == kInf) return std::nullopt;

  std::vector<EdgeIndex> middle;
  NodeIndex cur = best_node;
  while (pred[cur] != kNone) {
    middle.push_back(pred[cur]);
    cur = g.edge(pred[cur]).from;
  }
  std::reverse(middle.begin(), middle.end());

  Route route;
  auto push = [&](EdgeIndex e, double entry, double exit) {
    if (exit - entry > 0.0) route.steps.push_back({e, entry, exit});
  };
  if (cur == ef.to) push(from.edge, from.offset, ef.length);
  for (EdgeIndex e : middle) push(e, 0.0, g.edge(e).length);
  if (best_node == et.from) push(to.edge, 0.0, to.offset);
  for (const auto& s : route.steps) route.length += s.length();
  return route;
}

}  // namespace fdmm
