#include "fdmm/snapper.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <utility>

#include <fmt/format.h>

namespace fdmm {

namespace {

constexpr double kJoinTolerance = 1e-6;

// Chord heading over the perturbed positions, widened until non-degenerate
// so that stationary stretches still get a direction.
std::optional<Vec2> snap_heading(const Trajectory& t, std::size_t i) {
  const std::size_t n = t.plane.size();
  for (std::size_t w = 1; w < n; ++w) {
    const std::size_t lo = i >= w ? i - w : 0;
    const std::size_t hi = std::min(n - 1, i + w);
    const Vec2 chord = t.plane[hi] - t.plane[lo];
    if (norm(chord) > 0.0) return (1.0 / norm(chord)) * chord;
    if (lo == 0 && hi == n - 1) break;
  }
  return std::nullopt;
}

double score(const Candidate& c, const SnapConfig& cfg) {
  if (cfg.score == SnapScore::nearest) return c.d_s;
  return c.d_s / std::max(c.cos_theta, cfg.epsilon);
}

std::string json_string(std::string_view s) {
  std::string out = "\"";
  for (const char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) out += fmt::format("\\u{:04x}", ch);
        else out += ch;
    }
  }
  return out + '"';
}

std::string coord(GeoPoint p) { return fmt::format("[{:.6f},{:.6f}]", p.lon, p.lat); }

}  // namespace

void SnapConfig::validate() const {
  if (radii.empty()) throw Error("snap radii must not be empty");
  for (double r : radii)
    if (!(r > 0.0)) throw Error("snap radii must be positive");
  if (!(epsilon > 0.0)) throw Error("snap epsilon must be positive");
  if (stride == 0) throw Error("snap stride must be at least 1");
  if (reverse_tolerance < 0.0) throw Error("reverse tolerance must be non-negative");
  if (!(detour_slack >= 0.0)) throw Error("detour slack must be non-negative");
}

bool set_snap_option(SnapConfig& cfg, std::string_view key, std::string_view value) {
  auto number = [&](std::string_view v) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw Error(fmt::format("bad value '{}' for snap.{}", value, key));
    return x;
  };
  if (key == "radii") {
    cfg.radii.clear();
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto comma = value.find(',', start);
      auto part = value.substr(start, comma == std::string_view::npos ? value.npos : comma - start);
      while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
      while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
      cfg.radii.push_back(number(part));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  } else if (key == "epsilon") {
    cfg.epsilon = number(value);
  } else if (key == "require_alignment") {
    if (value != "true" && value != "false")
      throw Error(fmt::format("bad value '{}' for snap.require_alignment", value));
    cfg.require_alignment = value == "true";
  } else if (key == "score") {
    if (value == "aligned") cfg.score = SnapScore::aligned;
    else if (value == "nearest") cfg.score = SnapScore::nearest;
    else throw Error(fmt::format("bad value '{}' for snap.score", value));
  } else if (key == "stride") {
    const double s = number(value);
    if (s < 1 || s != std::floor(s)) throw Error("snap.stride must be a positive integer");
    cfg.stride = static_cast<std::size_t>(s);
  } else if (key == "reverse_tolerance") {
    cfg.reverse_tolerance = number(value);
  } else if (key == "skip_detours") {
    if (value != "true" && value != "false")
      throw Error(fmt::format("bad value '{}' for snap.skip_detours", value));
    cfg.skip_detours = value == "true";
  } else if (key == "detour_slack") {
    cfg.detour_slack = number(value);
  } else {
    return false;
  }
  return true;
}

std::vector<Candidate> candidates(PlanePoint p, std::optional<Vec2> heading, const RoadGraph& g,
                                  double radius, bool require_alignment) {
  std::vector<Candidate> out;
  for (const EdgeHit& hit : g.edges_within(p, radius)) {
    const double c = heading ? cos_between(g.direction(hit.edge), *heading) : 1.0;
    if (require_alignment && c < 0.0) continue;
    const SegmentDistance sd = dist_point_segment(p, g.tail_pos(hit.edge), g.head_pos(hit.edge));
    out.push_back({hit.edge, sd.foot, sd.t * g.edge(hit.edge).length, sd.distance, c});
  }
  std::sort(out.begin(), out.end(), [&](const Candidate& a, const Candidate& b) {
    return a.d_s != b.d_s ? a.d_s < b.d_s : g.edge(a.edge).id < g.edge(b.edge).id;
  });
  return out;
}

MatchResult snap_route(const Trajectory& t, const RoadGraph& g, const SnapConfig& cfg) {
  cfg.validate();
  const std::size_t n = t.plane.size();
  if (n == 0) throw Error("empty trajectory");

  MatchResult m;
  m.trajectory_id = t.id;
  m.snapped.resize(n);

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < n; i += cfg.stride) selected.push_back(i);
  if (selected.back() != n - 1) selected.push_back(n - 1);

  for (std::size_t i : selected) {
    const auto h = snap_heading(t, i);
    for (double r : cfg.radii) {
      const auto cands = candidates(t.plane[i], h, g, r, cfg.require_alignment);
      if (cands.empty()) continue;
      const auto best = std::min_element(cands.begin(), cands.end(),
                                         [&](const Candidate& a, const Candidate& b) {
                                           return score(a, cfg) < score(b, cfg);
                                         });
      m.snapped[i] = SnapPoint{{best->edge, best->offset}, best->foot, best->cos_theta, false};
      break;
    }
  }

  // Candidate-less points take the previous snap, or the next one at the start.
  std::optional<SnapPoint> carry;
  for (std::size_t i : selected) {
    if (m.snapped[i]) carry = m.snapped[i];
    else if (carry) m.snapped[i] = SnapPoint{carry->at, carry->foot, carry->cos_theta, true};
  }
  if (!carry) throw Error("unmatchable trajectory");
  for (auto it = selected.rbegin(); it != selected.rend(); ++it) {
    if (m.snapped[*it] && !m.snapped[*it]->inherited) carry = m.snapped[*it];
    else if (!m.snapped[*it]) m.snapped[*it] = SnapPoint{carry->at, carry->foot, carry->cos_theta, true};
  }

  bool pending_break = false;
  auto append = [&](const PathStep& s) {
    if (s.length() <= 0.0) return;
    if (!m.path.empty() && !pending_break && m.path.back().edge == s.edge &&
        std::abs(m.path.back().exit - s.entry) < kJoinTolerance) {
      m.path.back().exit = s.exit;
      return;
    }
    if (pending_break && !m.path.empty()) m.breaks.push_back(m.path.size());
    pending_break = false;
    m.path.push_back(s);
  };

  EdgePosition cur = m.snapped[selected.front()]->at;
  for (std::size_t k = 1; k < selected.size(); ++k) {
    EdgePosition target = m.snapped[selected[k]]->at;
    if (target.edge == cur.edge && target.offset < cur.offset &&
        cur.offset - target.offset <= cfg.reverse_tolerance)
      continue;
    auto route = shortest_path(g, cur, target);
    if (cfg.skip_detours && route && k + 1 < selected.size()) {
      const EdgePosition next = m.snapped[selected[k + 1]]->at;
      const auto onward = shortest_path(g, target, next);
      const auto direct = shortest_path(g, cur, next);
      if (onward && direct && route->length + onward->length > direct->length + cfg.detour_slack)
        continue;
    }
    // A point that overshot a corner onto the last meters of an incoming edge
    // is taken to stand on that edge's head node when that is cheaper.
    const double edge_len = g.edge(target.edge).length;
    if (target.offset < edge_len && edge_len - target.offset <= cfg.reverse_tolerance) {
      const EdgePosition head{target.edge, edge_len};
      if (auto via_head = shortest_path(g, cur, head);
          via_head && (!route || via_head->length < route->length)) {
        route = std::move(via_head);
        target = head;
      }
    }
    // Likewise a snap just past a junction may back up to it when leaving.
    const bool can_back = cur.offset > 0.0 && cur.offset <= cfg.reverse_tolerance &&
                          (m.path.empty() || pending_break ||
                           (m.path.back().edge == cur.edge && m.path.back().entry <= kJoinTolerance));
    if (can_back) {
      const EdgePosition tail{cur.edge, 0.0};
      if (auto via_tail = shortest_path(g, tail, target);
          via_tail && (!route || via_tail->length < route->length)) {
        if (!m.path.empty() && !pending_break) m.path.pop_back();
        route = std::move(via_tail);
      }
    }
    if (!route) {
      m.gaps.emplace_back(selected[k - 1], selected[k]);
      pending_break = true;
    } else {
      for (const PathStep& s : route->steps) append(s);
    }
    cur = target;
  }
  // Stubs of a few meters before the first node or after the last one are
  // snapping noise around a junction, not travelled road.
  auto stub = [&](const PathStep& s) { return s.length() <= cfg.reverse_tolerance; };
  if (m.path.size() > 1 && stub(m.path.front()) &&
      m.path.front().exit >= g.edge(m.path.front().edge).length - kJoinTolerance &&
      (m.breaks.empty() || m.breaks.front() > 1)) {
    m.path.erase(m.path.begin());
    for (std::size_t& b : m.breaks) --b;
  }
  if (m.path.size() > 1 && stub(m.path.back()) && m.path.back().entry <= kJoinTolerance &&
      (m.breaks.empty() || m.breaks.back() < m.path.size() - 1))
    m.path.pop_back();
  if (m.path.empty()) {
    const EdgePosition at = m.snapped[selected.front()]->at;
    m.path.push_back({at.edge, at.offset, at.offset});
  }
  for (const PathStep& s : m.path) m.path_length += s.length();
  return m;
}

std::vector<std::vector<PlanePoint>> route_plane_geometry(const MatchResult& m,
                                                          const RoadGraph& g) {
  std::vector<std::vector<PlanePoint>> pieces;
  std::size_t next_break = 0;
  for (std::size_t k = 0; k < m.path.size(); ++k) {
    const PathStep& s = m.path[k];
    const bool starts_piece =
        k == 0 || (next_break < m.breaks.size() && m.breaks[next_break] == k);
    if (starts_piece) {
      if (k != 0) ++next_break;
      pieces.emplace_back();
      pieces.back().push_back(g.point_at({s.edge, s.entry}));
    } else if (std::abs(s.entry) > kJoinTolerance) {
      pieces.back().push_back(g.point_at({s.edge, s.entry}));
    }
    pieces.back().push_back(g.point_at({s.edge, s.exit}));
  }
  return pieces;
}

std::vector<std::vector<GeoPoint>> route_geometry(const MatchResult& m, const RoadGraph& g) {
  std::vector<std::vector<GeoPoint>> out;
  for (const auto& piece : route_plane_geometry(m, g)) {
    auto& geo = out.emplace_back();
    for (PlanePoint p : piece) geo.push_back(unproject(p, g.projection()));
  }
  return out;
}

void write_geojson(std::ostream& out, const MatchResult& m, const Trajectory& t,
                   const RoadGraph& g) {
  const auto pieces = route_geometry(m, g);
  auto line = [](const std::vector<GeoPoint>& pts) {
    std::string s = "[";
    for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? "," : "") + coord(pts[i]);
    return s + "]";
  };
  std::string geometry;
  if (pieces.size() == 1) {
    geometry = R"({"type":"LineString","coordinates":)" + line(pieces.front()) + "}";
  } else {
    geometry = R"({"type":"MultiLineString","coordinates":[)";
    for (std::size_t i = 0; i < pieces.size(); ++i) geometry += (i ? "," : "") + line(pieces[i]);
    geometry += "]}";
  }
  std::vector<GeoPoint> fixes;
  for (const auto& f : t.fixes) fixes.push_back(f.pos);

  const std::string id = json_string(m.trajectory_id);
  out << R"({"type":"FeatureCollection","features":[)" << '\n'
      << fmt::format(
             R"({{"type":"Feature","properties":{{"trajectory_id":{},"path_length_m":{:.6f},"gap_count":{}}},"geometry":{}}},)",
             id, m.path_length, m.gaps.size(), geometry)
      << '\n'
      << fmt::format(
             R"({{"type":"Feature","properties":{{"trajectory_id":{}}},"geometry":{{"type":"MultiPoint","coordinates":{}}}}})",
             id, line(fixes))
      << "\n]}\n";
}

void write_edge_csv_header(std::ostream& out) {
  out << "trajectory_id,seq,edge_id,entry_offset_m,exit_offset_m\n";
}

void write_edge_csv(std::ostream& out, const MatchResult& m, const RoadGraph& g) {
  for (std::size_t k = 0; k < m.path.size(); ++k) {
    const PathStep& s = m.path[k];
    out << fmt::format("{},{},{},{:.6f},{:.6f}\n", m.trajectory_id, k, g.edge(s.edge).id, s.entry,
                       s.exit);
  }
}

MatchResult match_from_steps(std::string trajectory_id, std::vector<PathStep> steps,
                             const RoadGraph& g) {
  MatchResult m;
  m.trajectory_id = std::move(trajectory_id);
  m.path = std::move(steps);
  for (std::size_t k = 0; k < m.path.size(); ++k) {
    const PathStep& s = m.path[k];
    m.path_length += s.length();
    if (k == 0) continue;
    const PathStep& prev = m.path[k - 1];
    const bool joined =
        (g.edge(prev.edge).to == g.edge(s.edge).from &&
         std::abs(prev.exit - g.edge(prev.edge).length) < 1e-3 && std::abs(s.entry) < 1e-3) ||
        (prev.edge == s.edge && std::abs(prev.exit - s.entry) < 1e-3);
    if (!joined) m.breaks.push_back(k);
  }
  return m;
}

}  // namespace fdmm
