#pragma once

// Independent reference computations shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fdmm/geo.hpp"
#include "fdmm/roadnet.hpp"
#include "fdmm/trajectory.hpp"

namespace oracle {

using fdmm::PlanePoint;

inline double at_param(PlanePoint p, PlanePoint a, PlanePoint b, double t) {
  const double x = a.x + t * (b.x - a.x) - p.x;
  const double y = a.y + t * (b.y - a.y) - p.y;
  return std::sqrt(x * x + y * y);
}

// Minimum of |p - (a + t(b - a))| over 1e5 samples of t in [0, 1], refined by
// ternary search inside the bracket around the best sample (the function is
// convex in t).
inline double segment_distance(PlanePoint p, PlanePoint a, PlanePoint b) {
  constexpr int kSteps = 100000;
  int best = 0;
  double best_d = at_param(p, a, b, 0.0);
  for (int k = 1; k <= kSteps; ++k) {
    const double d = at_param(p, a, b, static_cast<double>(k) / kSteps);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  double lo = std::max(0, best - 1) / static_cast<double>(kSteps);
  double hi = std::min(kSteps, best + 1) / static_cast<double>(kSteps);
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (at_param(p, a, b, m1) < at_param(p, a, b, m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::min(best_d, at_param(p, a, b, 0.5 * (lo + hi)));
}

// Random planar graph: scattered nodes, edges between random nearby pairs.
inline fdmm::RoadGraph random_graph(std::mt19937_64& rng, int nodes, int streets,
                                    double extent) {
  fdmm::Projection proj = fdmm::Projection::centered_at({41.9, 12.5});
  fdmm::RoadGraph g(proj);
  std::uniform_real_distribution<double> coord(-extent, extent);
  for (int i = 0; i < nodes; ++i)
    g.add_node("n" + std::to_string(i), fdmm::unproject({coord(rng), coord(rng)}, proj));
  std::uniform_int_distribution<int> pick(0, nodes - 1);
  std::bernoulli_distribution oneway(0.3);
  int id = 0;
  while (id < streets) {
    const auto a = static_cast<fdmm::NodeIndex>(pick(rng));
    const auto b = static_cast<fdmm::NodeIndex>(pick(rng));
    if (a == b) continue;
    if (g.add_street(std::to_string(id), a, b, oneway(rng))) ++id;
  }
  return g;
}

// Exhaustive scan over every edge, sorted by edge index.
inline std::vector<fdmm::EdgeIndex> edges_within(const fdmm::RoadGraph& g, PlanePoint p,
                                                 double r) {
  std::vector<fdmm::EdgeIndex> out;
  for (fdmm::EdgeIndex e = 0; e < g.edges().size(); ++e)
    if (fdmm::dist_point_segment(p, g.tail_pos(e), g.head_pos(e)).distance <= r) out.push_back(e);
  return out;
}

// n x n lattice of two-way streets with `block` meters spacing, node ids r_c.
inline fdmm::RoadGraph lattice(int n, double block) {
  fdmm::Projection proj = fdmm::Projection::centered_at({41.9, 12.5});
  fdmm::RoadGraph g(proj);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      g.add_node(std::to_string(r) + "_" + std::to_string(c),
                 fdmm::unproject({c * block, r * block}, proj));
  int id = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const auto here = static_cast<fdmm::NodeIndex>(r * n + c);
      if (c + 1 < n) g.add_street(std::to_string(id++), here, here + 1, false);
      if (r + 1 < n) g.add_street(std::to_string(id++), here, here + n, false);
    }
  return g;
}

// Length of the shortest node-to-node walk, found by Bellman-Ford style
// relaxation over all edges until nothing changes.
inline double relaxed_distance(const fdmm::RoadGraph& g, fdmm::NodeIndex from,
                               fdmm::NodeIndex to) {
  std::vector<double> d(g.nodes().size(), INFINITY);
  d[from] = 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : g.edges())
      if (d[e.from] + e.length < d[e.to] - 1e-12) {
        d[e.to] = d[e.from] + e.length;
        changed = true;
      }
  }
  return d[to];
}

// Fixes placed at plane positions, one per `dt` seconds.
inline std::vector<fdmm::GpsFix> fixes_at(const std::vector<PlanePoint>& pts,
                                          const fdmm::Projection& proj, double dt = 15.0,
                                          double t0 = 1391241600.0) {
  std::vector<fdmm::GpsFix> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    out.push_back({fdmm::unproject(pts[i], proj), t0 + dt * static_cast<double>(i)});
  return out;
}

inline fdmm::Trajectory trajectory_at(const std::vector<PlanePoint>& pts,
                                      const fdmm::Projection& proj, double dt = 15.0) {
  return fdmm::Trajectory::from_fixes("t", fixes_at(pts, proj, dt), proj);
}

}  // namespace oracle
