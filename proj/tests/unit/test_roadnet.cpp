#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fdmm/roadnet.hpp"
#include "oracles.hpp"

using namespace fdmm;

namespace {

const char* kTwoNodes =
    "# two nodes\n"
    "N a 41.9 12.5\n"
    "N b 41.9 12.501\n";

std::vector<EdgeIndex> hit_ids(const std::vector<EdgeHit>& hits) {
  std::vector<EdgeIndex> out;
  for (const auto& h : hits) out.push_back(h.edge);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("load_graph expands two-way streets") {
  std::istringstream in(std::string(kTwoNodes) + "E 7 a b 0 Via Roma\n");
  const RoadGraph g = load_graph(in);
  REQUIRE(g.nodes().size() == 2);
  REQUIRE(g.edges().size() == 2);
  const auto fwd = g.find_edge("7");
  const auto rev = g.find_edge("-7");
  REQUIRE(fwd);
  REQUIRE(rev);
  CHECK(g.edge(*fwd).from == g.edge(*rev).to);
  CHECK(g.edge(*fwd).twin == rev);
  CHECK(g.edge(*fwd).way_name == "Via Roma");
  CHECK(g.edge(*fwd).length == doctest::Approx(0.001 * g.projection().meters_per_deg_lon));
}

TEST_CASE("load_graph keeps one-way streets single") {
  std::istringstream in(std::string(kTwoNodes) + "E 7 a b 1\n");
  const RoadGraph g = load_graph(in);
  CHECK(g.edges().size() == 1);
  CHECK_FALSE(g.edge(0).twin);
}

TEST_CASE("load_graph rejects bad input with line numbers") {
  SUBCASE("unknown node") {
    std::istringstream in(std::string(kTwoNodes) + "E 7 a c 0\n");
    CHECK_THROWS_WITH_AS(load_graph(in), doctest::Contains("line 4"), Error);
  }
  SUBCASE("malformed node") {
    std::istringstream in("N a 41.9\n");
    CHECK_THROWS_WITH_AS(load_graph(in), doctest::Contains("line 1"), Error);
  }
  SUBCASE("duplicate node") {
    std::istringstream in(std::string(kTwoNodes) + "N a 41.9 12.5\n");
    CHECK_THROWS_AS(load_graph(in), Error);
  }
}

TEST_CASE("zero-length streets are dropped at load") {
  std::istringstream in(std::string(kTwoNodes) + "N c 41.9 12.5\nE 1 a c 0\nE 2 a b 0\n");
  LoadStats stats;
  const RoadGraph g = load_graph(in, std::nullopt, &stats);
  CHECK(stats.streets_declared == 2);
  CHECK(stats.streets_dropped == 1);
  CHECK(g.edges().size() == 2);
  CHECK_FALSE(g.find_edge("1"));
}

TEST_CASE("writing and reloading a graph is idempotent") {
  std::mt19937_64 rng(5);
  const RoadGraph g = oracle::random_graph(rng, 40, 80, 500.0);
  std::ostringstream first;
  write_road_file(g, first);
  std::istringstream in1(first.str());
  const RoadGraph g1 = load_graph(in1, g.projection());
  std::ostringstream second;
  write_road_file(g1, second);
  CHECK(first.str() == second.str());
  std::istringstream in2(first.str());
  const RoadGraph g2 = load_graph(in2, g.projection());
  REQUIRE(g1.edges().size() == g2.edges().size());
  for (EdgeIndex e = 0; e < g1.edges().size(); ++e) {
    CHECK(g1.edge(e).id == g2.edge(e).id);
    CHECK(g1.edge(e).length == g2.edge(e).length);
  }
}

TEST_CASE("edge invariants on a random graph") {
  std::mt19937_64 rng(9);
  const RoadGraph g = oracle::random_graph(rng, 30, 60, 400.0);
  for (EdgeIndex e = 0; e < g.edges().size(); ++e) {
    const RoadEdge& ed = g.edge(e);
    CHECK(ed.from != ed.to);
    CHECK(ed.length > 0.0);
    CHECK(std::abs(ed.length - distance(g.tail_pos(e), g.head_pos(e))) < 0.5);
    const auto& out = g.out_edges(ed.from);
    CHECK(std::find(out.begin(), out.end(), e) != out.end());
    if (ed.twin) {
      CHECK(g.edge(*ed.twin).from == ed.to);
      CHECK(g.edge(*ed.twin).to == ed.from);
    }
  }
}

TEST_CASE("edges_within") {
  Projection proj = Projection::centered_at({41.9, 12.5});
  RoadGraph g(proj);
  const auto a = g.add_node("a", unproject({0, 0}, proj));
  const auto b = g.add_node("b", unproject({100, 0}, proj));
  g.add_street("1", a, b, true);
  CHECK(g.edges_within({50, 150}, 100.0).empty());
  const auto hits = g.edges_within({50, 5}, 100.0);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].distance == doctest::Approx(5.0));
  CHECK_THROWS_AS(g.edges_within({0, 0}, 0.0), Error);

  std::mt19937_64 rng(21);
  const RoadGraph rg = oracle::random_graph(rng, 60, 150, 600.0);
  std::uniform_real_distribution<double> c(-700.0, 700.0);
  std::uniform_real_distribution<double> rad(1.0, 250.0);
  for (int i = 0; i < 200; ++i) {
    const PlanePoint p{c(rng), c(rng)};
    const double r = rad(rng);
    CHECK(hit_ids(rg.edges_within(p, r)) == oracle::edges_within(rg, p, r));
  }
}

TEST_CASE("spatial grid covers every cell an edge box overlaps") {
  SpatialGrid grid(10.0);
  grid.insert(4, {0, 0}, {35, 22});
  CHECK(grid.query_box({31, 21}, {31, 21}) == std::vector<EdgeIndex>{4});
  CHECK(grid.query_box({1, 21}, {2, 22}) == std::vector<EdgeIndex>{4});
  CHECK(grid.query_box({41, 0}, {45, 5}).empty());
}

TEST_CASE("shortest_path on one edge and against one-way") {
  Projection proj = Projection::centered_at({41.9, 12.5});
  RoadGraph g(proj);
  const auto a = g.add_node("a", unproject({0, 0}, proj));
  const auto b = g.add_node("b", unproject({100, 0}, proj));
  g.add_street("1", a, b, true);

  const auto same = shortest_path(g, {0, 10.0}, {0, 60.0});
  REQUIRE(same);
  REQUIRE(same->steps.size() == 1);
  CHECK(same->length == doctest::Approx(50.0));

  CHECK_FALSE(shortest_path(g, {0, 60.0}, {0, 10.0}));
}

TEST_CASE("shortest_path across a lattice equals the Manhattan distance") {
  const RoadGraph g = oracle::lattice(5, 30.0);
  // Corner edges: from node 0_0 along its first edge, to node 4_4 as the head
  // of an edge ending there.
  const EdgeIndex start = g.out_edges(*g.find_node("0_0")).front();
  EdgeIndex end = 0;
  for (EdgeIndex e = 0; e < g.edges().size(); ++e)
    if (g.edge(e).to == *g.find_node("4_4")) end = e;
  const auto r = shortest_path(g, {start, 0.0}, {end, g.edge(end).length});
  REQUIRE(r);
  CHECK(r->length == doctest::Approx(240.0).epsilon(1e-6));
  for (std::size_t i = 1; i < r->steps.size(); ++i)
    CHECK(g.edge(r->steps[i - 1].edge).to == g.edge(r->steps[i].edge).from);
}

TEST_CASE("shortest_path matches relaxation oracle and triangle inequality") {
  std::mt19937_64 rng(31);
  const RoadGraph g = oracle::random_graph(rng, 40, 120, 500.0);
  std::uniform_int_distribution<EdgeIndex> pick(0, static_cast<EdgeIndex>(g.edges().size() - 1));
  auto at_head = [&](EdgeIndex e) { return EdgePosition{e, g.edge(e).length}; };
  for (int i = 0; i < 200; ++i) {
    const EdgeIndex x = pick(rng), y = pick(rng), z = pick(rng);
    const auto xy = shortest_path(g, at_head(x), at_head(y));
    // A target at the full length is also the head node itself.
    const double want = std::min(
        oracle::relaxed_distance(g, g.edge(x).to, g.edge(y).from) + g.edge(y).length,
        oracle::relaxed_distance(g, g.edge(x).to, g.edge(y).to));
    if (x == y) continue;
    if (std::isinf(want)) {
      CHECK_FALSE(xy);
      continue;
    }
    REQUIRE(xy);
    CHECK(xy->length == doctest::Approx(want).epsilon(1e-9));
    const auto yz = shortest_path(g, at_head(y), at_head(z));
    const auto xz = shortest_path(g, at_head(x), at_head(z));
    if (yz && xz && x != z && y != z) CHECK(xz->length <= xy->length + yz->length + 1e-6);
  }
}

TEST_CASE("shortest_path is symmetric on two-way lattices") {
  const RoadGraph g = oracle::lattice(6, 30.0);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<NodeIndex> pick(0, static_cast<NodeIndex>(g.nodes().size() - 1));
  for (int i = 0; i < 50; ++i) {
    const NodeIndex u = pick(rng), v = pick(rng);
    CHECK(oracle::relaxed_distance(g, u, v) == doctest::Approx(oracle::relaxed_distance(g, v, u)));
    const EdgeIndex eu = g.out_edges(u).front();
    const EdgeIndex ev = g.out_edges(v).front();
    const auto fw = shortest_path(g, {eu, 0.0}, {ev, 0.0});
    const auto bw = shortest_path(g, {ev, 0.0}, {eu, 0.0});
    REQUIRE(fw);
    REQUIRE(bw);
    CHECK(fw->length == doctest::Approx(bw->length));
  }
}

TEST_CASE("shortest_path breaks ties by edge id") {
  // Two equal routes a->b->d and a->c->d.
  Projection proj = Projection::centered_at({41.9, 12.5});
  RoadGraph g(proj);
  const auto a = g.add_node("a", unproject({0, 0}, proj));
  const auto b = g.add_node("b", unproject({50, 50}, proj));
  const auto c = g.add_node("c", unproject({50, -50}, proj));
  const auto d = g.add_node("d", unproject({100, 0}, proj));
  const auto s = g.add_node("s", unproject({-50, 0}, proj));
  const auto t = g.add_node("t", unproject({150, 0}, proj));
  g.add_street("start", s, a, true);
  g.add_street("z1", a, b, true);
  g.add_street("z2", b, d, true);
  g.add_street("a1", a, c, true);
  g.add_street("a2", c, d, true);
  g.add_street("end", d, t, true);
  const auto r = shortest_path(g, {*g.find_edge("start"), 0.0}, {*g.find_edge("end"), 50.0});
  REQUIRE(r);
  REQUIRE(r->steps.size() == 4);
  CHECK(g.edge(r->steps[1].edge).id == "a1");
  CHECK(g.edge(r->steps[2].edge).id == "a2");
}
