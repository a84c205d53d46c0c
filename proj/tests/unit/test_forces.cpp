#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fdmm/forces.hpp"
#include "oracles.hpp"

using namespace fdmm;

namespace {

const Projection kProj = Projection::centered_at({41.9, 12.5});

RoadGraph single_edge(PlanePoint a, PlanePoint b, bool oneway = true) {
  RoadGraph g(kProj);
  const auto na = g.add_node("a", unproject(a, kProj));
  const auto nb = g.add_node("b", unproject(b, kProj));
  g.add_street("1", na, nb, oneway);
  return g;
}

constexpr ForceLaw kLaws[] = {ForceLaw::inv_d, ForceLaw::inv_d2, ForceLaw::dp_over_d2,
                              ForceLaw::inv_d_dm};

}  // namespace

TEST_CASE("heading uses the chord through the neighbours") {
  const Trajectory east = oracle::trajectory_at({{0, 0}, {10, 0}, {20, 0}, {30, 0}}, kProj);
  for (std::size_t i = 0; i < east.size(); ++i) {
    const auto h = heading(east, i);
    REQUIRE(h);
    CHECK(h->x == doctest::Approx(1.0));
    CHECK(h->y == doctest::Approx(0.0));
  }
  const Trajectory north = oracle::trajectory_at({{0, 0}, {0, 10}}, kProj);
  const auto h0 = heading(north, 0);
  REQUIRE(h0);
  CHECK(h0->x == doctest::Approx(0.0));
  CHECK(h0->y == doctest::Approx(1.0));

  Trajectory still = oracle::trajectory_at({{5, 5}, {6, 6}, {7, 7}}, kProj);
  still.plane = {{5, 5}, {5, 5}, {5, 5}};
  CHECK_FALSE(heading(still, 1));
  CHECK_FALSE(heading_cos(still, 1, {1, 0}, HeadingVariant::chord));
}

TEST_CASE("heading variants") {
  // Incoming segment east, outgoing north: chord is north-east.
  const Trajectory t = oracle::trajectory_at({{0, 0}, {10, 0}, {10, 10}}, kProj);
  const Vec2 east{1, 0};
  CHECK(*heading_cos(t, 1, east, HeadingVariant::chord) == doctest::Approx(std::sqrt(0.5)));
  CHECK(*heading_cos(t, 1, east, HeadingVariant::avg_of_cos) == doctest::Approx(0.5));
  CHECK(*heading_cos(t, 1, east, HeadingVariant::cos_of_avg) ==
        doctest::Approx(std::cos(M_PI / 4.0)));
}

TEST_CASE("electrical force examples") {
  ForceConfig cfg;
  const PlanePoint p{0, 10};
  const PlanePoint a{-12.5, 0}, b{12.5, 0};  // l = 25, d = 10

  const ForceVector attract = electrical_force(p, a, b, 1.0, cfg);
  CHECK(std::abs(norm(attract) - 0.5) < 1e-12);
  CHECK(attract.y < 0.0);
  CHECK(attract.x == 0.0);

  const ForceVector none = electrical_force(p, a, b, 0.0, cfg);
  CHECK(norm(none) == 0.0);

  const ForceVector repel = electrical_force(p, a, b, -1.0, cfg);
  CHECK(std::abs(norm(repel) - 0.25) < 1e-12);
  CHECK(repel.y > 0.0);
}

TEST_CASE("perpendicular edges exert no force under every law") {
  const Trajectory t = oracle::trajectory_at({{-20, 5}, {0, 5}, {20, 5}}, kProj);
  const RoadGraph g = single_edge({3, -30}, {3, 30});
  for (ForceLaw law : kLaws)
    for (DistanceVariant dv : {DistanceVariant::line, DistanceVariant::segment,
                               DistanceVariant::midpoint}) {
      ForceConfig cfg;
      cfg.force_law = law;
      cfg.distance_variant = dv;
      const ForceVector f = electrical_force(t, 1, g, 0, cfg);
      CHECK(f.x == 0.0);
      CHECK(f.y == 0.0);
    }
}

TEST_CASE("a point lying on an edge feels no force from it") {
  const ForceConfig cfg;
  const PlanePoint a{-13.7, 4.1}, b{22.9, 31.3};
  for (double u : {0.0, 0.13, 0.37, 0.5, 0.81, 1.0}) {
    const PlanePoint p = a + u * (b - a);
    const ForceVector f = electrical_force(p, a, b, 1.0, cfg);
    CHECK(f.x == 0.0);
    CHECK(f.y == 0.0);
  }
}

TEST_CASE("force law and direction variants") {
  const PlanePoint a{0, 0}, b{16, 0};
  const PlanePoint p{20, 3};  // beyond b: d_s = 5, d_p = 3, d_m = 13
  ForceConfig cfg;
  CHECK(norm(electrical_force(p, a, b, 1.0, cfg)) == doctest::Approx(4.0 / 5.0));
  cfg.force_law = ForceLaw::inv_d2;
  CHECK(norm(electrical_force(p, a, b, 1.0, cfg)) == doctest::Approx(4.0 / 25.0));
  cfg.force_law = ForceLaw::dp_over_d2;
  CHECK(norm(electrical_force(p, a, b, 1.0, cfg)) == doctest::Approx(4.0 * 3.0 / 25.0));
  cfg.force_law = ForceLaw::inv_d_dm;
  CHECK(norm(electrical_force(p, a, b, 1.0, cfg)) ==
        doctest::Approx(4.0 / (5.0 * std::hypot(12.0, 3.0))));
  cfg.force_law = ForceLaw::inv_d;
  cfg.distance_variant = DistanceVariant::line;
  CHECK(norm(electrical_force(p, a, b, 1.0, cfg)) == doctest::Approx(4.0 / 3.0));

  cfg = ForceConfig{};
  const ForceVector toward_foot = electrical_force(p, a, b, 1.0, cfg);
  CHECK(toward_foot.x / norm(toward_foot) == doctest::Approx(-4.0 / 5.0));
  cfg.direction_variant = DirectionVariant::midpoint;
  const ForceVector toward_mid = electrical_force(p, a, b, 1.0, cfg);
  CHECK(toward_mid.x / norm(toward_mid) == doctest::Approx(-12.0 / std::hypot(12.0, 3.0)));

  cfg = ForceConfig{};
  cfg.repulsion_variant = RepulsionVariant::epsilon;
  CHECK(norm(electrical_force(p, a, b, -1.0, cfg)) == doctest::Approx(0.001 * 4.0 / 5.0));
  cfg.repulsion_variant = RepulsionVariant::zero;
  CHECK(norm(electrical_force(p, a, b, -1.0, cfg)) == 0.0);

  cfg = ForceConfig{};
  CHECK(norm(electrical_force({8, 0.25}, a, b, 1.0, cfg)) == doctest::Approx(4.0));  // d_min
}

TEST_CASE("spring force examples") {
  ForceConfig cfg;
  const PlanePoint self{0, 0};
  CHECK(norm(spring_force(self, {10, 0}, 10.0, cfg)) == 0.0);

  const ForceVector pull = spring_force(self, {20, 0}, 10.0, cfg);
  CHECK(std::abs(norm(pull) - std::log(2.0)) < 1e-12);
  CHECK(pull.x > 0.0);

  const ForceVector push = spring_force(self, {5, 0}, 10.0, cfg);
  CHECK(std::abs(norm(push) - std::log(2.0)) < 1e-12);
  CHECK(push.x < 0.0);

  CHECK(norm(spring_force(self, {5, 0}, 0.0, cfg)) == 0.0);
  CHECK(norm(spring_force(self, self, 10.0, cfg)) == 0.0);

  cfg.c2_mode = NaturalLength::fixed;
  cfg.c2 = 5.0;
  CHECK(norm(spring_force(self, {20, 0}, 10.0, cfg)) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("spring antisymmetry") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> c(-50.0, 50.0);
  ForceConfig cfg;
  for (int i = 0; i < 200; ++i) {
    Trajectory t = oracle::trajectory_at({{c(rng), c(rng)}, {c(rng), c(rng)}}, kProj);
    t.plane = {{c(rng), c(rng)}, {c(rng), c(rng)}};
    const ForceVector f01 = spring_force(t, 0, 1, cfg);
    const ForceVector f10 = spring_force(t, 1, 0, cfg);
    CHECK(f01.x == doctest::Approx(-f10.x));
    CHECK(f01.y == doctest::Approx(-f10.y));
  }
}

TEST_CASE("step_point") {
  ForceConfig cfg;
  SUBCASE("nothing nearby and springs relaxed") {
    const RoadGraph g = single_edge({0, 500}, {50, 500});
    Trajectory t = oracle::trajectory_at({{0, 0}, {10, 0}, {20, 0}}, kProj);
    const Vec2 d = step_point(t, 1, g, cfg);
    CHECK(norm(d) == 0.0);
  }
  SUBCASE("one parallel edge") {
    const RoadGraph g = single_edge({-12.5, 0}, {12.5, 0});
    Trajectory t = oracle::trajectory_at({{-10, 10}, {0, 10}, {10, 10}}, kProj);
    // Neighbours sit on the same line, so springs stay at rest.
    cfg.c4 = 1.0;
    const Vec2 d = step_point(t, 1, g, cfg);
    CHECK(d.x == doctest::Approx(0.0));
    CHECK(d.y == doctest::Approx(-0.5));
    CHECK(t.plane[1].y == doctest::Approx(9.5));
  }
  SUBCASE("clamped to max_step") {
    const RoadGraph g = single_edge({-12.5, 0}, {12.5, 0});
    Trajectory t = oracle::trajectory_at({{-10, 10}, {0, 10}, {10, 10}}, kProj);
    cfg.c4 = 100.0;
    cfg.max_step = 7.0;
    const Vec2 d = step_point(t, 1, g, cfg);
    CHECK(norm(d) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(d.x / norm(d) == doctest::Approx(0.0));
  }
}

TEST_CASE("displacement is linear in c4 before the clamp") {
  std::mt19937_64 rng(12);
  const RoadGraph g = oracle::random_graph(rng, 30, 60, 300.0);
  std::uniform_real_distribution<double> c(-200.0, 200.0);
  for (int k = 0; k < 50; ++k) {
    const Trajectory t = oracle::trajectory_at({{c(rng), c(rng)}, {c(rng), c(rng)},
                                                {c(rng), c(rng)}}, kProj);
    ForceConfig one;
    one.max_step = 1e9;
    ForceConfig two = one;
    two.c4 = 2.0 * one.c4;
    Trajectory t1 = t, t2 = t;
    const Vec2 d1 = step_point(t1, 1, g, one);
    const Vec2 d2 = step_point(t2, 1, g, two);
    CHECK(d2.x == doctest::Approx(2.0 * d1.x));
    CHECK(d2.y == doctest::Approx(2.0 * d1.y));
  }
}

TEST_CASE("repulsion does not pull toward an opposing edge") {
  const RoadGraph g = single_edge({-50, 0}, {50, 0});
  Trajectory t = oracle::trajectory_at({{10, 8}, {0, 8}, {-10, 8}}, kProj);  // westbound
  ForceConfig cfg;
  const double before = dist_point_segment(t.plane[1], {-50, 0}, {50, 0}).distance;
  step_point(t, 1, g, cfg);
  CHECK(dist_point_segment(t.plane[1], {-50, 0}, {50, 0}).distance >= before);
}

TEST_CASE("simulation") {
  // Straight eastbound road made of 30 m segments.
  RoadGraph g(kProj);
  for (int k = 0; k <= 14; ++k) {
    g.add_node("r" + std::to_string(k), unproject({-210.0 + 30.0 * k, 0.0}, kProj));
    if (k > 0) g.add_street(std::to_string(k), k - 1, k, true);
  }
  Trajectory base = oracle::trajectory_at({{-60, 12}, {-30, 12}, {0, 12}, {30, 12}, {60, 12}},
                                          kProj);
  SUBCASE("zero iterations change nothing") {
    Trajectory t = base;
    ForceConfig cfg;
    cfg.iterations = 0;
    const auto trace = run_simulation(t, g, cfg);
    CHECK(trace.mean_displacement.empty());
    CHECK(t.plane == base.plane);
  }
  SUBCASE("distance to a parallel road shrinks each iteration") {
    Trajectory t = base;
    ForceConfig cfg;
    cfg.iterations = 1;
    double last = dist_point_segment(t.plane[2], {-200, 0}, {200, 0}).distance;
    for (int k = 0; k < 5; ++k) {
      run_simulation(t, g, cfg);
      const double now = dist_point_segment(t.plane[2], {-200, 0}, {200, 0}).distance;
      CHECK(now < last);
      last = now;
    }
    CHECK(t.natural_len == base.natural_len);
    CHECK(t.observed == base.observed);
  }
  SUBCASE("deterministic") {
    Trajectory a = base, b = base;
    ForceConfig cfg;
    const auto ta = run_simulation(a, g, cfg);
    const auto tb = run_simulation(b, g, cfg);
    CHECK(a.plane == b.plane);
    CHECK(ta.mean_displacement == tb.mean_displacement);
    CHECK(ta.mean_displacement.size() == 20);
  }
}

TEST_CASE("edges beyond cutoff plus max_step do not matter") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> c(-80.0, 80.0);
  std::vector<PlanePoint> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({c(rng), c(rng)});
  RoadGraph near(kProj), far(kProj);
  for (RoadGraph* g : {&near, &far}) {
    const auto a = g->add_node("a", unproject({-100, 0}, kProj));
    const auto b = g->add_node("b", unproject({100, 10}, kProj));
    const auto c2 = g->add_node("c", unproject({0, -90}, kProj));
    g->add_street("1", a, b, false);
    g->add_street("2", c2, b, true);
  }
  for (auto [y, g] : {std::pair{600.0, &near}, std::pair{900.0, &far}}) {
    const auto a = g->add_node("x", unproject({-50, y}, kProj));
    const auto b = g->add_node("y", unproject({50, y}, kProj));
    g->add_street("3", a, b, false);
  }
  ForceConfig cfg;
  Trajectory t1 = oracle::trajectory_at(pts, kProj), t2 = t1;
  run_simulation(t1, near, cfg);
  run_simulation(t2, far, cfg);
  CHECK(t1.plane == t2.plane);
}

TEST_CASE("force config text") {
  std::istringstream in(
      "# tuned\n"
      "c_e = 2.5\n"
      "iterations = 15\n"
      "force_law = inv_d2\n"
      "c2_mode = fixed\n");
  const ForceConfig cfg = parse_force_config(in);
  CHECK(cfg.c_e == 2.5);
  CHECK(cfg.iterations == 15);
  CHECK(cfg.force_law == ForceLaw::inv_d2);
  CHECK(cfg.c2_mode == NaturalLength::fixed);

  std::ostringstream out;
  write_force_config(out, cfg);
  std::istringstream back(out.str());
  const ForceConfig again = parse_force_config(back);
  CHECK(again.c_e == cfg.c_e);
  CHECK(again.force_law == cfg.force_law);
  CHECK(again.iterations == cfg.iterations);

  std::istringstream unknown("spring = 3\n");
  CHECK_THROWS_AS(parse_force_config(unknown), Error);
  std::istringstream negative("c4 = -1\n");
  CHECK_THROWS_AS(parse_force_config(negative), Error);
  std::istringstream variant("distance_variant = diagonal\n");
  CHECK_THROWS_AS(parse_force_config(variant), Error);
}
