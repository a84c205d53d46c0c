#include "fdmm/forces.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <utility>

#include <fmt/format.h>

namespace fdmm {

namespace {

template <typename E, std::size_t N>
using Names = std::array<std::pair<E, std::string_view>, N>;

constexpr Names<DistanceVariant, 3> kDistanceNames{{{DistanceVariant::line, "line"},
                                                     {DistanceVariant::segment, "segment"},
                                                     {DistanceVariant::midpoint, "midpoint"}}};
constexpr Names<HeadingVariant, 3> kHeadingNames{{{HeadingVariant::chord, "chord"},
                                                   {HeadingVariant::avg_of_cos, "avg_of_cos"},
                                                   {HeadingVariant::cos_of_avg, "cos_of_avg"}}};
constexpr Names<RepulsionVariant, 3> kRepulsionNames{{{RepulsionVariant::half, "half"},
                                                       {RepulsionVariant::epsilon, "epsilon"},
                                                       {RepulsionVariant::zero, "zero"}}};
constexpr Names<DirectionVariant, 2> kDirectionNames{
    {{DirectionVariant::perpendicular, "perpendicular"}, {DirectionVariant::midpoint, "midpoint"}}};
constexpr Names<ForceLaw, 4> kLawNames{{{ForceLaw::inv_d, "inv_d"},
                                        {ForceLaw::inv_d2, "inv_d2"},
                                        {ForceLaw::dp_over_d2, "dp_over_d2"},
                                        {ForceLaw::inv_d_dm, "inv_d_dm"}}};
constexpr Names<NaturalLength, 2> kNaturalNames{
    {{NaturalLength::observed, "observed"}, {NaturalLength::fixed, "fixed"}}};

template <typename E, std::size_t N>
std::string_view name_of(const Names<E, N>& names, E v) {
  for (const auto& [e, n] : names)
    if (e == v) return n;
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(const Names<E, N>& names, std::string_view key, std::string_view value) {
  for (const auto& [e, n] : names)
    if (n == value) return e;
  throw Error(fmt::format("bad value '{}' for {}", value, key));
}

double parse_number(std::string_view key, std::string_view value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v))
    throw Error(fmt::format("bad value '{}' for {}", value, key));
  return v;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Vec2 unit(Vec2 v) { return (1.0 / norm(v)) * v; }

}  // namespace

std::string_view to_string(DistanceVariant v) { return name_of(kDistanceNames, v); }
std::string_view to_string(HeadingVariant v) { return name_of(kHeadingNames, v); }
std::string_view to_string(RepulsionVariant v) { return name_of(kRepulsionNames, v); }
std::string_view to_string(DirectionVariant v) { return name_of(kDirectionNames, v); }
std::string_view to_string(ForceLaw v) { return name_of(kLawNames, v); }
std::string_view to_string(NaturalLength v) { return name_of(kNaturalNames, v); }

void ForceConfig::validate() const {
  if (!(c_e > 0.0 && c1 > 0.0 && c4 > 0.0 && cutoff > 0.0 && max_step > 0.0 && d_min > 0.0))
    throw Error("force constants c_e, c1, c4, cutoff, max_step and d_min must be positive");
  if (c2_mode == NaturalLength::fixed && !(c2 > 0.0)) throw Error("c2 must be positive");
  if (iterations < 0) throw Error("iterations must be non-negative");
}

bool set_force_option(ForceConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "c_e") cfg.c_e = parse_number(key, value);
  else if (key == "c1") cfg.c1 = parse_number(key, value);
  else if (key == "c2_mode") cfg.c2_mode = parse_enum(kNaturalNames, key, value);
  else if (key == "c2") cfg.c2 = parse_number(key, value);
  else if (key == "c4") cfg.c4 = parse_number(key, value);
  else if (key == "cutoff") cfg.cutoff = parse_number(key, value);
  else if (key == "iterations") {
    const double n = parse_number(key, value);
    if (n != std::floor(n) || n < 0 || n > 1e6) throw Error("iterations must be a count");
    cfg.iterations = static_cast<int>(n);
  } else if (key == "distance_variant") cfg.distance_variant = parse_enum(kDistanceNames, key, value);
  else if (key == "heading_variant") cfg.heading_variant = parse_enum(kHeadingNames, key, value);
  else if (key == "repulsion_variant")
    cfg.repulsion_variant = parse_enum(kRepulsionNames, key, value);
  else if (key == "direction_variant")
    cfg.direction_variant = parse_enum(kDirectionNames, key, value);
  else if (key == "force_law") cfg.force_law = parse_enum(kLawNames, key, value);
  else if (key == "max_step") cfg.max_step = parse_number(key, value);
  else if (key == "d_min") cfg.d_min = parse_number(key, value);
  else return false;
  return true;
}

ForceConfig parse_force_config(std::istream& in) {
  ForceConfig cfg;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(fmt::format("config line {}: expected key = value", line_no));
    const auto key = trim(line.substr(0, eq));
    if (!set_force_option(cfg, key, trim(line.substr(eq + 1))))
      throw Error(fmt::format("config line {}: unknown key '{}'", line_no, key));
  }
  cfg.validate();
  return cfg;
}

void write_force_config(std::ostream& out, const ForceConfig& cfg) {
  out << fmt::format("c_e = {}\nc1 = {}\nc2_mode = {}\nc2 = {}\nc4 = {}\ncutoff = {}\n", cfg.c_e,
                     cfg.c1, to_string(cfg.c2_mode), cfg.c2, cfg.c4, cfg.cutoff)
      << fmt::format("iterations = {}\ndistance_variant = {}\nheading_variant = {}\n",
                     cfg.iterations, to_string(cfg.distance_variant),
                     to_string(cfg.heading_variant))
      << fmt::format("repulsion_variant = {}\ndirection_variant = {}\nforce_law = {}\n",
                     to_string(cfg.repulsion_variant), to_string(cfg.direction_variant),
                     to_string(cfg.force_law))
      << fmt::format("max_step = {}\nd_min = {}\n", cfg.max_step, cfg.d_min);
}

// ---------------------------------------------------------------------------

std::optional<Vec2> heading(const Trajectory& t, std::size_t i) {
  const auto n = t.plane.size();
  if (n < 2) return std::nullopt;
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const std::size_t hi = i + 1 >= n ? n - 1 : i + 1;
  const Vec2 chord = t.plane[hi] - t.plane[lo];
  if (norm(chord) == 0.0) return std::nullopt;
  return unit(chord);
}

std::optional<double> heading_cos(const Trajectory& t, std::size_t i, Vec2 edge_dir,
                                  HeadingVariant variant) {
  if (variant == HeadingVariant::chord) {
    const auto h = heading(t, i);
    if (!h) return std::nullopt;
    return cos_between(edge_dir, *h);
  }
  // Incoming and outgoing trajectory segments, whichever exist and are non-zero.
  double sum = 0.0;
  int count = 0;
  auto add = [&](Vec2 v) {
    if (norm(v) == 0.0) return;
    const double c = cos_between(edge_dir, v);
    sum += variant == HeadingVariant::avg_of_cos ? c : std::acos(c);
    ++count;
  };
  if (i > 0) add(t.plane[i] - t.plane[i - 1]);
  if (i + 1 < t.plane.size()) add(t.plane[i + 1] - t.plane[i]);
  if (count == 0) return std::nullopt;
  return variant == HeadingVariant::avg_of_cos ? sum / count : std::cos(sum / count);
}

ForceVector electrical_force(PlanePoint p, PlanePoint a, PlanePoint b, double cos_theta,
                             const ForceConfig& cfg) {
  double c = cos_theta;
  if (c < 0.0) {
    switch (cfg.repulsion_variant) {
      case RepulsionVariant::half: c *= 0.5; break;
      case RepulsionVariant::epsilon: c = -0.001; break;
      case RepulsionVariant::zero: c = 0.0; break;
    }
  }
  if (c == 0.0) return {};

  const SegmentDistance seg = dist_point_segment(p, a, b);
  double d = seg.distance;
  if (cfg.distance_variant == DistanceVariant::line) d = dist_point_line(p, a, b);
  else if (cfg.distance_variant == DistanceVariant::midpoint) d = dist_point_midpoint(p, a, b);
  d = std::max(d, cfg.d_min);

  double law = 1.0 / d;
  switch (cfg.force_law) {
    case ForceLaw::inv_d: break;
    case ForceLaw::inv_d2: law = 1.0 / (d * d); break;
    case ForceLaw::dp_over_d2: law = dist_point_line(p, a, b) / (d * d); break;
    case ForceLaw::inv_d_dm:
      law = 1.0 / (d * std::max(dist_point_midpoint(p, a, b), cfg.d_min));
      break;
  }
  const double magnitude = cfg.c_e * std::sqrt(distance(a, b)) * c * law;

  const Vec2 toward =
      (cfg.direction_variant == DirectionVariant::perpendicular ? seg.foot : 0.5 * (a + b)) - p;
  // Rounding residue from a point lying on the edge is not a direction.
  if (norm(toward) <= 1e-9 * std::max(1.0, distance(a, b))) return {};
  return magnitude * unit(toward);
}

ForceVector electrical_force(const Trajectory& t, std::size_t i, const RoadGraph& g, EdgeIndex e,
                             const ForceConfig& cfg) {
  const auto c = heading_cos(t, i, g.direction(e), cfg.heading_variant);
  if (!c) return {};
  return electrical_force(t.plane[i], g.tail_pos(e), g.head_pos(e), *c, cfg);
}

ForceVector spring_force(PlanePoint self, PlanePoint neighbor, double natural_len,
                         const ForceConfig& cfg) {
  const double d = distance(self, neighbor);
  if (natural_len <= 0.0 || d == 0.0) return {};
  const double rest = cfg.c2_mode == NaturalLength::fixed ? cfg.c2 : natural_len;
  return (cfg.c1 * std::log(d / rest) / d) * (neighbor - self);
}

ForceVector spring_force(const Trajectory& t, std::size_t i, std::size_t neighbor,
                         const ForceConfig& cfg) {
  if (neighbor + 1 != i && i + 1 != neighbor) throw Error("spring needs adjacent points");
  return spring_force(t.plane[i], t.plane.at(neighbor), t.natural_len[std::min(i, neighbor)], cfg);
}

ForceVector net_force(const Trajectory& t, std::size_t i, const RoadGraph& g,
                      const ForceConfig& cfg) {
  ForceVector net;
  const PlanePoint p = t.plane[i];
  if (heading(t, i) || cfg.heading_variant != HeadingVariant::chord) {
    for (const EdgeHit& hit : g.edges_within(p, cfg.cutoff)) net += electrical_force(t, i, g, hit.edge, cfg);
  }
  if (i > 0) net += spring_force(t, i, i - 1, cfg);
  if (i + 1 < t.plane.size()) net += spring_force(t, i, i + 1, cfg);
  return net;
}

Vec2 step_point(Trajectory& t, std::size_t i, const RoadGraph& g, const ForceConfig& cfg) {
  Vec2 move = cfg.c4 * net_force(t, i, g, cfg);
  const double len = norm(move);
  if (len > cfg.max_step) move = (cfg.max_step / len) * move;
  t.plane[i] += move;
  return move;
}

SimulationTrace run_simulation(Trajectory& t, const RoadGraph& g, const ForceConfig& cfg) {
  cfg.validate();
  SimulationTrace trace;
  if (t.plane.empty()) return trace;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    double total = 0.0;
    for (std::size_t i = 0; i < t.plane.size(); ++i) total += norm(step_point(t, i, g, cfg));
    trace.mean_displacement.push_back(total / static_cast<double>(t.plane.size()));
  }
  return trace;
}

}  // namespace fdmm
