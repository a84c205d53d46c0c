#include "fdmm/testbed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <unordered_map>

#include <fmt/format.h>

namespace fdmm {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_number(std::string_view key, std::string_view value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v))
    throw Error(fmt::format("bad value '{}' for {}", value, key));
  return v;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

// Four same-handed turns around one block, starting and ending at `at`.
std::optional<std::vector<EdgeIndex>> block_loop(const RoadGraph& g, NodeIndex at,
                                                 std::optional<EdgeIndex> prev,
                                                 std::mt19937_64& rng) {
  int senses[2] = {1, -1};
  if (rng() & 1) std::swap(senses[0], senses[1]);
  for (int sense : senses) {
    for (EdgeIndex first : g.out_edges(at)) {
      if (prev && g.edge(first).to == g.edge(*prev).from) continue;
      std::vector<EdgeIndex> loop{first};
      while (loop.size() < 4) {
        const Vec2 d = g.direction(loop.back());
        std::optional<EdgeIndex> next;
        for (EdgeIndex e : g.out_edges(g.edge(loop.back()).to)) {
          const Vec2 n = g.direction(e);
          if (std::abs(dot(d, n)) < 1e-6 * norm(d) * norm(n) && cross(d, n) * sense > 0) next = e;
        }
        if (!next) break;
        loop.push_back(*next);
      }
      if (loop.size() == 4 && g.edge(loop.back()).to == at) return loop;
    }
  }
  return std::nullopt;
}

}  // namespace

void SynthConfig::validate() const {
  if (grid_n < 2) throw Error("grid_n must be at least 2");
  if (!(block_m > 0.0)) throw Error("block_m must be positive");
  if (oneway_fraction < 0.0 || oneway_fraction > 1.0)
    throw Error("oneway_fraction must lie in [0, 1]");
  if (noise_sigma < 0.0) throw Error("noise_sigma must be non-negative");
  if (!(sample_interval > 0.0) || !(speed > 0.0)) throw Error("sampling rates must be positive");
  if (trajectories < 0) throw Error("trajectories must be non-negative");
  if (!(route_length_m > 0.0)) throw Error("route_length_m must be positive");
}

bool set_synth_option(SynthConfig& cfg, std::string_view key, std::string_view value) {
  auto integer = [&] {
    const double v = to_number(key, value);
    if (v != std::floor(v)) throw Error(fmt::format("{} must be an integer", key));
    return v;
  };
  if (key == "grid_n") cfg.grid_n = static_cast<int>(integer());
  else if (key == "block_m") cfg.block_m = to_number(key, value);
  else if (key == "oneway_fraction") cfg.oneway_fraction = to_number(key, value);
  else if (key == "noise_sigma") cfg.noise_sigma = to_number(key, value);
  else if (key == "sample_interval") cfg.sample_interval = to_number(key, value);
  else if (key == "speed") cfg.speed = to_number(key, value);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer());
  else if (key == "trajectories") cfg.trajectories = static_cast<int>(integer());
  else if (key == "route_length_m") cfg.route_length_m = to_number(key, value);
  else if (key == "force_loop") {
    if (value != "true" && value != "false") throw Error("force_loop must be true or false");
    cfg.force_loop = value == "true";
  } else if (key == "center_lat") cfg.center.lat = to_number(key, value);
  else if (key == "center_lon") cfg.center.lon = to_number(key, value);
  else if (key == "start_time") cfg.start_time = parse_timestamp(value);
  else return false;
  return true;
}

SynthConfig parse_synth_config(std::istream& in) {
  SynthConfig cfg;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(fmt::format("synth config line {}: expected key = value", line_no));
    const auto key = trim(line.substr(0, eq));
    if (!set_synth_option(cfg, key, trim(line.substr(eq + 1))))
      throw Error(fmt::format("synth config line {}: unknown key '{}'", line_no, key));
  }
  cfg.validate();
  return cfg;
}

std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the pair
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RoadGraph gen_grid(const SynthConfig& cfg) {
  cfg.validate();
  const Projection proj = Projection::centered_at(cfg.center);
  RoadGraph g(proj);
  const int n = cfg.grid_n;
  const double half = 0.5 * (n - 1) * cfg.block_m;
  auto node_at = [n](int r, int c) { return static_cast<NodeIndex>(r * n + c); };
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      g.add_node(fmt::format("n{}_{}", r, c),
                 unproject({c * cfg.block_m - half, r * cfg.block_m - half}, proj));

  std::mt19937_64 rng(case_seed(cfg.seed, 0xC177ULL));
  int street = 0;
  auto add = [&](NodeIndex a, NodeIndex b, std::string name) {
    const bool oneway = uniform01(rng) < cfg.oneway_fraction;
    const bool flip = (rng() & 1) != 0;
    if (oneway && flip) std::swap(a, b);
    g.add_street(fmt::format("{}", ++street), a, b, oneway, std::move(name));
  };
  for (int r = 0; r < n; ++r)
    for (int c = 0; c + 1 < n; ++c) add(node_at(r, c), node_at(r, c + 1), fmt::format("Row {}", r));
  for (int c = 0; c < n; ++c)
    for (int r = 0; r + 1 < n; ++r) add(node_at(r, c), node_at(r + 1, c), fmt::format("Col {}", c));
  return g;
}

std::vector<EdgeIndex> gen_route(const RoadGraph& g, const SynthConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = g.nodes().size();
  if (n < 2) throw Error("graph too small for a route");
  const double target_len = cfg.route_length_m;

  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<EdgeIndex> route;
    double len = 0.0;
    NodeIndex at = static_cast<NodeIndex>(pick(rng, n));
    NodeIndex goal = static_cast<NodeIndex>(pick(rng, n));
    std::optional<EdgeIndex> prev;
    bool looped = !cfg.force_loop;
    bool stuck = false;

    while (len < target_len || !looped) {
      if (len > 3.0 * target_len) {
        stuck = true;
        break;
      }
      if (!looped && len >= 0.5 * target_len) {
        if (auto loop = block_loop(g, at, prev, rng)) {
          for (EdgeIndex e : *loop) {
            route.push_back(e);
            len += g.edge(e).length;
          }
          prev = loop->back();
          looped = true;
          continue;
        }
      }
      while (goal == at) goal = static_cast<NodeIndex>(pick(rng, n));

      std::vector<EdgeIndex> options;
      std::vector<double> weights;
      const PlanePoint goal_pos = g.node(goal).pos;
      const double here = distance(g.node(at).pos, goal_pos);
      for (EdgeIndex e : g.out_edges(at)) {
        if (prev && g.edge(e).to == g.edge(*prev).from) continue;  // U-turn
        double w = 1.0;
        if (distance(g.node(g.edge(e).to).pos, goal_pos) < here) w *= 4.0;
        if (prev && cos_between(g.direction(*prev), g.direction(e)) > 0.99) w *= 3.0;
        options.push_back(e);
        weights.push_back(w);
      }
      if (options.empty()) {
        stuck = true;
        break;
      }
      double total = 0.0;
      for (double w : weights) total += w;
      double u = uniform01(rng) * total;
      std::size_t k = 0;
      while (k + 1 < options.size() && u >= weights[k]) u -= weights[k++];

      route.push_back(options[k]);
      len += g.edge(options[k]).length;
      prev = options[k];
      at = g.edge(options[k]).to;
    }
    if (!stuck) return route;
  }
  throw Error("could not generate a route");
}

std::vector<GpsFix> sample_gps(const RoadGraph& g, std::span<const EdgeIndex> truth,
                               const SynthConfig& cfg, std::uint64_t seed) {
  if (truth.empty()) throw Error("empty route");
  std::vector<double> cum{0.0};
  for (EdgeIndex e : truth) cum.push_back(cum.back() + g.edge(e).length);
  const double total = cum.back();
  const double spacing = cfg.speed * cfg.sample_interval;
  const auto count = static_cast<std::size_t>(std::ceil(total / spacing - 1e-9)) + 1;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
  std::vector<GpsFix> fixes;
  fixes.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = std::min(total, double(k) * spacing);
    while (seg + 1 < truth.size() && cum[seg + 1] < s) ++seg;
    PlanePoint p = g.point_at({truth[seg], s - cum[seg]});
    if (cfg.noise_sigma > 0.0) {
      const double dx = noise(rng);
      const double dy = noise(rng);
      p += Vec2{dx, dy};
    }
    fixes.push_back({unproject(p, g.projection()), cfg.start_time + s / cfg.speed});
  }
  return fixes;
}

SynthDataset generate(const SynthConfig& cfg) {
  SynthDataset data{gen_grid(cfg), {}};
  for (int k = 0; k < cfg.trajectories; ++k) {
    SynthCase c;
    c.id = fmt::format("t{:04d}", k);
    c.truth = gen_route(data.graph, cfg, case_seed(cfg.seed, 2 * std::uint64_t(k) + 1));
    c.fixes = sample_gps(data.graph, c.truth, cfg, case_seed(cfg.seed, 2 * std::uint64_t(k) + 2));
    data.cases.push_back(std::move(c));
  }
  return data;
}

std::vector<NodeIndex> route_nodes(const RoadGraph& g, std::span<const EdgeIndex> route) {
  std::vector<NodeIndex> out;
  if (route.empty()) return out;
  out.push_back(g.edge(route.front()).from);
  for (EdgeIndex e : route) out.push_back(g.edge(e).to);
  return out;
}

void write_truth_csv(std::ostream& out, const SynthDataset& data) {
  out << "trajectory_id,seq,edge_id\n";
  for (const auto& c : data.cases)
    for (std::size_t k = 0; k < c.truth.size(); ++k)
      out << fmt::format("{},{},{}\n", c.id, k, data.graph.edge(c.truth[k]).id);
}

std::vector<TruthPath> load_truth_csv(std::istream& in, const RoadGraph& g) {
  std::vector<TruthPath> out;
  std::unordered_map<std::string, std::size_t> index;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.starts_with("trajectory_id")) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos)
      throw Error(fmt::format("truth file line {}: malformed record", line_no));
    const std::string id(trim(line.substr(0, c1)));
    const auto edge = g.find_edge(trim(line.substr(c2 + 1)));
    if (!edge) throw Error(fmt::format("truth file line {}: unknown edge", line_no));
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back({id, {}});
    out[it->second].edges.push_back(*edge);
  }
  return out;
}

}  // namespace fdmm
