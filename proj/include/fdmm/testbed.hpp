#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdmm/roadnet.hpp"
#include "fdmm/trajectory.hpp"

namespace fdmm {

/// Synthetic grid city and drive parameters.
struct SynthConfig {
  int grid_n = 15;
  double block_m = 30.0;
  double oneway_fraction = 0.3;
  double noise_sigma = 20.0;
  double sample_interval = 15.0;
  double speed = 8.0;
  std::uint64_t seed = 1;
  int trajectories = 200;
  double route_length_m = 2000.0;
  bool force_loop = false;
  GeoPoint center{41.9, 12.49};
  /// Timestamp of the first fix of every drive (2014-02-01T08:00:00Z).
  double start_time = 1391241600.0;

  void validate() const;
};

bool set_synth_option(SynthConfig& cfg, std::string_view key, std::string_view value);
SynthConfig parse_synth_config(std::istream& in);

/// A driven route and the GPS fixes sampled along it.
struct SynthCase {
  std::string id;
  std::vector<EdgeIndex> truth;
  std::vector<GpsFix> fixes;
};

struct SynthDataset {
  RoadGraph graph;
  std::vector<SynthCase> cases;
};

/// grid_n x grid_n lattice. Each street is two-way, or with probability
/// oneway_fraction one-way in a seeded random direction.
RoadGraph gen_grid(const SynthConfig& cfg);

/// Seeded random walk without U-turns through random waypoints until the
/// route reaches cfg.route_length_m; with cfg.force_loop it circles one
/// block midway, returning to the same junction.
std::vector<EdgeIndex> gen_route(const RoadGraph& g, const SynthConfig& cfg, std::uint64_t seed);

/// Fixes every sample_interval seconds at constant speed along the route,
/// with isotropic Gaussian noise. The final fix sits at the route end.
std::vector<GpsFix> sample_gps(const RoadGraph& g, std::span<const EdgeIndex> truth,
                               const SynthConfig& cfg, std::uint64_t seed);

/// Seed for case `index` derived from the dataset seed.
std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index);

SynthDataset generate(const SynthConfig& cfg);

/// Node sequence visited by an edge path (tail of the first edge onward).
std::vector<NodeIndex> route_nodes(const RoadGraph& g, std::span<const EdgeIndex> route);

void write_truth_csv(std::ostream& out, const SynthDataset& data);

struct TruthPath {
  std::string trajectory_id;
  std::vector<EdgeIndex> edges;
};

std::vector<TruthPath> load_truth_csv(std::istream& in, const RoadGraph& g);

}  // namespace fdmm
