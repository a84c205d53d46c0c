#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdmm/geo.hpp"
#include "fdmm/roadnet.hpp"
#include "fdmm/trajectory.hpp"

namespace fdmm {

/// Which distance d enters the electrical force.
enum class DistanceVariant { line, segment, midpoint };
/// How cos(theta) between an edge and the trajectory is measured.
enum class HeadingVariant { chord, avg_of_cos, cos_of_avg };
/// Replacement for a negative cos(theta).
enum class RepulsionVariant { half, epsilon, zero };
/// Where the electrical force points.
enum class DirectionVariant { perpendicular, midpoint };
/// Electrical force law: c*sqrt(l)*cos / d, / d^2, * d_p / d^2, / (d * d_m).
enum class ForceLaw { inv_d, inv_d2, dp_over_d2, inv_d_dm };
/// Spring rest length: the observed segment length or the constant c2.
enum class NaturalLength { observed, fixed };

using ForceVector = Vec2;

struct ForceConfig {
  double c_e = 1.0;
  double c1 = 1.0;
  NaturalLength c2_mode = NaturalLength::observed;
  double c2 = 30.0;
  double c4 = 0.05;
  double cutoff = 100.0;
  int iterations = 20;
  DistanceVariant distance_variant = DistanceVariant::segment;
  HeadingVariant heading_variant = HeadingVariant::chord;
  RepulsionVariant repulsion_variant = RepulsionVariant::half;
  DirectionVariant direction_variant = DirectionVariant::perpendicular;
  ForceLaw force_law = ForceLaw::inv_d;
  double max_step = 10.0;
  double d_min = 1.0;

  /// Throws Error on a violated invariant.
  void validate() const;
};

/// Sets one `key = value` option. Returns false for an unknown key; throws
/// Error for a bad value.
bool set_force_option(ForceConfig& cfg, std::string_view key, std::string_view value);

/// Reads `key = value` lines (`#` comments). Unknown keys are errors.
ForceConfig parse_force_config(std::istream& in);

/// Writes every option as `key = value`, in declaration order.
void write_force_config(std::ostream& out, const ForceConfig& cfg);

/// Unit chord direction at point i (plane[i+1] - plane[i-1], one-sided at
/// the ends). nullopt when the chord has zero length.
std::optional<Vec2> heading(const Trajectory& t, std::size_t i);

/// cos(theta) between `edge_dir` and the trajectory at point i under the
/// selected variant. nullopt when the heading is undefined.
std::optional<double> heading_cos(const Trajectory& t, std::size_t i, Vec2 edge_dir,
                                  HeadingVariant variant);

/// Force exerted on p by the road segment a->b given the raw cos(theta).
/// Positive magnitudes pull p toward the segment.
ForceVector electrical_force(PlanePoint p, PlanePoint a, PlanePoint b, double cos_theta,
                             const ForceConfig& cfg);

ForceVector electrical_force(const Trajectory& t, std::size_t i, const RoadGraph& g, EdgeIndex e,
                             const ForceConfig& cfg);

/// Log spring between `self` and `neighbor`; positive contracts.
ForceVector spring_force(PlanePoint self, PlanePoint neighbor, double natural_len,
                         const ForceConfig& cfg);

ForceVector spring_force(const Trajectory& t, std::size_t i, std::size_t neighbor,
                         const ForceConfig& cfg);

/// Sum of electrical forces from edges within the cutoff and both springs.
ForceVector net_force(const Trajectory& t, std::size_t i, const RoadGraph& g,
                      const ForceConfig& cfg);

/// Moves plane[i] by c4 * net force, clamped to max_step. Returns the move.
Vec2 step_point(Trajectory& t, std::size_t i, const RoadGraph& g, const ForceConfig& cfg);

struct SimulationTrace {
  /// Mean displacement length per iteration.
  std::vector<double> mean_displacement;
};

/// Runs cfg.iterations sweeps, updating points in order and in place.
SimulationTrace run_simulation(Trajectory& t, const RoadGraph& g, const ForceConfig& cfg);

std::string_view to_string(DistanceVariant v);
std::string_view to_string(HeadingVariant v);
std::string_view to_string(RepulsionVariant v);
std::string_view to_string(DirectionVariant v);
std::string_view to_string(ForceLaw v);
std::string_view to_string(NaturalLength v);

}  // namespace fdmm
