#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdmm/roadnet.hpp"
#include "fdmm/snapper.hpp"
#include "fdmm/trajectory.hpp"

namespace fdmm {

struct EvalReport {
  std::string trajectory_id;
  std::string config_label;
  int iterations = 0;
  double length_index = 0.0;
  double avg_error = 0.0;
  double runtime = 0.0;
  std::size_t gap_count = 0;
  std::size_t points = 0;
  double polyline_length = 0.0;
};

/// Matched route length over the observed GPS polyline length.
double length_index(const Trajectory& t, const MatchResult& m);

/// Mean distance from each observed (pre-simulation) fix to the closest
/// fragment of the matched path.
double avg_error(const Trajectory& t, const MatchResult& m, const RoadGraph& g);

EvalReport evaluate(const Trajectory& t, const MatchResult& m, const RoadGraph& g);

struct TruthScores {
  double edge_precision = 0.0;
  double edge_recall = 0.0;
  double length_ratio = 0.0;
};

/// Directed-edge-set precision and recall against a known driven path, and
/// matched length over truth length.
TruthScores ground_truth_scores(const MatchResult& m, std::span<const EdgeIndex> truth,
                                const RoadGraph& g);

/// Share of `subset` edges present in the matched path.
double edge_recall(const MatchResult& m, std::span<const EdgeIndex> subset);

/// True when both paths traverse the same edge sequence.
bool same_path(const MatchResult& a, const MatchResult& b);

struct Bucket {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_length_index = 0.0;
  double mean_avg_error = 0.0;
};

struct Summary {
  std::string config_label;
  int iterations = 0;
  std::size_t count = 0;
  double mean_length_index = 0.0;
  double mean_abs_index_deviation = 0.0;
  double mean_avg_error = 0.0;
  double mean_runtime = 0.0;
  std::size_t total_gaps = 0;
  /// Trajectory length in 5 km bins.
  std::vector<Bucket> by_length;
  /// Point count in 200-point bins.
  std::vector<Bucket> by_points;
};

/// Unweighted per-trajectory means. Throws Error on empty input.
Summary aggregate(std::span<const EvalReport> reports);

/// Fraction of trajectories matched to identical paths by two runs; the
/// inputs are aligned by position.
double identical_path_share(std::span<const MatchResult> a, std::span<const MatchResult> b);

void write_report_csv_header(std::ostream& out);
/// With `with_runtime` false the runtime_s field is left empty.
void write_report_csv(std::ostream& out, std::span<const EvalReport> reports,
                      bool with_runtime = true);

/// Metric rows, one column per configuration. `identical_pct` < 0 omits the row.
void write_summary_csv(std::ostream& out, std::span<const Summary> summaries,
                       double identical_pct = -1.0);

/// Distribution table: one row per configuration and bucket.
void write_distribution_csv(std::ostream& out, std::span<const Summary> summaries);

}  // namespace fdmm
