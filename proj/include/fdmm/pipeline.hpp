#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdmm/forces.hpp"
#include "fdmm/metrics.hpp"
#include "fdmm/roadnet.hpp"
#include "fdmm/snapper.hpp"
#include "fdmm/trajectory.hpp"

namespace fdmm {

/// Force parameters plus snapping options (`snap.*` keys) and a label.
struct MatchConfig {
  std::string label;
  ForceConfig force;
  SnapConfig snap;

  /// `label` if set, otherwise "baseline" for zero iterations or "force<N>".
  std::string resolved_label() const;
};

MatchConfig parse_match_config(std::istream& in);
MatchConfig load_match_config(const std::filesystem::path& path);

struct MatchOutcome {
  Trajectory trajectory;
  std::optional<MatchResult> match;
  EvalReport report;
  SimulationTrace trace;
  std::string error;

  bool ok() const { return match.has_value(); }
};

/// Simulation followed by snapping and evaluation. Failures are captured in
/// the outcome, never thrown.
MatchOutcome match_trajectory(Trajectory t, const RoadGraph& g, const MatchConfig& cfg);

/// Matches all trajectories on `jobs` worker threads; results keep input order.
std::vector<MatchOutcome> match_all(std::vector<Trajectory> trajectories, const RoadGraph& g,
                                    const MatchConfig& cfg, std::size_t jobs = 1);

/// Projects per-vehicle fix lists; fixes sharing a timestamp keep the first.
std::vector<Trajectory> to_trajectories(const std::vector<VehicleFixes>& vehicles,
                                        const Projection& proj);

/// Replaces characters unsafe in file names.
std::string file_stem(std::string_view trajectory_id);

struct CleanOptions {
  std::filesystem::path trajectories;
  std::filesystem::path out_dir;
  CleaningConfig cleaning;
};

struct MatchOptions {
  std::filesystem::path map;
  std::filesystem::path trajectories;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir;
  std::optional<int> iterations;
  std::size_t jobs = 1;
};

struct CompareOptions {
  std::filesystem::path map;
  std::filesystem::path trajectories;
  std::filesystem::path config_a;
  std::filesystem::path config_b;
  std::filesystem::path out_dir;
  std::size_t jobs = 1;
};

struct SynthOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
};

struct EvaluateOptions {
  std::filesystem::path map;
  std::filesystem::path trajectories;
  std::filesystem::path matches;
  std::optional<std::filesystem::path> truth;
  std::filesystem::path out_dir;
};

/// Each command returns a process exit code; `log` gets progress lines and
/// `err` error messages.
int cmd_clean(const CleanOptions& opt, std::ostream& log, std::ostream& err);
int cmd_match(const MatchOptions& opt, std::ostream& log, std::ostream& err);
int cmd_compare(const CompareOptions& opt, std::ostream& log, std::ostream& err);
int cmd_synth(const SynthOptions& opt, std::ostream& log, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace fdmm
