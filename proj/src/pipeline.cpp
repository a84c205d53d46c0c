#include "fdmm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "fdmm/testbed.hpp"

namespace fdmm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << content;
}

json force_json(const ForceConfig& f) {
  return {{"c_e", f.c_e},
          {"c1", f.c1},
          {"c2_mode", to_string(f.c2_mode)},
          {"c2", f.c2},
          {"c4", f.c4},
          {"cutoff", f.cutoff},
          {"iterations", f.iterations},
          {"distance_variant", to_string(f.distance_variant)},
          {"heading_variant", to_string(f.heading_variant)},
          {"repulsion_variant", to_string(f.repulsion_variant)},
          {"direction_variant", to_string(f.direction_variant)},
          {"force_law", to_string(f.force_law)},
          {"max_step", f.max_step},
          {"d_min", f.d_min}};
}

json snap_json(const SnapConfig& s) {
  return {{"radii", s.radii},
          {"epsilon", s.epsilon},
          {"require_alignment", s.require_alignment},
          {"score", s.score == SnapScore::aligned ? "aligned" : "nearest"},
          {"stride", s.stride},
          {"reverse_tolerance", s.reverse_tolerance},
          {"skip_detours", s.skip_detours},
          {"detour_slack", s.detour_slack}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct LoadedInputs {
  RoadGraph graph;
  std::vector<Trajectory> trajectories;
};

LoadedInputs load_inputs(const fs::path& map, const fs::path& trajectories) {
  RoadGraph g = load_graph(map);
  auto vehicles = load_trajectories(trajectories);
  auto trajs = to_trajectories(vehicles, g.projection());
  return {std::move(g), std::move(trajs)};
}

}  // namespace

std::string MatchConfig::resolved_label() const {
  if (!label.empty()) return label;
  return force.iterations == 0 ? "baseline" : fmt::format("force{}", force.iterations);
}

MatchConfig parse_match_config(std::istream& in) {
  MatchConfig cfg;
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
    const auto value = trim(line.substr(eq + 1));
    bool known = false;
    if (key == "label") {
      cfg.label = std::string(value);
      known = true;
    } else if (key.starts_with("snap.")) {
      known = set_snap_option(cfg.snap, key.substr(5), value);
    } else {
      known = set_force_option(cfg.force, key, value);
    }
    if (!known) throw Error(fmt::format("config line {}: unknown key '{}'", line_no, key));
  }
  cfg.force.validate();
  cfg.snap.validate();
  return cfg;
}

MatchConfig load_match_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open config '{}'", path.string()));
  return parse_match_config(in);
}

MatchOutcome match_trajectory(Trajectory t, const RoadGraph& g, const MatchConfig& cfg) {
  MatchOutcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    out.trace = run_simulation(t, g, cfg.force);
    MatchResult m = snap_route(t, g, cfg.snap);
    const double runtime = seconds_since(start);
    out.report = evaluate(t, m, g);
    out.report.runtime = runtime;
    out.match = std::move(m);
  } catch (const Error& e) {
    out.error = e.what();
    out.report.trajectory_id = t.id;
    out.report.points = t.size();
  }
  out.report.config_label = cfg.resolved_label();
  out.report.iterations = cfg.force.iterations;
  out.trajectory = std::move(t);
  return out;
}

std::vector<MatchOutcome> match_all(std::vector<Trajectory> trajectories, const RoadGraph& g,
                                    const MatchConfig& cfg, std::size_t jobs) {
  std::vector<MatchOutcome> results(trajectories.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < trajectories.size(); i = next++)
      results[i] = match_trajectory(std::move(trajectories[i]), g, cfg);
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, trajectories.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return results;
}

std::vector<Trajectory> to_trajectories(const std::vector<VehicleFixes>& vehicles,
                                        const Projection& proj) {
  std::vector<Trajectory> out;
  out.reserve(vehicles.size());
  for (const auto& v : vehicles) {
    std::vector<GpsFix> fixes = v.fixes;
    fixes.erase(std::unique(fixes.begin(), fixes.end(),
                            [](const GpsFix& a, const GpsFix& b) { return a.t == b.t; }),
                fixes.end());
    out.push_back(Trajectory::from_fixes(v.id, std::move(fixes), proj));
  }
  return out;
}

std::string file_stem(std::string_view trajectory_id) {
  std::string s(trajectory_id);
  for (char& c : s) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == '.';
    if (!safe) c = '_';
  }
  if (s.empty() || s == "." || s == "..") s = "_" + s;
  return s;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_clean(const CleanOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const auto vehicles = load_trajectories(opt.trajectories);
    fs::create_directories(opt.out_dir);
    CleaningReport total;
    std::vector<Track> tracks;
    for (const auto& v : vehicles) {
      auto res = clean(v.id, v.fixes, opt.cleaning);
      total += res.report;
      for (auto& t : res.tracks) tracks.push_back(std::move(t));
    }
    std::ostringstream cleaned;
    write_trajectories(cleaned, tracks);
    write_file(opt.out_dir / "cleaned.csv", cleaned.str());

    const std::pair<std::string_view, std::size_t> rows[] = {
        {"points_in", total.points_in},
        {"points_out", total.points_out},
        {"points_deleted", total.points_deleted},
        {"points_interpolated", total.points_interpolated},
        {"points_dropped", total.points_dropped},
        {"splits", total.splits},
        {"trajectories_out", total.trajectories_out},
        {"trajectories_dropped", total.trajectories_dropped}};
    std::string report = "count,value\n";
    log << fmt::format("{:<22}{:>12}\n", "count", "value");
    for (const auto& [name, value] : rows) {
      report += fmt::format("{},{}\n", name, value);
      log << fmt::format("{:<22}{:>12}\n", name, value);
    }
    write_file(opt.out_dir / "cleaning_report.csv", report);
    return 0;
  } catch (const std::exception& e) {
    err << "clean: " << e.what() << '\n';
    return 1;
  }
}

int cmd_match(const MatchOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    MatchConfig cfg = opt.config ? load_match_config(*opt.config) : MatchConfig{};
    if (opt.iterations) {
      cfg.force.iterations = *opt.iterations;
      cfg.force.validate();
    }
    const std::string label = cfg.resolved_label();

    const auto load_start = std::chrono::steady_clock::now();
    auto inputs = load_inputs(opt.map, opt.trajectories);
    const double load_s = seconds_since(load_start);

    fs::create_directories(opt.out_dir / "routes");
    json manifest;
    manifest["inputs"] = {{"map", opt.map.string()},
                          {"trajectories", opt.trajectories.string()},
                          {"config", opt.config ? opt.config->string() : ""}};
    manifest["config_label"] = label;
    manifest["force_config"] = force_json(cfg.force);
    manifest["snap_config"] = snap_json(cfg.snap);
    manifest["output_dir"] = opt.out_dir.string();
    manifest["status"] = "running";
    write_file(opt.out_dir / "manifest.json", manifest.dump(2) + "\n");

    const auto match_start = std::chrono::steady_clock::now();
    auto outcomes = match_all(std::move(inputs.trajectories), inputs.graph, cfg, opt.jobs);
    const double match_s = seconds_since(match_start);

    std::ostringstream report_all;
    write_report_csv_header(report_all);
    json entries = json::array();
    std::size_t failed = 0;
    for (const auto& o : outcomes) {
      const std::string stem = file_stem(o.trajectory.id);
      json entry = {{"trajectory_id", o.trajectory.id}};
      if (o.ok()) {
        std::ostringstream geo, edges, report;
        write_geojson(geo, *o.match, o.trajectory, inputs.graph);
        write_edge_csv_header(edges);
        write_edge_csv(edges, *o.match, inputs.graph);
        write_report_csv_header(report);
        write_report_csv(report, std::span(&o.report, 1), false);
        write_file(opt.out_dir / "routes" / (stem + ".geojson"), geo.str());
        write_file(opt.out_dir / "routes" / (stem + ".edges.csv"), edges.str());
        write_file(opt.out_dir / "routes" / (stem + ".report.csv"), report.str());
        write_report_csv(report_all, std::span(&o.report, 1), false);
        entry["status"] = "matched";
        entry["runtime_s"] = o.report.runtime;
        entry["gap_count"] = o.report.gap_count;
        log << fmt::format("{} {} points={} length_index={:.6f} avg_error_m={:.6f} gaps={}\n",
                           o.trajectory.id, label, o.report.points, o.report.length_index,
                           o.report.avg_error, o.report.gap_count);
      } else {
        ++failed;
        entry["status"] = "failed";
        entry["error"] = o.error;
        log << fmt::format("{} {} failed: {}\n", o.trajectory.id, label, o.error);
      }
      entries.push_back(std::move(entry));
    }
    write_file(opt.out_dir / "report.csv", report_all.str());

    manifest["status"] = "complete";
    manifest["trajectories"] = std::move(entries);
    manifest["timing"] = {{"graph_load_s", load_s},
                          {"match_total_s", match_s},
                          {"matched", outcomes.size() - failed},
                          {"failed", failed}};
    write_file(opt.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
  } catch (const std::exception& e) {
    err << "match: " << e.what() << '\n';
    return 1;
  }
}

int cmd_compare(const CompareOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const MatchConfig cfg_a = load_match_config(opt.config_a);
    const MatchConfig cfg_b = load_match_config(opt.config_b);
    auto inputs = load_inputs(opt.map, opt.trajectories);
    if (inputs.trajectories.empty()) throw Error("nothing to compare");

    auto run_a = match_all(inputs.trajectories, inputs.graph, cfg_a, opt.jobs);
    auto run_b = match_all(std::move(inputs.trajectories), inputs.graph, cfg_b, opt.jobs);

    // Only trajectories matched by both runs enter the comparison.
    std::vector<EvalReport> rep_a, rep_b;
    std::vector<MatchResult> m_a, m_b;
    for (std::size_t i = 0; i < run_a.size(); ++i) {
      if (!run_a[i].ok() || !run_b[i].ok()) {
        log << fmt::format("{} skipped: {}\n", run_a[i].trajectory.id,
                           run_a[i].ok() ? run_b[i].error : run_a[i].error);
        continue;
      }
      rep_a.push_back(run_a[i].report);
      rep_b.push_back(run_b[i].report);
      m_a.push_back(*run_a[i].match);
      m_b.push_back(*run_b[i].match);
    }
    if (rep_a.empty()) throw Error("nothing to compare");

    const Summary summaries[] = {aggregate(rep_a), aggregate(rep_b)};
    const double identical = 100.0 * identical_path_share(m_a, m_b);

    fs::create_directories(opt.out_dir);
    std::ostringstream summary, report, dist;
    write_summary_csv(summary, summaries, identical);
    write_report_csv_header(report);
    write_report_csv(report, rep_a);
    write_report_csv(report, rep_b);
    write_distribution_csv(dist, summaries);
    write_file(opt.out_dir / "summary.csv", summary.str());
    write_file(opt.out_dir / "report.csv", report.str());
    write_file(opt.out_dir / "distribution.csv", dist.str());

    log << fmt::format("{:<28}{:>16}{:>16}\n", "", summaries[0].config_label,
                       summaries[1].config_label);
    auto line = [&](std::string_view name, double a, double b) {
      log << fmt::format("{:<28}{:>16.6f}{:>16.6f}\n", name, a, b);
    };
    line("length index", summaries[0].mean_length_index, summaries[1].mean_length_index);
    line("avg error (m)", summaries[0].mean_avg_error, summaries[1].mean_avg_error);
    line("runtime (s)", summaries[0].mean_runtime, summaries[1].mean_runtime);
    log << fmt::format("{:<28}{:>16}\n", "trajectories", summaries[0].count);
    log << fmt::format("{:<28}{:>15.2f}%\n", "identical paths", identical);
    return 0;
  } catch (const std::exception& e) {
    err << "compare: " << e.what() << '\n';
    return 1;
  }
}

int cmd_synth(const SynthOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    SynthConfig cfg;
    if (opt.config) {
      std::ifstream in(*opt.config);
      if (!in) throw Error(fmt::format("cannot open synth config '{}'", opt.config->string()));
      cfg = parse_synth_config(in);
    }
    if (opt.seed) cfg.seed = *opt.seed;
    cfg.validate();
    const SynthDataset data = generate(cfg);

    fs::create_directories(opt.out_dir);
    std::ostringstream map, trajs, truth;
    write_road_file(data.graph, map);
    std::vector<Track> tracks;
    for (const auto& c : data.cases) tracks.push_back({c.id, c.fixes, {}});
    write_trajectories(trajs, tracks);
    write_truth_csv(truth, data);
    write_file(opt.out_dir / "map.txt", map.str());
    write_file(opt.out_dir / "trajectories.csv", trajs.str());
    write_file(opt.out_dir / "truth.csv", truth.str());
    log << fmt::format("synth: {} nodes, {} directed edges, {} trajectories (seed {})\n",
                       data.graph.nodes().size(), data.graph.edges().size(), data.cases.size(),
                       cfg.seed);
    return 0;
  } catch (const std::exception& e) {
    err << "synth: " << e.what() << '\n';
    return 1;
  }
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    auto inputs = load_inputs(opt.map, opt.trajectories);
    const RoadGraph& g = inputs.graph;

    std::map<std::string, std::vector<PathStep>> steps;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(opt.matches))
      if (entry.is_regular_file() && entry.path().string().ends_with(".edges.csv"))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line.starts_with("trajectory_id")) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
        if (f.size() != 5) throw Error(fmt::format("malformed edge row in '{}'", file.string()));
        const auto e = g.find_edge(f[2]);
        if (!e) throw Error(fmt::format("unknown edge '{}' in '{}'", f[2], file.string()));
        steps[f[0]].push_back({*e, std::stod(f[3]), std::stod(f[4])});
      }
    }

    std::map<std::string, std::vector<EdgeIndex>> truth;
    if (opt.truth) {
      std::ifstream in(*opt.truth);
      if (!in) throw Error(fmt::format("cannot open truth file '{}'", opt.truth->string()));
      for (auto& t : load_truth_csv(in, g)) truth[t.trajectory_id] = std::move(t.edges);
    }

    fs::create_directories(opt.out_dir);
    std::string out =
        "trajectory_id,length_index,avg_error_m,gap_count,edge_precision,edge_recall,"
        "length_ratio\n";
    std::vector<EvalReport> reports;
    for (const auto& t : inputs.trajectories) {
      auto it = steps.find(t.id);
      if (it == steps.end()) continue;
      const MatchResult m = match_from_steps(t.id, it->second, g);
      EvalReport r = evaluate(t, m, g);
      r.gap_count = m.breaks.size();
      r.config_label = "evaluated";
      reports.push_back(r);
      std::string truth_cols = ",,";
      if (auto tt = truth.find(t.id); tt != truth.end()) {
        const TruthScores s = ground_truth_scores(m, tt->second, g);
        truth_cols = fmt::format("{:.6f},{:.6f},{:.6f}", s.edge_precision, s.edge_recall,
                                 s.length_ratio);
      }
      out += fmt::format("{},{:.6f},{:.6f},{},{}\n", t.id, r.length_index, r.avg_error,
                         r.gap_count, truth_cols);
    }
    write_file(opt.out_dir / "evaluation.csv", out);
    if (reports.empty()) throw Error("no matched trajectories to evaluate");
    const Summary s = aggregate(reports);
    log << fmt::format("evaluated {} trajectories: mean length index {:.6f}, "
                       "mean avg error {:.6f} m\n",
                       s.count, s.mean_length_index, s.mean_avg_error);
    return 0;
  } catch (const std::exception& e) {
    err << "evaluate: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fdmm
