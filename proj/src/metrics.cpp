#include "fdmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>

namespace fdmm {

double length_index(const Trajectory& t, const MatchResult& m) {
  const double poly = polyline_length(t);
  if (!(poly > 0.0)) throw Error("zero polyline length");
  return m.path_length / poly;
}

double avg_error(const Trajectory& t, const MatchResult& m, const RoadGraph& g) {
  if (m.path.empty()) throw Error("empty path");
  if (t.observed.empty()) throw Error("empty trajectory");
  std::vector<std::pair<PlanePoint, PlanePoint>> segments;
  segments.reserve(m.path.size());
  for (const PathStep& s : m.path)
    segments.emplace_back(g.point_at({s.edge, s.entry}), g.point_at({s.edge, s.exit}));

  double total = 0.0;
  for (const PlanePoint p : t.observed) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : segments) {
      const double d = a == b ? distance(p, a) : dist_point_segment(p, a, b).distance;
      best = std::min(best, d);
    }
    total += best;
  }
  return total / static_cast<double>(t.observed.size());
}

EvalReport evaluate(const Trajectory& t, const MatchResult& m, const RoadGraph& g) {
  EvalReport r;
  r.trajectory_id = t.id;
  r.length_index = length_index(t, m);
  r.avg_error = avg_error(t, m, g);
  r.gap_count = m.gaps.size();
  r.points = t.size();
  r.polyline_length = polyline_length(t);
  return r;
}

TruthScores ground_truth_scores(const MatchResult& m, std::span<const EdgeIndex> truth,
                                const RoadGraph& g) {
  if (truth.empty()) throw Error("empty truth path");
  std::set<EdgeIndex> matched;
  for (const PathStep& s : m.path)
    if (s.length() > 0.0) matched.insert(s.edge);
  const std::set<EdgeIndex> expected(truth.begin(), truth.end());
  std::size_t common = 0;
  for (EdgeIndex e : matched) common += expected.count(e);
  double truth_len = 0.0;
  for (EdgeIndex e : truth) truth_len += g.edge(e).length;

  TruthScores s;
  s.edge_precision = matched.empty() ? 0.0 : double(common) / double(matched.size());
  s.edge_recall = double(common) / double(expected.size());
  s.length_ratio = m.path_length / truth_len;
  return s;
}

double edge_recall(const MatchResult& m, std::span<const EdgeIndex> subset) {
  if (subset.empty()) throw Error("empty edge subset");
  std::set<EdgeIndex> matched;
  for (const PathStep& s : m.path)
    if (s.length() > 0.0) matched.insert(s.edge);
  const std::set<EdgeIndex> want(subset.begin(), subset.end());
  std::size_t hit = 0;
  for (EdgeIndex e : want) hit += matched.count(e);
  return double(hit) / double(want.size());
}

bool same_path(const MatchResult& a, const MatchResult& b) {
  return std::equal(a.path.begin(), a.path.end(), b.path.begin(), b.path.end(),
                    [](const PathStep& x, const PathStep& y) { return x.edge == y.edge; });
}

namespace {

std::vector<Bucket> bucketize(std::span<const EvalReport> reports, double width,
                              auto&& key) {
  std::map<long, Bucket> buckets;
  for (const EvalReport& r : reports) {
    const auto idx = static_cast<long>(std::floor(key(r) / width));
    Bucket& b = buckets[idx];
    b.lo = double(idx) * width;
    b.hi = b.lo + width;
    ++b.count;
    b.mean_length_index += r.length_index;
    b.mean_avg_error += r.avg_error;
  }
  std::vector<Bucket> out;
  for (auto& [idx, b] : buckets) {
    b.mean_length_index /= double(b.count);
    b.mean_avg_error /= double(b.count);
    out.push_back(b);
  }
  return out;
}

}  // namespace

Summary aggregate(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error("nothing to aggregate");
  Summary s;
  s.config_label = reports.front().config_label;
  s.iterations = reports.front().iterations;
  s.count = reports.size();
  for (const EvalReport& r : reports) {
    s.mean_length_index += r.length_index;
    s.mean_abs_index_deviation += std::abs(r.length_index - 1.0);
    s.mean_avg_error += r.avg_error;
    s.mean_runtime += r.runtime;
    s.total_gaps += r.gap_count;
  }
  const double n = double(reports.size());
  s.mean_length_index /= n;
  s.mean_abs_index_deviation /= n;
  s.mean_avg_error /= n;
  s.mean_runtime /= n;
  s.by_length = bucketize(reports, 5000.0, [](const EvalReport& r) { return r.polyline_length; });
  s.by_points = bucketize(reports, 200.0, [](const EvalReport& r) { return double(r.points); });
  return s;
}

double identical_path_share(std::span<const MatchResult> a, std::span<const MatchResult> b) {
  if (a.size() != b.size()) throw Error("match sets differ in size");
  if (a.empty()) throw Error("nothing to compare");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += same_path(a[i], b[i]) ? 1 : 0;
  return double(same) / double(a.size());
}

void write_report_csv_header(std::ostream& out) {
  out << "trajectory_id,config_label,iterations,length_index,avg_error_m,runtime_s,gap_count\n";
}

void write_report_csv(std::ostream& out, std::span<const EvalReport> reports,
                      bool with_runtime) {
  for (const EvalReport& r : reports) {
    const std::string runtime = with_runtime ? fmt::format("{:.6f}", r.runtime) : "";
    out << fmt::format("{},{},{},{:.6f},{:.6f},{},{}\n", r.trajectory_id, r.config_label,
                       r.iterations, r.length_index, r.avg_error, runtime, r.gap_count);
  }
}

void write_summary_csv(std::ostream& out, std::span<const Summary> summaries,
                       double identical_pct) {
  out << "# runtime_s covers force simulation and snapping per trajectory; "
         "graph loading is excluded\n";
  out << "metric";
  for (const Summary& s : summaries) out << ',' << s.config_label;
  out << '\n';
  auto row = [&](std::string_view name, auto&& value) {
    out << name;
    for (const Summary& s : summaries) out << ',' << value(s);
    out << '\n';
  };
  row("iterations", [](const Summary& s) { return fmt::format("{}", s.iterations); });
  row("trajectories", [](const Summary& s) { return fmt::format("{}", s.count); });
  row("length_index", [](const Summary& s) { return fmt::format("{:.6f}", s.mean_length_index); });
  row("abs_length_index_deviation",
      [](const Summary& s) { return fmt::format("{:.6f}", s.mean_abs_index_deviation); });
  row("avg_error_m", [](const Summary& s) { return fmt::format("{:.6f}", s.mean_avg_error); });
  row("runtime_s", [](const Summary& s) { return fmt::format("{:.6f}", s.mean_runtime); });
  row("gaps", [](const Summary& s) { return fmt::format("{}", s.total_gaps); });
  if (identical_pct >= 0.0)
    row("identical_path_pct", [&](const Summary&) { return fmt::format("{:.6f}", identical_pct); });
}

void write_distribution_csv(std::ostream& out, std::span<const Summary> summaries) {
  out << "config_label,dimension,bucket_lo,bucket_hi,count,mean_length_index,mean_avg_error_m\n";
  for (const Summary& s : summaries) {
    auto emit = [&](std::string_view dim, const std::vector<Bucket>& buckets) {
      for (const Bucket& b : buckets)
        out << fmt::format("{},{},{:.6f},{:.6f},{},{:.6f},{:.6f}\n", s.config_label, dim, b.lo,
                           b.hi, b.count, b.mean_length_index, b.mean_avg_error);
    };
    emit("length_m", s.by_length);
    emit("points", s.by_points);
  }
}

}  // namespace fdmm
