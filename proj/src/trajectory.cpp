#include "fdmm/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>

namespace fdmm {

// ---------------------------------------------------------------------------
// Timestamps

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);
}

class Cursor {
public:
  explicit Cursor(std::string_view s) : s_(s) {}

  int digits(std::size_t n) {
    if (pos_ + n > s_.size()) fail();
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char c = s_[pos_++];
      if (c < '0' || c > '9') fail();
      v = v * 10 + (c - '0');
    }
    return v;
  }
  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail();
    ++pos_;
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool done() const { return pos_ == s_.size(); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  [[noreturn]] void fail() const { throw Error(fmt::format("bad timestamp '{}'", s_)); }

private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

}  // namespace

double parse_timestamp(std::string_view text) {
  text = trim_view(text);
  double epoch = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), epoch);
  if (ec == std::errc() && ptr == text.data() + text.size()) return epoch;

  Cursor c(text);
  const int year = c.digits(4);
  c.expect('-');
  const int month = c.digits(2);
  c.expect('-');
  const int day = c.digits(2);
  if (!c.accept('T') && !c.accept(' ')) c.fail();
  const int hh = c.digits(2);
  c.expect(':');
  const int mm = c.digits(2);
  c.expect(':');
  const int ss = c.digits(2);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60) c.fail();
  double frac = 0.0;
  if (c.accept('.')) {
    double scale = 0.1;
    bool any = false;
    while (c.peek() >= '0' && c.peek() <= '9') {
      frac += scale * c.digits(1);
      scale *= 0.1;
      any = true;
    }
    if (!any) c.fail();
  }
  int offset_s = 0;
  if (!c.accept('Z')) {
    const char sign = c.peek();
    if (sign == '+' || sign == '-') {
      c.accept(sign);
      int oh = c.digits(2), om = 0;
      if (c.accept(':')) om = c.digits(2);
      else if (!c.done()) om = c.digits(2);
      offset_s = (sign == '+' ? 1 : -1) * (oh * 3600 + om * 60);
    }
  }
  if (!c.done()) c.fail();
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  return static_cast<double>(days * 86400 + hh * 3600 + mm * 60 + ss - offset_s) + frac;
}

std::string format_timestamp(double t) {
  const double whole = std::floor(t);
  auto micros = static_cast<std::int64_t>(std::llround((t - whole) * 1e6));
  auto secs = static_cast<std::int64_t>(whole);
  if (micros == 1000000) {
    ++secs;
    micros = 0;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  std::string out = fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", y, m, d, rem / 3600,
                                (rem / 60) % 60, rem % 60);
  if (micros != 0) out += fmt::format(".{:06d}", micros);
  out += 'Z';
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory Trajectory::from_fixes(std::string id, std::vector<GpsFix> fixes,
                                  const Projection& proj, std::vector<bool> interpolated) {
  Trajectory t;
  t.id = std::move(id);
  t.fixes = std::move(fixes);
  for (std::size_t i = 1; i < t.fixes.size(); ++i)
    if (!(t.fixes[i].t > t.fixes[i - 1].t))
      throw Error(fmt::format("trajectory '{}': timestamps not strictly increasing", t.id));
  if (interpolated.empty()) interpolated.assign(t.fixes.size(), false);
  if (interpolated.size() != t.fixes.size()) throw Error("interpolation flags size mismatch");
  t.interpolated = std::move(interpolated);
  t.observed.reserve(t.fixes.size());
  for (const auto& f : t.fixes) t.observed.push_back(project(f.pos, proj));
  t.plane = t.observed;
  for (std::size_t i = 0; i + 1 < t.observed.size(); ++i)
    t.natural_len.push_back(distance(t.observed[i], t.observed[i + 1]));
  return t;
}

double polyline_length(const Trajectory& t) {
  double len = 0.0;
  for (std::size_t i = 1; i < t.observed.size(); ++i)
    len += distance(t.observed[i - 1], t.observed[i]);
  return len;
}

bool evaluation_filter(const Trajectory& t, double match_len, const EvaluationFilter& f) {
  if (match_len < 0.0) throw Error("negative match length");
  const double poly = polyline_length(t);
  if (poly <= 0.0 || poly < f.min_length_m) return false;
  const double index = match_len / poly;
  return index >= f.min_index && index <= f.max_index;
}

// ---------------------------------------------------------------------------
// Cleaning

namespace {

// Equirectangular distance at the pair's own mid-latitude.
double span_distance(const GpsFix& a, const GpsFix& b) {
  const GeoPoint pts[] = {a.pos, b.pos};
  const Projection proj = make_projection(pts);
  return distance(project(a.pos, proj), project(b.pos, proj));
}

}  // namespace

std::vector<Anomaly> detect_anomalies(const std::vector<GpsFix>& fixes, double max_speed_kmh) {
  const double limit = max_speed_kmh / 3.6;
  std::vector<Anomaly> out;
  bool open = false;
  for (std::size_t k = 0; k + 1 < fixes.size(); ++k) {
    const double len = span_distance(fixes[k], fixes[k + 1]);
    const double dt = fixes[k + 1].t - fixes[k].t;
    const bool fast = dt > 0.0 ? len / dt > limit : len > 0.0;
    if (fast && open) {
      out.back().last_segment = k;
    } else if (fast) {
      out.push_back({k, k, 0.0});
      open = true;
    } else {
      open = false;
    }
  }
  for (auto& a : out) a.duration = fixes[a.last_segment + 1].t - fixes[a.first_segment].t;
  return out;
}

CleaningReport& CleaningReport::operator+=(const CleaningReport& o) {
  points_in += o.points_in;
  points_out += o.points_out;
  points_deleted += o.points_deleted;
  points_interpolated += o.points_interpolated;
  points_dropped += o.points_dropped;
  splits += o.splits;
  trajectories_out += o.trajectories_out;
  trajectories_dropped += o.trajectories_dropped;
  return *this;
}

CleanResult clean(const std::string& vehicle_id, std::vector<GpsFix> fixes,
                  const CleaningConfig& cfg) {
  CleanResult result;
  CleaningReport& rep = result.report;
  rep.points_in = fixes.size();

  std::stable_sort(fixes.begin(), fixes.end(),
                   [](const GpsFix& a, const GpsFix& b) { return a.t < b.t; });
  const auto dup = std::unique(fixes.begin(), fixes.end(),
                               [](const GpsFix& a, const GpsFix& b) { return a.t == b.t; });
  rep.points_deleted += static_cast<std::size_t>(fixes.end() - dup);
  fixes.erase(dup, fixes.end());

  // Long silences end a trajectory.
  std::vector<std::vector<GpsFix>> runs;
  for (std::size_t i = 0; i < fixes.size(); ++i) {
    if (i == 0 || fixes[i].t - fixes[i - 1].t > cfg.split_above_s) {
      if (i != 0) ++rep.splits;
      runs.emplace_back();
    }
    runs.back().push_back(fixes[i]);
  }

  const double limit = cfg.max_speed_kmh / 3.6;
  std::vector<Track> pieces;
  for (const auto& run : runs) {
    Track cur;
    auto flush = [&] {
      pieces.push_back(std::move(cur));
      cur = Track{};
    };
    auto keep = [&](const GpsFix& f, bool interp) {
      cur.fixes.push_back(f);
      cur.interpolated.push_back(interp);
    };
    std::size_t next = 0;
    for (const Anomaly& a : detect_anomalies(run, cfg.max_speed_kmh)) {
      const std::size_t before = a.first_segment;
      const std::size_t after = a.last_segment + 1;
      for (; next <= before; ++next) keep(run[next], false);
      const std::size_t interior = a.interior_count();
      const double bridge_speed = span_distance(run[before], run[after]) / a.duration;
      if (a.duration > cfg.split_above_s || interior == 0 || bridge_speed > limit) {
        // Unrepairable: either too long or a jump the good fixes cannot bridge.
        rep.points_deleted += interior;
        ++rep.splits;
        flush();
      } else if (a.duration < cfg.delete_below_s) {
        rep.points_deleted += interior;
      } else {
        const GpsFix& p = run[before];
        const GpsFix& q = run[after];
        for (std::size_t j = before + 1; j < after; ++j) {
          const double s = (run[j].t - p.t) / a.duration;
          keep({{p.pos.lat + s * (q.pos.lat - p.pos.lat), p.pos.lon + s * (q.pos.lon - p.pos.lon)},
                run[j].t},
               true);
        }
        rep.points_interpolated += interior;
      }
      next = after;
    }
    for (; next < run.size(); ++next) keep(run[next], false);
    flush();
  }

  std::size_t ordinal = 0;
  for (auto& piece : pieces) {
    if (piece.fixes.empty()) continue;
    const bool inside = std::all_of(piece.fixes.begin(), piece.fixes.end(),
                                    [&](const GpsFix& f) { return cfg.bbox.contains(f.pos); });
    const double duration = piece.fixes.back().t - piece.fixes.front().t;
    if (!inside || piece.fixes.size() < cfg.min_points || duration < cfg.min_duration_s) {
      ++rep.trajectories_dropped;
      rep.points_dropped += piece.fixes.size();
      continue;
    }
    piece.id = fmt::format("{}_{}", vehicle_id, ordinal++);
    ++rep.trajectories_out;
    rep.points_out += piece.fixes.size();
    result.tracks.push_back(std::move(piece));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Trajectory files

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim_view(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<VehicleFixes> load_trajectories(std::istream& in) {
  std::vector<VehicleFixes> out;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = trim_view(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = split_csv(trimmed);
    GpsFix fix;
    bool ok = fields.size() == 4 && parse_double(fields[2], fix.pos.lat) &&
              parse_double(fields[3], fix.pos.lon);
    if (!ok && out.empty() && index.empty() && fields.size() == 4) continue;  // header
    if (ok) {
      try {
        fix.t = parse_timestamp(fields[1]);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok || std::abs(fix.pos.lat) > 90.0 || std::abs(fix.pos.lon) > 180.0)
      throw Error(fmt::format("trajectory file line {}: malformed record", line_no));
    const std::string id(fields[0]);
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back({id, {}});
    out[it->second].fixes.push_back(fix);
  }
  for (auto& v : out)
    std::stable_sort(v.fixes.begin(), v.fixes.end(),
                     [](const GpsFix& a, const GpsFix& b) { return a.t < b.t; });
  return out;
}

std::vector<VehicleFixes> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open trajectory file '{}'", path.string()));
  return load_trajectories(in);
}

void write_trajectories(std::ostream& out, const std::vector<Track>& tracks) {
  out << "vehicle_id,timestamp,lat,lon\n";
  for (const auto& tr : tracks)
    for (const auto& f : tr.fixes)
      out << fmt::format("{},{},{:.6f},{:.6f}\n", tr.id, format_timestamp(f.t), f.pos.lat,
                         f.pos.lon);
}

}  // namespace fdmm
