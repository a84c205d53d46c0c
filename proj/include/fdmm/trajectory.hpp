#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fdmm/geo.hpp"

namespace fdmm {

/// A GPS fix; `t` is seconds since the Unix epoch (UTC).
struct GpsFix {
  GeoPoint pos;
  double t = 0.0;
};

/// Parses `YYYY-MM-DD[T ]hh:mm:ss[.frac][Z|+hh[:mm]|-hh[:mm]]` or a bare
/// number of epoch seconds.
double parse_timestamp(std::string_view text);
/// Formats as `YYYY-MM-DDThh:mm:ss[.ffffff]Z`.
std::string format_timestamp(double t);

/// Time-ordered fixes plus their working positions in the metric frame.
/// `observed` keeps the projected input positions; `plane` is what the
/// force simulation moves. `natural_len[i]` is |observed[i+1] - observed[i]|.
struct Trajectory {
  std::string id;
  std::vector<GpsFix> fixes;
  std::vector<PlanePoint> observed;
  std::vector<PlanePoint> plane;
  std::vector<double> natural_len;
  std::vector<bool> interpolated;

  static Trajectory from_fixes(std::string id, std::vector<GpsFix> fixes, const Projection& proj,
                               std::vector<bool> interpolated = {});

  std::size_t size() const { return fixes.size(); }
  double duration() const { return fixes.empty() ? 0.0 : fixes.back().t - fixes.front().t; }
};

/// Length of the observed GPS polyline.
double polyline_length(const Trajectory& t);

struct BoundingBox {
  double lat_min = 41.8001;
  double lat_max = 41.9859;
  double lon_min = 12.382189;
  double lon_max = 12.608782;

  bool contains(GeoPoint p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
};

struct CleaningConfig {
  double max_speed_kmh = 50.0;
  double delete_below_s = 42.0;
  double split_above_s = 480.0;
  std::size_t min_points = 10;
  double min_duration_s = 480.0;
  BoundingBox bbox;
};

/// Maximal run of consecutive over-speed segments. Segment k joins fix k
/// and fix k+1, so the run is bracketed by fixes `first_segment` and
/// `last_segment + 1` and its interior fixes are the ones in between.
struct Anomaly {
  std::size_t first_segment = 0;
  std::size_t last_segment = 0;
  double duration = 0.0;

  std::size_t interior_count() const { return last_segment - first_segment; }
};

std::vector<Anomaly> detect_anomalies(const std::vector<GpsFix>& fixes, double max_speed_kmh);

/// Counts satisfy points_in == points_out + points_deleted + points_dropped
/// and the number of produced pieces == trajectories_out + trajectories_dropped.
struct CleaningReport {
  std::size_t points_in = 0;
  std::size_t points_out = 0;
  std::size_t points_deleted = 0;
  std::size_t points_interpolated = 0;
  std::size_t points_dropped = 0;
  std::size_t splits = 0;
  std::size_t trajectories_out = 0;
  std::size_t trajectories_dropped = 0;

  CleaningReport& operator+=(const CleaningReport& o);
};

/// A cleaned, not yet projected trajectory.
struct Track {
  std::string id;
  std::vector<GpsFix> fixes;
  std::vector<bool> interpolated;
};

struct CleanResult {
  std::vector<Track> tracks;
  CleaningReport report;
};

/// Applies the anomaly rules (delete short, interpolate medium, split long),
/// splits at long silences and drops short or out-of-area pieces.
CleanResult clean(const std::string& vehicle_id, std::vector<GpsFix> fixes,
                  const CleaningConfig& cfg = {});

struct EvaluationFilter {
  double min_length_m = 300.0;
  double min_index = 0.8;
  double max_index = 1.2;
};

bool evaluation_filter(const Trajectory& t, double match_len, const EvaluationFilter& f = {});

struct VehicleFixes {
  std::string id;
  std::vector<GpsFix> fixes;
};

/// Reads `vehicle_id, timestamp, lat, lon` lines, grouped per vehicle in
/// order of first appearance with fixes sorted by time.
std::vector<VehicleFixes> load_trajectories(std::istream& in);
std::vector<VehicleFixes> load_trajectories(const std::filesystem::path& path);

void write_trajectories(std::ostream& out, const std::vector<Track>& tracks);

}  // namespace fdmm
