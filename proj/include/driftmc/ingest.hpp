#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "driftmc/calendar.hpp"
#include "driftmc/grid.hpp"

namespace driftmc {

struct TrajectoryPoint {
  double time_days = 0;  // days since the epoch
  double lon = 0;
  double lat = 0;
};

struct DrifterTrack {
  std::string id;
  std::vector<TrajectoryPoint> points;  // strictly increasing time
};

struct ParseReport {
  std::vector<DrifterTrack> tracks;  // sorted by id
  std::size_t rows_read = 0;
  std::size_t rows_malformed = 0;
  std::size_t rows_drogued = 0;
  std::size_t rows_duplicate_time = 0;
};

/// CSV with header `id,time_days,lon,lat[,drogued]`. Rows flagged drogued=1
/// are dropped; malformed rows are counted and skipped.
ParseReport parse_trajectories(std::string_view csv);
ParseReport load_trajectories(const std::filesystem::path& p);

struct TransitionPair {
  State from = kOutside;
  State to = kOutside;  // kOutside when the drifter left the domain
  double start_days = 0;
  Season season = Season::W;
};

struct PairOptions {
  double lag_days = 5.0;
  Epoch epoch{};
  SeasonCalendar calendar{};
};

/// Non-overlapping lag-T pairs starting at each drifter's first sample. The
/// samples nearest to t0 + kT and t0 + (k+1)T, each within +-T/10, form pair k.
/// Output is ordered by drifter id, then start time.
std::vector<TransitionPair> extract_pairs(const std::vector<DrifterTrack>& tracks, const GridCovering& g,
                                          const PairOptions& opt);

struct SeasonBins {
  std::vector<TransitionPair> w, s, sf;

  std::vector<TransitionPair>& operator[](Season season);
  const std::vector<TransitionPair>& operator[](Season season) const;
};

SeasonBins season_split(const std::vector<TransitionPair>& pairs);

/// Per-state sample counts and number of distinct drifters that visited it.
struct Occupancy {
  std::vector<std::size_t> samples;
  std::vector<std::size_t> drifters;
};
Occupancy box_occupancy(const std::vector<DrifterTrack>& tracks, const GridCovering& g);

}  // namespace driftmc
