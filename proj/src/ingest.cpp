#include "driftmc/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "driftmc/error.hpp"
#include "driftmc/io.hpp"
#include "driftmc/parallel.hpp"

namespace driftmc {

ParseReport parse_trajectories(std::string_view csv) {
  ParseReport report;
  auto lines = io::split(csv, '\n');
  std::size_t first = 0;
  while (first < lines.size() && lines[first].empty()) ++first;
  if (first == lines.size()) throw InputError("trajectory file is empty");
  const auto header = io::split(lines[first], ',');
  if (header.size() < 4 || header[0] != "id" || header[1] != "time_days" || header[2] != "lon" ||
      header[3] != "lat")
    throw InputError("trajectory header must start with id,time_days,lon,lat");
  const bool has_drogue = header.size() >= 5 && header[4] == "drogued";
  const std::size_t width = has_drogue ? 5 : 4;

  std::map<std::string, std::vector<TrajectoryPoint>, std::less<>> by_id;
  for (std::size_t k = first + 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    ++report.rows_read;
    const auto f = io::split(lines[k], ',');
    if (f.size() != width || f[0].empty()) {
      ++report.rows_malformed;
      continue;
    }
    const auto t = io::to_double(f[1]);
    const auto lon = io::to_double(f[2]);
    const auto lat = io::to_double(f[3]);
    if (!t || !lon || !lat || !std::isfinite(*t) || !std::isfinite(*lon) || !std::isfinite(*lat)) {
      ++report.rows_malformed;
      continue;
    }
    if (has_drogue) {
      const auto d = io::to_int(f[4]);
      if (!d || (*d != 0 && *d != 1)) {
        ++report.rows_malformed;
        continue;
      }
      if (*d == 1) {
        ++report.rows_drogued;
        continue;
      }
    }
    by_id[std::string(f[0])].push_back({*t, *lon, *lat});
  }
  if (report.rows_read == report.rows_malformed)
    throw InputError("trajectory file has no valid rows");

  report.tracks.reserve(by_id.size());
  for (auto& [id, pts] : by_id) {
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.time_days < b.time_days; });
    const auto last = std::unique(pts.begin(), pts.end(),
                                  [](const auto& a, const auto& b) { return a.time_days == b.time_days; });
    report.rows_duplicate_time += static_cast<std::size_t>(pts.end() - last);
    pts.erase(last, pts.end());
    report.tracks.push_back({id, std::move(pts)});
  }
  return report;
}

ParseReport load_trajectories(const std::filesystem::path& p) {
  const std::string text = io::read_file(p);
  return parse_trajectories(std::string_view(text));
}

namespace {

// Index of the sample nearest to `target` within `tol`, searching from `from`.
std::optional<std::size_t> nearest_sample(const std::vector<TrajectoryPoint>& pts, double target, double tol) {
  auto it = std::lower_bound(pts.begin(), pts.end(), target,
                             [](const TrajectoryPoint& p, double t) { return p.time_days < t; });
  std::optional<std::size_t> best;
  double best_gap = tol;
  auto consider = [&](std::vector<TrajectoryPoint>::const_iterator c) {
    const double gap = std::abs(c->time_days - target);
    if (gap <= best_gap && (!best || gap < best_gap)) {
      best = static_cast<std::size_t>(c - pts.begin());
      best_gap = gap;
    }
  };
  if (it != pts.begin()) consider(std::prev(it));
  if (it != pts.end()) consider(it);
  return best;
}

}  // namespace

std::vector<TransitionPair> extract_pairs(const std::vector<DrifterTrack>& tracks, const GridCovering& g,
                                          const PairOptions& opt) {
  if (!(opt.lag_days > 0)) throw InputError("lag must be positive");
  const double lag = opt.lag_days;
  const double tol = lag / 10.0;
  std::vector<std::vector<TransitionPair>> per_track(tracks.size());
  parallel_for(tracks.size(), [&](std::size_t d) {
    const auto& pts = tracks[d].points;
    if (pts.size() < 2) return;
    const double t0 = pts.front().time_days;
    const double t_end = pts.back().time_days;
    auto& out = per_track[d];
    for (long k = 0; t0 + (k + 1) * lag <= t_end + tol; ++k) {
      const auto a = nearest_sample(pts, t0 + k * lag, tol);
      if (!a) continue;
      const auto b = nearest_sample(pts, t0 + (k + 1) * lag, tol);
      if (!b || *b == *a) continue;
      const State from = g.point_to_state(pts[*a].lon, pts[*a].lat);
      if (from == kOutside) continue;
      const State to = g.point_to_state(pts[*b].lon, pts[*b].lat);
      out.push_back({from, to, pts[*a].time_days, opt.epoch.season_at(pts[*a].time_days, opt.calendar)});
    }
  });
  std::vector<TransitionPair> pairs;
  for (auto& v : per_track) pairs.insert(pairs.end(), v.begin(), v.end());
  return pairs;
}

std::vector<TransitionPair>& SeasonBins::operator[](Season season) {
  switch (season) {
    case Season::W:
      return w;
    case Season::S:
      return s;
    case Season::SF:
      break;
  }
  return sf;
}

const std::vector<TransitionPair>& SeasonBins::operator[](Season season) const {
  return const_cast<SeasonBins&>(*this)[season];
}

SeasonBins season_split(const std::vector<TransitionPair>& pairs) {
  SeasonBins bins;
  for (const auto& p : pairs) bins[p.season].push_back(p);
  return bins;
}

Occupancy box_occupancy(const std::vector<DrifterTrack>& tracks, const GridCovering& g) {
  Occupancy occ{std::vector<std::size_t>(g.size(), 0), std::vector<std::size_t>(g.size(), 0)};
  std::vector<std::size_t> last_seen(g.size(), static_cast<std::size_t>(-1));
  for (std::size_t d = 0; d < tracks.size(); ++d) {
    for (const auto& p : tracks[d].points) {
      const State s = g.point_to_state(p.lon, p.lat);
      if (s == kOutside) continue;
      ++occ.samples[static_cast<std::size_t>(s)];
      if (last_seen[static_cast<std::size_t>(s)] != d) {
        last_seen[static_cast<std::size_t>(s)] = d;
        ++occ.drifters[static_cast<std::size_t>(s)];
      }
    }
  }
  return occ;
}

}  // namespace driftmc
