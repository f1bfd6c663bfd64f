#include "driftmc/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include <json.hpp>

#include "driftmc/error.hpp"
#include "driftmc/parallel.hpp"

namespace driftmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

PathResult single_source(const ChainSchedule& sched, State source, State target, int steps) {
  const std::size_t n = sched.n_grid();
  PathResult res;
  res.source = source;
  res.target = target;
  res.steps = steps;
  res.log_prob = kNegInf;

  std::vector<double> value(n, kNegInf);
  value[static_cast<std::size_t>(source)] = 0.0;
  // back[k][j]: predecessor of j after k + 1 interior steps.
  std::vector<std::vector<State>> back;
  back.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k + 1 < steps; ++k) {
    const auto& p = sched.at_step(k).p;
    std::vector<double> next(n, kNegInf);
    std::vector<State> from(n, kOutside);
    for (std::size_t i = 0; i < n; ++i) {
      if (value[i] == kNegInf) continue;
      const auto cols = p.row_cols(i);
      const auto vals = p.row_values(i);
      for (std::size_t q = 0; q < cols.size(); ++q) {
        const auto j = static_cast<std::size_t>(cols[q]);
        if (j >= n || !(vals[q] > 0)) continue;
        const double cand = value[i] + std::log(vals[q]);
        if (cand > next[j]) {
          next[j] = cand;
          from[j] = static_cast<State>(i);
        }
      }
    }
    value = std::move(next);
    back.push_back(std::move(from));
  }

  const auto& last = sched.at_step(steps - 1).p;
  double best = kNegInf;
  State best_prev = kOutside;
  for (std::size_t i = 0; i < n; ++i) {
    if (value[i] == kNegInf) continue;
    const double pij = last.at(i, static_cast<std::size_t>(target));
    if (!(pij > 0)) continue;
    const double cand = value[i] + std::log(pij);
    if (cand > best) {
      best = cand;
      best_prev = static_cast<State>(i);
    }
  }
  if (best == kNegInf) return res;

  res.feasible = true;
  res.log_prob = best;
  res.states.assign(static_cast<std::size_t>(steps) + 1, kOutside);
  res.states.back() = target;
  State cur = best_prev;
  for (int k = steps - 1; k >= 1; --k) {
    res.states[static_cast<std::size_t>(k)] = cur;
    cur = back[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(cur)];
  }
  res.states[0] = cur;
  res.cumulative_log_prob.push_back(0.0);
  for (int k = 0; k < steps; ++k) {
    res.step_labels.emplace_back(sched.step_label(k));
    const double pij = sched.at_step(k).p.at(static_cast<std::size_t>(res.states[static_cast<std::size_t>(k)]),
                                             static_cast<std::size_t>(res.states[static_cast<std::size_t>(k) + 1]));
    res.cumulative_log_prob.push_back(res.cumulative_log_prob.back() + std::log(pij));
  }
  return res;
}

}  // namespace

PathSearch most_probable_path(const ChainSchedule& sched, std::span<const State> sources, int target_label, int steps) {
  if (steps < 1) throw InputError("path length must be at least one step");
  if (target_label < 1 || static_cast<std::size_t>(target_label) > sched.roles().target_count())
    throw InputError("path target must be a target cemetery label 1..M");
  if (sources.empty()) throw InputError("path search needs at least one source");
  for (State s : sources)
    if (s < 0 || static_cast<std::size_t>(s) >= sched.n_grid()) throw InputError("path source outside the grid");
  const State target = static_cast<State>(sched.n_grid()) + target_label;

  PathSearch out;
  out.per_source.resize(sources.size());
  parallel_for(sources.size(), [&](std::size_t q) { out.per_source[q] = single_source(sched, sources[q], target, steps); });

  const PathResult* best = nullptr;
  for (const auto& r : out.per_source) {
    if (!r.feasible) continue;
    if (!best || r.log_prob > best->log_prob || (r.log_prob == best->log_prob && r.source < best->source)) best = &r;
  }
  if (best) {
    out.best = *best;
  } else {
    out.best.target = target;
    out.best.steps = steps;
    out.best.log_prob = kNegInf;
  }
  return out;
}

PathResult unconstrained_best_path(const SparseMatrix& p, State source, State target) {
  const std::size_t n = p.rows();
  if (source < 0 || target < 0 || static_cast<std::size_t>(source) >= n || static_cast<std::size_t>(target) >= n)
    throw InputError("path endpoints outside the matrix");
  PathResult res;
  res.source = source;
  res.target = target;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<State> prev(n, kOutside);
  std::vector<char> done(n, 0);
  using Item = std::tuple<double, State>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(source)] = 0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    const auto ui = static_cast<std::size_t>(u);
    if (done[ui]) continue;
    done[ui] = 1;
    if (u == target) break;
    const auto cols = p.row_cols(ui);
    const auto vals = p.row_values(ui);
    for (std::size_t q = 0; q < cols.size(); ++q) {
      if (!(vals[q] > 0)) continue;
      const auto v = static_cast<std::size_t>(cols[q]);
      if (done[v]) continue;
      const double nd = d - std::log(vals[q]);
      if (nd < dist[v] || (nd == dist[v] && u < prev[v])) {
        dist[v] = nd;
        prev[v] = u;
        heap.emplace(nd, cols[q]);
      }
    }
  }
  if (dist[static_cast<std::size_t>(target)] == inf)
    throw NumericalError("target state " + std::to_string(target) + " is unreachable from " + std::to_string(source));
  for (State s = target; s != kOutside; s = s == source ? kOutside : prev[static_cast<std::size_t>(s)])
    res.states.push_back(s);
  std::reverse(res.states.begin(), res.states.end());
  res.feasible = true;
  res.steps = static_cast<int>(res.states.size()) - 1;
  res.cumulative_log_prob.push_back(0.0);
  for (std::size_t k = 0; k + 1 < res.states.size(); ++k)
    res.cumulative_log_prob.push_back(res.cumulative_log_prob.back() +
                                      std::log(p.at(static_cast<std::size_t>(res.states[k]),
                                                    static_cast<std::size_t>(res.states[k + 1]))));
  res.log_prob = res.cumulative_log_prob.back();
  return res;
}

std::string path_to_geojson(const PathResult& path, const GridCovering& g, const StateRoles& roles) {
  using nlohmann::json;
  const auto n = static_cast<State>(g.size());
  json coords = json::array();
  json steps = json::array();
  json logp = json::array();
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    State s = path.states[k];
    if (s > n) s = roles.targets.at(static_cast<std::size_t>(s - n - 1)).state;
    if (s == n) throw InputError("cannot draw a path through the cemetery");
    const auto [lon, lat] = g.center(s);
    coords.push_back({lon, lat});
    steps.push_back(k);
    logp.push_back(path.cumulative_log_prob.at(k));
  }
  json props = {{"source", path.source},
                {"target_state", path.target},
                {"target_label", path.target > n ? path.target - n : 0},
                {"steps", path.steps},
                {"feasible", path.feasible},
                {"vertex_step", steps},
                {"vertex_log_prob", logp},
                {"step_labels", path.step_labels}};
  if (path.feasible)
    props["log_prob"] = path.log_prob;
  else
    props["error"] = "no feasible path";
  json feature = {{"type", "Feature"},
                  {"properties", props},
                  {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}};
  return feature.dump();
}

std::string paths_feature_collection(std::span<const std::string> features) {
  using nlohmann::json;
  json fc = {{"type", "FeatureCollection"}, {"features", json::array()}};
  for (const auto& f : features) fc["features"].push_back(json::parse(f));
  return fc.dump(1) + "\n";
}

ParsedPath parse_path_geojson(std::string_view feature) {
  using nlohmann::json;
  ParsedPath out;
  try {
    const auto j = json::parse(feature);
    for (const auto& c : j.at("geometry").at("coordinates")) out.vertices.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    for (const auto& s : j.at("properties").at("vertex_step")) out.steps.push_back(s.get<int>());
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed path feature: ") + e.what());
  }
  return out;
}

}  // namespace driftmc
