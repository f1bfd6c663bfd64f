#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftmc/bayes.hpp"
#include "driftmc/grid.hpp"

namespace driftmc {

struct PathResult {
  bool feasible = false;
  State source = kOutside;
  State target = kOutside;  // chain index of the end state
  int steps = 0;
  std::vector<State> states;              // steps + 1 entries when feasible
  std::vector<std::string> step_labels;   // matrix label used by each step
  std::vector<double> cumulative_log_prob;  // per vertex, starting at 0
  double log_prob = 0;
};

struct PathSearch {
  std::vector<PathResult> per_source;  // in the order of the supplied sources
  PathResult best;                     // highest log-probability; smallest source on ties
};

/// Most probable path of exactly `steps` transitions from a source to target
/// cemetery `target_label`, staying inside the grid states until the final
/// step. Ties are broken by the smallest predecessor state.
PathSearch most_probable_path(const ChainSchedule& sched, std::span<const State> sources, int target_label, int steps);

/// Maximum-probability path of any length (Dijkstra on -log P).
PathResult unconstrained_best_path(const SparseMatrix& p, State source, State target);

/// LineString feature through box centers; target cemeteries are drawn at
/// their debris box. Infeasible paths give an empty LineString with an error note.
std::string path_to_geojson(const PathResult& path, const GridCovering& g, const StateRoles& roles);
std::string paths_feature_collection(std::span<const std::string> features);

/// Vertices (lon, lat) and step indices of a feature produced by path_to_geojson.
struct ParsedPath {
  std::vector<std::pair<double, double>> vertices;
  std::vector<int> steps;
};
ParsedPath parse_path_geojson(std::string_view feature);

}  // namespace driftmc
