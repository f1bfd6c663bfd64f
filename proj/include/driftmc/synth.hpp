#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftmc/bayes.hpp"
#include "driftmc/calendar.hpp"
#include "driftmc/grid.hpp"
#include "driftmc/ingest.hpp"
#include "driftmc/ulam.hpp"

namespace driftmc {

using DenseKernel = std::vector<std::vector<double>>;

/// Ground truth for a simulated experiment. Every box of the grid rectangle is
/// wet, so kernel rows are indexed by box id (lat * n_lon + lon). Kernel rows
/// may lose mass; the lost mass is the probability of leaving the domain.
struct SyntheticSpec {
  GridBounds bounds{0, 5, 0, 1};
  double cell_size = 1.0;
  DenseKernel w, s, sf;  // one step of `lag_days`
  double lag_days = 5.0;
  std::size_t drifters = 100;
  int steps_per_drifter = 73;
  double start_day_min = 0;  // days since epoch, uniform over the range
  double start_day_max = 365;
  std::vector<State> start_states;  // empty: uniform over all states
  bool jitter = true;               // uniform position inside the box, else center
  std::uint64_t seed = 1;
  Epoch epoch{};

  // Optional debris experiment from a planted source.
  std::optional<StateRoles> roles;
  std::optional<State> true_source;
  int max_debris_attempts = 1000000;

  /// Checks shapes, entries in [0,1] and row sums <= 1. Throws InputError.
  void validate() const;
  GridCovering grid() const;
};

SyntheticSpec parse_synthetic_spec(const std::string& json_text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& p);

/// Deterministic 64-bit generator with a portable uniform double in [0,1).
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Index drawn from a (possibly sub-stochastic) row; nullopt for the deficit.
  std::optional<std::size_t> draw(const std::vector<double>& row);

 private:
  std::uint64_t state_;
};

/// Simulated tracks sampled every `lag_days`, ordered by id. A drifter that
/// leaves emits one sample outside the rectangle and stops.
std::vector<DrifterTrack> simulate_tracks(const SyntheticSpec& spec);

TransitionMatrix kernel_matrix(const DenseKernel& k, double lag_days, MatrixLabel label);

/// True seasonal schedule from the spec's kernels and roles.
ChainSchedule true_schedule(const SyntheticSpec& spec, Epoch crash);

/// One debris observation per target: walks from the true source are drawn
/// until one ends in that target; its absorption time is recorded.
std::vector<Observation> simulate_observations(const SyntheticSpec& spec, Epoch crash, std::uint64_t seed);

std::string tracks_csv(const std::vector<DrifterTrack>& tracks);
std::string observations_csv(const std::vector<Observation>& obs);
std::string roles_text(const StateRoles& roles, const GridCovering& g);

/// Writes trajectories.csv, grid.cfg, truth.json, run.cfg and, when the spec
/// carries roles and a source, roles.csv and observations.csv.
void write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir, Epoch crash);

}  // namespace driftmc
