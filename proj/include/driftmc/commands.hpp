#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "driftmc/calendar.hpp"
#include "driftmc/spectral.hpp"

namespace driftmc {

/// Settings shared by all subcommands. Loaded from a `key = value` file and
/// overridden by command-line flags.
struct RunConfig {
  std::filesystem::path grid;
  std::filesystem::path trajectories;
  std::filesystem::path roles;
  std::filesystem::path observations;
  std::filesystem::path prior;     // optional `lon_index,lat_index,weight` CSV
  std::filesystem::path matrices;  // where build output is read from; defaults to out
  std::filesystem::path out = "out";
  double lag_days = 5.0;
  std::string crash_date = "2014-03-08";
  std::string epoch;  // day zero of trajectory times; defaults to crash_date
  int season_exponent = 18;
  EigenOptions eig{4, 1e-10, 100000, 0};
  double basin_threshold = 0.5;
  double cpi_level = 0.95;
  int window_steps = 0;
  std::string schedule = "seasonal";  // seasonal | pooled
  int markov_max_n = 0;               // 0 disables the Markovianity test in build
  double markov_lag_days = 1.0;

  static RunConfig load(const std::filesystem::path& p);
  Epoch crash() const { return Epoch::parse(crash_date); }
  Epoch day_zero() const { return Epoch::parse(epoch.empty() ? crash_date : epoch); }
  std::filesystem::path matrix_dir() const { return matrices.empty() ? out : matrices; }
  /// Throws InputError when a file the subcommand needs is missing.
  void require_files(bool grid_file, bool traj, bool roles_file, bool obs) const;
};

/// Trajectories -> seasonal, pooled and annual matrices plus augmented chains.
void cmd_build(const RunConfig& cfg);
/// Eigenvectors, zonal profiles, basin and retention time of the annual
/// matrix. Returns false when the eigen-solver did not converge.
bool cmd_spectral(const RunConfig& cfg);
void cmd_bayes(const RunConfig& cfg);
void cmd_paths(const RunConfig& cfg);

struct EvolveOptions {
  std::string matrix = "annual";           // W | S | SF | pooled | annual, or A_W... for chains
  std::optional<std::filesystem::path> init;  // `state,mass` CSV
  std::optional<int> init_state;
  int steps = 1;
};
void cmd_evolve(const RunConfig& cfg, const EvolveOptions& opt);

void cmd_synth(const std::filesystem::path& spec, const std::filesystem::path& out, std::optional<std::uint64_t> seed,
               const std::string& crash_date);

}  // namespace driftmc
