#include <CLI11.hpp>
#include <iostream>

#include "driftmc/commands.hpp"
#include "driftmc/error.hpp"
#include "driftmc/parallel.hpp"

namespace {

enum Exit { kOk = 0, kInputError = 2, kNumericalError = 3 };

struct Overrides {
  std::string out;
  std::optional<double> lag_days;
  std::optional<std::string> crash_date;
  std::optional<std::string> epoch;
  std::optional<double> cpi_level;
  std::optional<double> basin_threshold;
  std::optional<int> window_steps;
  std::optional<std::string> schedule;
  std::optional<int> markov_max_n;
  std::optional<int> eig_count;
};

driftmc::RunConfig make_config(const std::string& path, const Overrides& o) {
  auto cfg = driftmc::RunConfig::load(path);
  if (!o.out.empty()) cfg.out = o.out;
  if (o.lag_days) cfg.lag_days = *o.lag_days;
  if (o.crash_date) cfg.crash_date = *o.crash_date;
  if (o.epoch) cfg.epoch = *o.epoch;
  if (o.cpi_level) cfg.cpi_level = *o.cpi_level;
  if (o.basin_threshold) cfg.basin_threshold = *o.basin_threshold;
  if (o.window_steps) cfg.window_steps = *o.window_steps;
  if (o.schedule) cfg.schedule = *o.schedule;
  if (o.markov_max_n) cfg.markov_max_n = *o.markov_max_n;
  if (o.eig_count) cfg.eig.count = *o.eig_count;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftmc: transfer-operator models of Lagrangian drift, source inversion and most probable paths"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker cap (0 = all cores)");

  std::string config;
  Overrides ov;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (key = value)")->required();
    sub->add_option("--out", ov.out, "Output directory (overrides config)");
    sub->add_option("--lag-days", ov.lag_days, "Transition time T in days");
    sub->add_option("--crash-date", ov.crash_date, "Crash date YYYY-MM-DD");
  };

  auto* build = app.add_subcommand("build", "Estimate seasonal, pooled and annual matrices and augmented chains");
  add_common(build);
  build->add_option("--epoch", ov.epoch, "Day zero of trajectory times (default: crash date)");
  build->add_option("--markov-max-n", ov.markov_max_n, "Run the Markovianity test up to this lag multiple");

  auto* spectral = app.add_subcommand("spectral", "Eigenvectors, basin of attraction and retention time");
  add_common(spectral);
  spectral->add_option("--basin-threshold", ov.basin_threshold, "Right-eigenvector level defining the basin");
  spectral->add_option("--eig-count", ov.eig_count, "Number of leading eigenpairs");

  auto* bayes = app.add_subcommand("bayes", "Posterior over candidate source states");
  add_common(bayes);
  bayes->add_option("--cpi-level", ov.cpi_level, "Central posterior interval level");
  bayes->add_option("--window-steps", ov.window_steps, "Half-width of the beaching-time window in steps");
  bayes->add_option("--schedule", ov.schedule, "seasonal | pooled");

  auto* paths = app.add_subcommand("paths", "Most probable fixed-length paths to each beaching target");
  add_common(paths);
  paths->add_option("--schedule", ov.schedule, "seasonal | pooled");

  driftmc::EvolveOptions evolve_opt;
  std::string init_path;
  int init_state = -1;
  auto* evolve = app.add_subcommand("evolve", "Push a distribution forward");
  add_common(evolve);
  evolve->add_option("--matrix", evolve_opt.matrix, "W, S, SF, pooled, annual, or A_<label> for a chain");
  evolve->add_option("--steps", evolve_opt.steps, "Number of steps");
  evolve->add_option("--init", init_path, "Initial distribution CSV state,mass (default uniform)");
  evolve->add_option("--init-state", init_state, "Start from a single state");

  std::string spec_path, synth_out = "synth";
  std::optional<std::uint64_t> seed;
  std::string synth_crash = "2014-03-08";
  auto* synth = app.add_subcommand("synth", "Simulate drifters (and debris) from ground-truth kernels");
  synth->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--seed", seed, "Override the spec's seed");
  synth->add_option("--crash-date", synth_crash, "Crash date for debris simulation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    driftmc::set_thread_count(threads);
    if (*build) {
      driftmc::cmd_build(make_config(config, ov));
    } else if (*spectral) {
      if (!driftmc::cmd_spectral(make_config(config, ov))) {
        std::cerr << "driftmc: eigen-solver did not converge; outputs carry partial results\n";
        return kNumericalError;
      }
    } else if (*bayes) {
      driftmc::cmd_bayes(make_config(config, ov));
    } else if (*paths) {
      driftmc::cmd_paths(make_config(config, ov));
    } else if (*evolve) {
      if (!init_path.empty()) evolve_opt.init = init_path;
      if (init_state >= 0) evolve_opt.init_state = init_state;
      driftmc::cmd_evolve(make_config(config, ov), evolve_opt);
    } else if (*synth) {
      driftmc::cmd_synth(spec_path, synth_out, seed, synth_crash);
    }
  } catch (const driftmc::InputError& e) {
    std::cerr << "driftmc: " << e.what() << '\n';
    return kInputError;
  } catch (const driftmc::NumericalError& e) {
    std::cerr << "driftmc: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "driftmc: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
