#include "driftmc/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "driftmc/absorb.hpp"
#include "driftmc/bayes.hpp"
#include "driftmc/error.hpp"
#include "driftmc/grid.hpp"
#include "driftmc/ingest.hpp"
#include "driftmc/io.hpp"
#include "driftmc/paths.hpp"
#include "driftmc/synth.hpp"
#include "driftmc/ulam.hpp"

namespace driftmc {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

RunConfig RunConfig::load(const fs::path& p) {
  if (!fs::exists(p)) throw InputError("config file not found: " + p.string());
  const auto kv = io::KeyValueConfig::load(p);
  RunConfig c;
  auto path_or = [&](const char* key, fs::path& dst) {
    if (kv.has(key)) dst = kv.path(key);
  };
  path_or("grid", c.grid);
  path_or("trajectories", c.trajectories);
  path_or("roles", c.roles);
  path_or("observations", c.observations);
  path_or("prior", c.prior);
  path_or("matrices", c.matrices);
  path_or("out", c.out);
  c.lag_days = kv.get_double("lag_days", c.lag_days);
  c.crash_date = kv.get("crash_date").value_or(c.crash_date);
  c.epoch = kv.get("epoch").value_or(c.epoch);
  c.season_exponent = static_cast<int>(kv.get_int("season_exponent", c.season_exponent));
  c.eig.count = static_cast<int>(kv.get_int("eig_count", c.eig.count));
  c.eig.tol = kv.get_double("eig_tol", c.eig.tol);
  c.eig.max_iter = static_cast<int>(kv.get_int("eig_max_iter", c.eig.max_iter));
  c.basin_threshold = kv.get_double("basin_threshold", c.basin_threshold);
  c.cpi_level = kv.get_double("cpi_level", c.cpi_level);
  c.window_steps = static_cast<int>(kv.get_int("window_steps", c.window_steps));
  c.schedule = kv.get("schedule").value_or(c.schedule);
  c.markov_max_n = static_cast<int>(kv.get_int("markov_max_n", c.markov_max_n));
  c.markov_lag_days = kv.get_double("markov_lag_days", c.markov_lag_days);
  return c;
}

void RunConfig::require_files(bool grid_file, bool traj, bool roles_file, bool obs) const {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty()) throw InputError(std::string("config does not name a ") + what + " file");
    if (!fs::exists(p)) throw InputError(std::string(what) + " file not found: " + p.string());
  };
  if (grid_file) need(grid, "grid");
  if (traj) need(trajectories, "trajectories");
  if (roles_file) need(roles, "roles");
  if (obs) need(observations, "observations");
  if (!(lag_days > 0)) throw InputError("lag_days must be positive");
  if (season_exponent < 1 || std::abs(season_exponent * lag_days - 90.0) > 1e-9)
    throw InputError("season_exponent * lag_days must equal the 90-day season block");
  if (schedule != "seasonal" && schedule != "pooled") throw InputError("schedule must be 'seasonal' or 'pooled'");
}

namespace {

TransitionMatrix read_matrix(const fs::path& dir, const std::string& name) {
  return parse_matrix(io::read_file(dir / ("P_" + name + ".csv")));
}

AugmentedChain read_chain(const fs::path& dir, const std::string& name) {
  return parse_chain(io::read_file(dir / ("A_" + name + ".csv")));
}

ChainSchedule load_schedule(const RunConfig& cfg) {
  const auto dir = cfg.matrix_dir();
  if (cfg.schedule == "pooled") return ChainSchedule::autonomous(read_chain(dir, "pooled"));
  return ChainSchedule::seasonal(read_chain(dir, "W"), read_chain(dir, "S"), read_chain(dir, "SF"), cfg.crash());
}

ordered_json matrix_stats(const TransitionMatrix& m, std::size_t pairs) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.is_empty_row(i)) continue;
    const double s = m.p.row_sum(i);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  ordered_json j = {{"label", label_name(m.label)},
                    {"lag_days", m.lag_days},
                    {"pairs", pairs},
                    {"nnz", m.p.nnz()},
                    {"empty_row_fraction", m.empty_row_fraction()}};
  j["row_sum_min"] = std::isfinite(lo) ? ordered_json(lo) : ordered_json(nullptr);
  j["row_sum_max"] = std::isfinite(hi) ? ordered_json(hi) : ordered_json(nullptr);
  return j;
}

std::string dump(const ordered_json& j) { return j.dump(1) + "\n"; }

}  // namespace

void cmd_build(const RunConfig& cfg) {
  cfg.require_files(true, true, true, false);
  const auto g = load_grid(cfg.grid);
  const auto roles = load_roles(g, cfg.roles);
  const auto parsed = load_trajectories(cfg.trajectories);
  PairOptions popt{cfg.lag_days, cfg.day_zero(), {}};
  const auto pairs = extract_pairs(parsed.tracks, g, popt);
  const auto bins = season_split(pairs);

  ordered_json report;
  report["rows_read"] = parsed.rows_read;
  report["rows_malformed"] = parsed.rows_malformed;
  report["rows_drogued"] = parsed.rows_drogued;
  report["rows_duplicate_time"] = parsed.rows_duplicate_time;
  report["drifters"] = parsed.tracks.size();
  report["states"] = g.size();
  report["pairs_total"] = pairs.size();
  if (pairs.empty()) report["warning"] = "no transition pairs were extracted";

  const auto occ = box_occupancy(parsed.tracks, g);
  report["mean_samples_per_box"] =
      static_cast<double>(std::accumulate(occ.samples.begin(), occ.samples.end(), std::size_t{0})) / g.size();
  report["mean_drifters_per_box"] =
      static_cast<double>(std::accumulate(occ.drifters.begin(), occ.drifters.end(), std::size_t{0})) / g.size();

  const auto out = cfg.out;
  ordered_json mats = ordered_json::array();
  std::vector<TransitionMatrix> seasonal;
  for (Season s : kSeasons) {
    seasonal.push_back(estimate(bins[s], g.size(), cfg.lag_days, label_of(s)));
    mats.push_back(matrix_stats(seasonal.back(), bins[s].size()));
  }
  const auto pooled = estimate(pairs, g.size(), cfg.lag_days, MatrixLabel::Pooled);
  mats.push_back(matrix_stats(pooled, pairs.size()));
  const auto annual = compose_annual(seasonal[0], seasonal[1], seasonal[2], cfg.season_exponent);
  mats.push_back(matrix_stats(annual, 0));
  report["matrices"] = mats;

  ordered_json aug = ordered_json::array();
  auto write_pair = [&](const TransitionMatrix& m) {
    const std::string name(label_name(m.label));
    io::write_file(out / ("P_" + name + ".csv"), serialize_matrix(m));
    CemeteryReport rep;
    const auto chain = augment(m, roles, &rep);
    io::write_file(out / ("A_" + name + ".csv"), serialize_chain(chain));
    aug.push_back({{"label", name},
                   {"states", chain.size()},
                   {"leaky_rows_with_deficit", rep.leaky_rows_with_deficit},
                   {"undeclared_leaks", rep.undeclared_leaks},
                   {"empty_rows", rep.empty_rows}});
  };
  for (const auto& m : seasonal) write_pair(m);
  write_pair(pooled);
  io::write_file(out / "P_annual.csv", serialize_matrix(annual));
  report["augmented"] = aug;

  if (cfg.markov_max_n > 0) {
    PairOptions mopt = popt;
    mopt.lag_days = cfg.markov_lag_days;
    const auto p1 = estimate(extract_pairs(parsed.tracks, g, mopt), g.size(), mopt.lag_days, MatrixLabel::Pooled);
    std::vector<TransitionMatrix> pn;
    for (int n = 2; n <= cfg.markov_max_n; ++n) {
      mopt.lag_days = n * cfg.markov_lag_days;
      pn.push_back(estimate(extract_pairs(parsed.tracks, g, mopt), g.size(), mopt.lag_days, MatrixLabel::Pooled));
    }
    const auto rows = markov_test(p1, pn, cfg.eig.count);
    std::ostringstream csv;
    csv << "n,k,lambda_nT,lambda_T_pow_n,rel_deviation,converged\n";
    for (const auto& r : rows)
      for (std::size_t k = 0; k < r.lambda_n.size(); ++k)
        csv << r.n << ',' << k + 1 << ',' << io::fmt(r.lambda_n[k]) << ',' << io::fmt(r.lambda_1_pow[k]) << ','
            << io::fmt(r.rel_deviation[k]) << ',' << (r.converged ? 1 : 0) << '\n';
    io::write_file(out / "markov_test.csv", csv.str());
  }
  io::write_file(out / "build_report.json", dump(report));
}

bool cmd_spectral(const RunConfig& cfg) {
  cfg.require_files(true, false, false, false);
  const auto g = load_grid(cfg.grid);
  const auto annual = read_matrix(cfg.matrix_dir(), "annual");
  if (annual.size() != g.size()) throw InputError("annual matrix does not match the grid");
  const auto eig = dominant_eigs(annual.p, cfg.eig);
  const auto out = cfg.out;
  for (std::size_t k = 0; k < eig.moduli.size(); ++k) {
    io::write_file(out / ("eig_left_" + std::to_string(k + 1) + ".csv"), state_vector_csv(eig.left[k], g));
    io::write_file(out / ("eig_right_" + std::to_string(k + 1) + ".csv"), state_vector_csv(eig.right[k], g));
  }
  io::write_file(out / "zonal_right.csv", zonal_profile_csv(zonal_profile(eig.right.front(), g)));
  io::write_file(out / "zonal_left.csv", zonal_profile_csv(zonal_profile(eig.left.front(), g)));

  ordered_json report;
  ordered_json values = ordered_json::array();
  for (std::size_t k = 0; k < eig.moduli.size(); ++k)
    values.push_back({{"re", eig.values[k].real()},
                      {"im", eig.values[k].imag()},
                      {"modulus", eig.moduli[k]},
                      {"complex_pair", static_cast<bool>(eig.complex_pair[k])},
                      {"left_residual", eig.left_residual[k]},
                      {"right_residual", eig.right_residual[k]}});
  report["eigenvalues"] = values;
  report["iterations"] = eig.iterations;
  report["converged"] = eig.converged;
  report["transition_days"] = annual.lag_days;

  const auto basin = basin_of_attraction(eig.right.front(), cfg.basin_threshold);
  io::write_file(out / "basin.geojson", basin_geojson(basin, g));
  report["basin_threshold"] = cfg.basin_threshold;
  report["basin_boxes"] = basin.size();
  if (!basin.empty() && annual.p.principal_submatrix(basin).nnz() > 0) {
    const auto ret = retention_time(annual.p, basin, 1.0, cfg.eig);
    report["lambda_B"] = ret.lambda_b;
    report["retention_infinite"] = ret.infinite;
    if (!ret.infinite) {
      report["retention_periods"] = ret.retention;
      report["retention_days"] = ret.retention * annual.lag_days;
      if (annual.label == MatrixLabel::Annual) report["retention_years"] = ret.retention;
    }
  } else {
    report["retention_note"] = basin.empty() ? "basin is empty" : "matrix restricted to the basin is all zero";
  }
  io::write_file(out / "spectral_report.json", dump(report));
  return eig.converged;
}

namespace {

std::vector<double> load_prior(const RunConfig& cfg, const GridCovering& g, const StateRoles& roles) {
  if (cfg.prior.empty()) return {};
  std::vector<double> prior(roles.sources.size(), 0.0);
  std::size_t line_no = 0;
  for (auto line : io::split(io::read_file(cfg.prior), '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto f = io::split(line, ',');
    if (line_no == 1 && !io::to_int(f[0])) continue;
    if (f.size() != 3) throw InputError("prior line " + std::to_string(line_no) + ": expected lon_index,lat_index,weight");
    const State s = g.require_state({static_cast<int>(io::require_int(f[0], "lon_index")),
                                     static_cast<int>(io::require_int(f[1], "lat_index"))});
    const auto it = std::find(roles.sources.begin(), roles.sources.end(), s);
    if (it == roles.sources.end()) throw InputError("prior line " + std::to_string(line_no) + ": box is not a source");
    prior[static_cast<std::size_t>(it - roles.sources.begin())] = io::require_double(f[2], "weight");
  }
  const double z = std::accumulate(prior.begin(), prior.end(), 0.0);
  if (!(z > 0)) throw InputError("prior has no mass");
  for (auto& p : prior) p /= z;
  return prior;
}

}  // namespace

void cmd_bayes(const RunConfig& cfg) {
  cfg.require_files(true, false, false, true);
  const auto g = load_grid(cfg.grid);
  const auto sched = load_schedule(cfg);
  if (sched.n_grid() != g.size()) throw InputError("chain does not match the grid");
  const auto& roles = sched.roles();
  const auto obs = load_observations(cfg.observations, sched.lag_days(), roles.target_count());
  InversionOptions opt{cfg.cpi_level, cfg.window_steps, load_prior(cfg, g, roles)};
  const auto inv = invert(sched, obs, opt);
  const auto& r = inv.result;

  std::ostringstream csv;
  csv << "lat,lon,logL,posterior";
  for (std::size_t b = 0; b < obs.size(); ++b) csv << ",single_b" << b + 1;
  csv << '\n';
  for (std::size_t c = 0; c < roles.sources.size(); ++c) {
    const auto [lon, lat] = g.center(roles.sources[c]);
    csv << io::fmt(lat) << ',' << io::fmt(lon) << ',' << io::fmt(r.log_likelihood[c]) << ',' << io::fmt(r.posterior[c]);
    for (std::size_t b = 0; b < obs.size(); ++b) csv << ',' << io::fmt(r.single_posterior[b][c]);
    csv << '\n';
  }
  io::write_file(cfg.out / "posterior.csv", csv.str());

  auto where = [&](std::size_t c) {
    const State s = roles.sources[c];
    const auto [lon, lat] = g.center(s);
    const auto b = g.box_of(s);
    return ordered_json{{"state", s}, {"box", {b.lon, b.lat}}, {"lon", lon}, {"lat", lat}};
  };
  ordered_json summary;
  summary["schedule"] = cfg.schedule;
  summary["crash_date"] = cfg.crash_date;
  summary["lag_days"] = sched.lag_days();
  ordered_json jobs = ordered_json::array();
  for (std::size_t b = 0; b < obs.size(); ++b)
    jobs.push_back({{"target", obs[b].target},
                    {"days", obs[b].days},
                    {"steps", obs[b].steps},
                    {"name", obs[b].name},
                    {"single_posterior_defined", static_cast<bool>(r.single_defined[b])}});
  summary["observations"] = jobs;
  summary["c_max"] = where(r.c_max);
  summary["c_max"]["posterior"] = r.posterior[r.c_max];
  summary["c_ml"] = where(r.c_ml);
  summary["cpi_level"] = r.level;
  summary["cpi_low"] = where(r.cpi_low);
  summary["cpi_high"] = where(r.cpi_high);
  summary["cpi_width_deg"] = std::abs(where(r.cpi_high)["lat"].get<double>() - where(r.cpi_low)["lat"].get<double>());
  io::write_file(cfg.out / "bayes_summary.json", dump(summary));

  int horizon = 0;
  for (const auto& o : obs) horizon = std::max(horizon, o.steps);
  const auto surf = sticky_fit_map(sched, roles.sources[r.c_max], horizon);
  std::ostringstream fit;
  fit << "state,lon,lat,step,days,probability\n";
  for (std::size_t q = 0; q < surf.states.size(); ++q) {
    const auto [lon, lat] = g.center(surf.states[q]);
    for (std::size_t k = 0; k < surf.mass[q].size(); ++k)
      if (surf.mass[q][k] > 0)
        fit << surf.states[q] << ',' << io::fmt(lon) << ',' << io::fmt(lat) << ',' << k + 1 << ','
            << io::fmt(static_cast<double>(k + 1) * sched.lag_days()) << ',' << io::fmt(surf.mass[q][k]) << '\n';
  }
  io::write_file(cfg.out / "sticky_fit.csv", fit.str());
}

void cmd_paths(const RunConfig& cfg) {
  cfg.require_files(true, false, false, true);
  const auto g = load_grid(cfg.grid);
  const auto sched = load_schedule(cfg);
  if (sched.n_grid() != g.size()) throw InputError("chain does not match the grid");
  const auto& roles = sched.roles();
  const auto obs = load_observations(cfg.observations, sched.lag_days(), roles.target_count());
  if (roles.sources.empty()) throw InputError("roles define no candidate source states");

  std::vector<std::string> features;
  std::ostringstream csv;
  csv << "target,steps,best_source,lon,lat,log_prob\n";
  ordered_json report;
  ordered_json per_target = ordered_json::array();
  std::map<State, std::vector<int>> starts;
  for (const auto& o : obs) {
    const auto search = most_probable_path(sched, roles.sources, o.target, o.steps);
    features.push_back(path_to_geojson(search.best, g, roles));
    {
      auto j = nlohmann::json::parse(features.back());
      j["properties"]["mode"] = "global";
      j["properties"]["name"] = o.name;
      features.back() = j.dump();
    }
    for (const auto& p : search.per_source) {
      auto j = nlohmann::json::parse(path_to_geojson(p, g, roles));
      j["properties"]["mode"] = "per-source";
      j["properties"]["name"] = o.name;
      features.push_back(j.dump());
    }
    ordered_json t = {{"target", o.target}, {"name", o.name}, {"steps", o.steps}, {"feasible", search.best.feasible}};
    if (search.best.feasible) {
      const auto [lon, lat] = g.center(search.best.source);
      csv << o.target << ',' << o.steps << ',' << search.best.source << ',' << io::fmt(lon) << ',' << io::fmt(lat) << ','
          << io::fmt(search.best.log_prob) << '\n';
      t["best_source"] = search.best.source;
      t["log_prob"] = search.best.log_prob;
      starts[search.best.source].push_back(o.target);
    } else {
      csv << o.target << ',' << o.steps << ",,,,\n";
    }
    per_target.push_back(t);
  }
  report["targets"] = per_target;
  ordered_json shared = ordered_json::array();
  for (const auto& [s, targets] : starts)
    if (targets.size() > 1) {
      const auto [lon, lat] = g.center(s);
      shared.push_back({{"source", s}, {"lon", lon}, {"lat", lat}, {"targets", targets}});
    }
  report["common_start_boxes"] = shared;
  io::write_file(cfg.out / "paths.geojson", paths_feature_collection(features));
  io::write_file(cfg.out / "paths.csv", csv.str());
  io::write_file(cfg.out / "paths_report.json", dump(report));
}

void cmd_evolve(const RunConfig& cfg, const EvolveOptions& opt) {
  const auto dir = cfg.matrix_dir();
  SparseMatrix p;
  if (opt.matrix.rfind("A_", 0) == 0) {
    p = read_chain(dir, opt.matrix.substr(2)).p;
  } else {
    p = read_matrix(dir, opt.matrix).p;
  }
  if (opt.steps < 0) throw InputError("steps must be non-negative");
  std::vector<double> f(p.rows(), 0.0);
  if (opt.init) {
    std::size_t line_no = 0;
    for (auto line : io::split(io::read_file(*opt.init), '\n')) {
      ++line_no;
      if (line.empty() || line.front() == '#') continue;
      const auto fld = io::split(line, ',');
      if (line_no == 1 && !io::to_int(fld[0])) continue;
      if (fld.size() != 2) throw InputError("initial distribution line " + std::to_string(line_no) + ": expected state,mass");
      const auto s = io::require_int(fld[0], "state");
      if (s < 0 || static_cast<std::size_t>(s) >= f.size()) throw InputError("initial state outside the matrix");
      f[static_cast<std::size_t>(s)] = io::require_double(fld[1], "mass");
    }
  } else if (opt.init_state) {
    if (*opt.init_state < 0 || static_cast<std::size_t>(*opt.init_state) >= f.size())
      throw InputError("initial state outside the matrix");
    f[static_cast<std::size_t>(*opt.init_state)] = 1.0;
  } else {
    std::fill(f.begin(), f.end(), 1.0 / static_cast<double>(f.size()));
  }
  for (double v : f)
    if (v < 0) throw InputError("initial distribution has negative mass");

  std::ostringstream dist, mass;
  dist << "step,state,value\n";
  mass << "step,mass\n";
  auto record = [&](int k) {
    double total = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      total += f[i];
      if (f[i] != 0) dist << k << ',' << i << ',' << io::fmt(f[i]) << '\n';
    }
    mass << k << ',' << io::fmt(total) << '\n';
  };
  record(0);
  for (int k = 1; k <= opt.steps; ++k) {
    f = push_forward(f, p, 1);
    record(k);
  }
  io::write_file(cfg.out / "evolve.csv", dist.str());
  io::write_file(cfg.out / "evolve_mass.csv", mass.str());
}

void cmd_synth(const fs::path& spec_path, const fs::path& out, std::optional<std::uint64_t> seed,
               const std::string& crash_date) {
  if (!fs::exists(spec_path)) throw InputError("synthetic spec not found: " + spec_path.string());
  auto spec = load_synthetic_spec(spec_path);
  if (seed) spec.seed = *seed;
  write_synthetic(spec, out, Epoch::parse(crash_date));
}

}  // namespace driftmc
