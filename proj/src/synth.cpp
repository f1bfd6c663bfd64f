#include "driftmc/synth.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "driftmc/absorb.hpp"
#include "driftmc/error.hpp"
#include "driftmc/io.hpp"

namespace driftmc {

using nlohmann::json;

std::uint64_t SplitRng::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::optional<std::size_t> SplitRng::draw(const std::vector<double>& row) {
  const double u = uniform();
  double cum = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    cum += row[j];
    if (u < cum) return j;
  }
  return std::nullopt;
}

GridCovering SyntheticSpec::grid() const { return GridCovering(bounds, cell_size, {}); }

void SyntheticSpec::validate() const {
  const auto n = grid().size();
  for (const auto* k : {&w, &s, &sf}) {
    if (k->size() != n) throw InputError("kernel row count differs from the number of boxes");
    for (const auto& row : *k) {
      if (row.size() != n) throw InputError("kernel is not square");
      double sum = 0;
      for (double v : row) {
        if (!(v >= 0 && v <= 1)) throw InputError("kernel entries must lie in [0,1]");
        sum += v;
      }
      if (sum > 1 + 1e-12) throw InputError("kernel row sums above one");
    }
  }
  if (!(lag_days > 0)) throw InputError("lag must be positive");
  if (steps_per_drifter < 1) throw InputError("drifters need at least one step");
  if (start_day_max < start_day_min) throw InputError("start day range is inverted");
  for (State st : start_states)
    if (st < 0 || static_cast<std::size_t>(st) >= n) throw InputError("start state outside the grid");
  if (true_source && (*true_source < 0 || static_cast<std::size_t>(*true_source) >= n))
    throw InputError("true source outside the grid");
}

namespace {

DenseKernel kernel_from_json(const json& j) {
  DenseKernel k;
  for (const auto& row : j) k.push_back(row.get<std::vector<double>>());
  return k;
}

BoxIndex box_from_json(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  SyntheticSpec spec;
  try {
    const auto j = json::parse(json_text);
    const auto& gj = j.at("grid");
    spec.bounds = {gj.at("lon_min").get<double>(), gj.at("lon_max").get<double>(), gj.at("lat_min").get<double>(),
                   gj.at("lat_max").get<double>()};
    spec.cell_size = gj.value("cell_size", 1.0);
    const auto& kj = j.at("kernels");
    if (kj.contains("pooled")) {
      spec.w = spec.s = spec.sf = kernel_from_json(kj.at("pooled"));
    } else {
      spec.w = kernel_from_json(kj.at("W"));
      spec.s = kernel_from_json(kj.at("S"));
      spec.sf = kernel_from_json(kj.at("SF"));
    }
    spec.lag_days = j.value("lag_days", 5.0);
    spec.drifters = j.value("drifters", std::size_t{100});
    spec.steps_per_drifter = j.value("steps_per_drifter", 73);
    if (j.contains("start_day_range")) {
      spec.start_day_min = j.at("start_day_range").at(0).get<double>();
      spec.start_day_max = j.at("start_day_range").at(1).get<double>();
    }
    spec.jitter = j.value("jitter", true);
    spec.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("epoch")) spec.epoch = Epoch::parse(j.at("epoch").get<std::string>());
    const auto g = spec.grid();
    if (j.contains("start_boxes"))
      for (const auto& b : j.at("start_boxes")) spec.start_states.push_back(g.require_state(box_from_json(b)));
    if (j.contains("roles")) {
      const auto& rj = j.at("roles");
      StateRoles roles;
      for (const auto& b : rj.value("leaky", json::array())) roles.leaky.push_back(g.require_state(box_from_json(b)));
      for (const auto& b : rj.value("sticky", json::array()))
        roles.sticky.push_back({g.require_state(box_from_json(b)), b.at(2).get<double>()});
      for (const auto& b : rj.value("debris", json::array()))
        roles.targets.push_back({g.require_state(box_from_json(b)), b.at(2).get<int>()});
      for (const auto& b : rj.value("source", json::array())) roles.sources.push_back(g.require_state(box_from_json(b)));
      roles.validate(g.size());
      spec.roles = std::move(roles);
    }
    if (j.contains("true_source")) spec.true_source = g.require_state(box_from_json(j.at("true_source")));
    spec.max_debris_attempts = j.value("max_debris_attempts", 1000000);
  } catch (const json::exception& e) {
    throw InputError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& p) { return parse_synthetic_spec(io::read_file(p)); }

std::vector<DrifterTrack> simulate_tracks(const SyntheticSpec& spec) {
  spec.validate();
  const auto g = spec.grid();
  const std::size_t n = g.size();
  SplitRng rng(spec.seed);
  const int width = static_cast<int>(std::to_string(spec.drifters).size());
  std::vector<DrifterTrack> tracks;
  tracks.reserve(spec.drifters);
  const double h = spec.cell_size;
  auto position = [&](State st) {
    auto [lon, lat] = g.center(st);
    if (spec.jitter) {
      lon += (rng.uniform() - 0.5) * h;
      lat += (rng.uniform() - 0.5) * h;
    }
    return std::pair{lon, lat};
  };
  for (std::size_t d = 0; d < spec.drifters; ++d) {
    char id[32];
    std::snprintf(id, sizeof id, "d%0*zu", width, d);
    DrifterTrack tr{id, {}};
    State st = spec.start_states.empty()
                   ? static_cast<State>(std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))))
                   : spec.start_states[static_cast<std::size_t>(rng.uniform() * static_cast<double>(spec.start_states.size())) %
                                       spec.start_states.size()];
    const double t0 =
        std::floor(spec.start_day_min + rng.uniform() * (spec.start_day_max - spec.start_day_min + 1));
    auto [lon, lat] = position(st);
    tr.points.push_back({t0, lon, lat});
    for (int k = 0; k < spec.steps_per_drifter; ++k) {
      const double t = t0 + k * spec.lag_days;
      const Season season = spec.epoch.season_at(t);
      const auto& kernel = season == Season::W ? spec.w : season == Season::S ? spec.s : spec.sf;
      const auto next = rng.draw(kernel[static_cast<std::size_t>(st)]);
      if (!next) {
        // Leave through the western edge.
        tr.points.push_back({t + spec.lag_days, spec.bounds.lon_min - h / 2, g.center(st).second});
        break;
      }
      st = static_cast<State>(*next);
      std::tie(lon, lat) = position(st);
      tr.points.push_back({t + spec.lag_days, lon, lat});
    }
    tracks.push_back(std::move(tr));
  }
  return tracks;
}

TransitionMatrix kernel_matrix(const DenseKernel& k, double lag_days, MatrixLabel label) {
  std::vector<Triplet> trip;
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = 0; j < k[i].size(); ++j)
      if (k[i][j] != 0) trip.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), k[i][j]});
  return {SparseMatrix::from_triplets(k.size(), k.size(), std::move(trip)), lag_days, label,
          std::vector<std::uint64_t>(k.size(), 1)};
}

ChainSchedule true_schedule(const SyntheticSpec& spec, Epoch crash) {
  if (!spec.roles) throw InputError("synthetic spec has no roles");
  return ChainSchedule::seasonal(augment(kernel_matrix(spec.w, spec.lag_days, MatrixLabel::W), *spec.roles),
                                 augment(kernel_matrix(spec.s, spec.lag_days, MatrixLabel::S), *spec.roles),
                                 augment(kernel_matrix(spec.sf, spec.lag_days, MatrixLabel::SF), *spec.roles), crash);
}

std::vector<Observation> simulate_observations(const SyntheticSpec& spec, Epoch crash, std::uint64_t seed) {
  if (!spec.roles || !spec.true_source) throw InputError("debris simulation needs roles and a true source");
  const auto sched = true_schedule(spec, crash);
  const std::size_t n = sched.n_grid();
  const std::size_t m_count = spec.roles->target_count();
  // Dense rows of each scheduled matrix, cached per season.
  std::vector<std::vector<std::vector<double>>> dense(3);
  auto row_of = [&](int k, std::size_t i) -> const std::vector<double>& {
    const auto& a = sched.at_step(k);
    auto& table = dense[static_cast<std::size_t>(a.label == MatrixLabel::W ? 0 : a.label == MatrixLabel::S ? 1 : 2)];
    if (table.empty()) table.assign(a.size(), {});
    if (table[i].empty()) {
      table[i].assign(a.size(), 0.0);
      const auto cols = a.p.row_cols(i);
      const auto vals = a.p.row_values(i);
      for (std::size_t q = 0; q < cols.size(); ++q) table[i][static_cast<std::size_t>(cols[q])] = vals[q];
    }
    return table[i];
  };
  SplitRng rng(seed);
  std::vector<Observation> obs;
  for (std::size_t m = 1; m <= m_count; ++m) {
    bool found = false;
    for (int attempt = 0; attempt < spec.max_debris_attempts && !found; ++attempt) {
      std::size_t st = static_cast<std::size_t>(*spec.true_source);
      for (int k = 0; k < 100000; ++k) {
        const auto next = rng.draw(row_of(k, st));
        if (!next) break;  // numerical deficit; treat as lost
        st = *next;
        if (st < n) continue;
        if (st == n + m) {
          Observation o;
          o.target = static_cast<int>(m);
          o.steps = k + 1;
          o.days = o.steps * spec.lag_days;
          o.name = "target " + std::to_string(m);
          obs.push_back(o);
          found = true;
        }
        break;
      }
    }
    if (!found) throw NumericalError("no simulated debris reached target " + std::to_string(m));
  }
  return obs;
}

std::string tracks_csv(const std::vector<DrifterTrack>& tracks) {
  std::ostringstream out;
  out << "id,time_days,lon,lat\n";
  for (const auto& t : tracks)
    for (const auto& p : t.points)
      out << t.id << ',' << io::fmt(p.time_days) << ',' << io::fmt(p.lon) << ',' << io::fmt(p.lat) << '\n';
  return out.str();
}

std::string observations_csv(const std::vector<Observation>& obs) {
  std::ostringstream out;
  out << "target_label,days_since_crash,name\n";
  for (const auto& o : obs) out << o.target << ',' << io::fmt(o.days) << ',' << o.name << '\n';
  return out.str();
}

std::string roles_text(const StateRoles& roles, const GridCovering& g) {
  std::ostringstream out;
  auto box = [&](State s) {
    const auto b = g.box_of(s);
    return std::to_string(b.lon) + "," + std::to_string(b.lat);
  };
  for (State s : roles.leaky) out << "leaky: " << box(s) << '\n';
  for (const auto& s : roles.sticky) out << "sticky: " << box(s.state) << ',' << io::fmt(s.land_fraction) << '\n';
  for (const auto& t : roles.targets) out << "debris: " << box(t.state) << ',' << t.label << '\n';
  for (State s : roles.sources) out << "source: " << box(s) << '\n';
  return out.str();
}

void write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir, Epoch crash) {
  const auto g = spec.grid();
  io::write_file(out_dir / "trajectories.csv", tracks_csv(simulate_tracks(spec)));
  std::ostringstream grid;
  grid << "lon_min = " << io::fmt(spec.bounds.lon_min) << "\nlon_max = " << io::fmt(spec.bounds.lon_max)
       << "\nlat_min = " << io::fmt(spec.bounds.lat_min) << "\nlat_max = " << io::fmt(spec.bounds.lat_max)
       << "\ncell_size = " << io::fmt(spec.cell_size) << "\n";
  io::write_file(out_dir / "grid.cfg", grid.str());

  json truth = {{"seed", spec.seed},
                {"lag_days", spec.lag_days},
                {"epoch", format_date(spec.epoch.date())},
                {"kernels", {{"W", spec.w}, {"S", spec.s}, {"SF", spec.sf}}}};
  if (spec.roles) io::write_file(out_dir / "roles.csv", roles_text(*spec.roles, g));
  if (spec.roles && spec.true_source) {
    const auto obs = simulate_observations(spec, crash, spec.seed ^ 0x5eedULL);
    io::write_file(out_dir / "observations.csv", observations_csv(obs));
    const auto b = g.box_of(*spec.true_source);
    truth["true_source"] = {{"state", *spec.true_source}, {"box", {b.lon, b.lat}}};
    truth["crash_date"] = format_date(crash.date());
    json jobs = json::array();
    for (const auto& o : obs) jobs.push_back({{"target", o.target}, {"days", o.days}, {"steps", o.steps}});
    truth["observations"] = jobs;
  }
  io::write_file(out_dir / "truth.json", truth.dump(1) + "\n");

  // A run configuration pointing at the files above, relative to out_dir.
  std::ostringstream run;
  run << "grid = grid.cfg\ntrajectories = trajectories.csv\n";
  if (spec.roles) run << "roles = roles.csv\n";
  if (spec.roles && spec.true_source) run << "observations = observations.csv\n";
  run << "out = out\nlag_days = " << io::fmt(spec.lag_days) << "\nepoch = " << format_date(spec.epoch.date())
      << "\ncrash_date = " << format_date(crash.date()) << "\n";
  const double exponent = 90.0 / spec.lag_days;
  if (exponent == std::round(exponent)) run << "season_exponent = " << static_cast<int>(exponent) << "\n";
  io::write_file(out_dir / "run.cfg", run.str());
}

}  // namespace driftmc
