#include "driftmc/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driftmc/error.hpp"
#include "driftmc/io.hpp"
#include "driftmc/parallel.hpp"

namespace driftmc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_same_shape(const AugmentedChain& a, const AugmentedChain& b) {
  if (a.size() != b.size() || a.n_grid != b.n_grid || a.n_targets() != b.n_targets())
    throw InputError("scheduled chains differ in shape");
  if (a.lag_days != b.lag_days) throw InputError("scheduled chains differ in transition time");
}
}  // namespace

ChainSchedule ChainSchedule::autonomous(AugmentedChain a) {
  ChainSchedule s;
  s.chains_.push_back(std::make_shared<const AugmentedChain>(std::move(a)));
  return s;
}

ChainSchedule ChainSchedule::seasonal(AugmentedChain w, AugmentedChain s, AugmentedChain sf, Epoch crash,
                                      SeasonCalendar cal) {
  check_same_shape(w, s);
  check_same_shape(w, sf);
  ChainSchedule out;
  out.mode_ = Mode::Seasonal;
  out.crash_ = crash;
  out.cal_ = cal;
  out.chains_.push_back(std::make_shared<const AugmentedChain>(std::move(w)));
  out.chains_.push_back(std::make_shared<const AugmentedChain>(std::move(s)));
  out.chains_.push_back(std::make_shared<const AugmentedChain>(std::move(sf)));
  return out;
}

ChainSchedule ChainSchedule::cyclic(std::vector<AugmentedChain> steps) {
  if (steps.empty()) throw InputError("cyclic schedule needs at least one chain");
  ChainSchedule out;
  out.mode_ = Mode::Cyclic;
  for (const auto& c : steps) check_same_shape(steps.front(), c);
  for (auto& c : steps) out.chains_.push_back(std::make_shared<const AugmentedChain>(std::move(c)));
  return out;
}

const AugmentedChain& ChainSchedule::at_step(int k) const {
  switch (mode_) {
    case Mode::Single:
      return *chains_.front();
    case Mode::Cyclic:
      return *chains_[static_cast<std::size_t>(k) % chains_.size()];
    case Mode::Seasonal:
      break;
  }
  const Season s = crash_.season_at(k * lag_days(), cal_);
  return *chains_[static_cast<std::size_t>(s)];
}

std::string_view ChainSchedule::step_label(int k) const { return label_name(at_step(k).label); }

std::vector<Observation> parse_observations(std::string_view csv, double lag_days, std::size_t n_targets) {
  std::vector<Observation> obs;
  std::size_t line_no = 0;
  for (auto line : io::split(csv, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto f = io::split(line, ',');
    if (line_no == 1 && !io::to_int(f[0])) continue;  // header
    if (f.size() < 2) throw InputError("observations line " + std::to_string(line_no) + ": expected label,days,name");
    Observation o;
    o.target = static_cast<int>(io::require_int(f[0], "target label"));
    o.days = io::require_double(f[1], "days since crash");
    if (f.size() >= 3) {
      // Names may themselves contain commas.
      const auto second = line.find(',', line.find(',') + 1);
      o.name = std::string(io::trim(line.substr(second + 1)));
    }
    if (o.target < 1 || static_cast<std::size_t>(o.target) > n_targets)
      throw InputError("observations line " + std::to_string(line_no) + ": target label outside 1..M");
    if (!(o.days > 0)) throw InputError("observations line " + std::to_string(line_no) + ": days must be positive");
    o.steps = static_cast<int>(std::lround(o.days / lag_days));
    if (o.steps < 1) throw InputError("observations line " + std::to_string(line_no) + ": rounds to zero steps");
    obs.push_back(std::move(o));
  }
  return obs;
}

std::vector<Observation> load_observations(const std::filesystem::path& p, double lag_days, std::size_t n_targets) {
  return parse_observations(io::read_file(p), lag_days, n_targets);
}

std::vector<std::vector<double>> absorption_cdfs(const ChainSchedule& sched, State c, int max_steps) {
  const std::size_t n = sched.n_grid();
  const std::size_t m_count = sched.roles().target_count();
  if (c < 0 || static_cast<std::size_t>(c) >= n) throw InputError("candidate state outside the grid");
  if (max_steps < 0) throw InputError("negative horizon");
  std::vector<std::vector<double>> cdf(m_count, std::vector<double>(static_cast<std::size_t>(max_steps) + 1, 0.0));
  std::vector<double> f(sched.size(), 0.0);
  f[static_cast<std::size_t>(c)] = 1.0;
  for (int k = 1; k <= max_steps; ++k) {
    f = sched.at_step(k - 1).p.left_multiply(f);
    for (std::size_t m = 0; m < m_count; ++m) cdf[m][static_cast<std::size_t>(k)] = f[n + 1 + m];
  }
  return cdf;
}

std::vector<double> absorption_cdf(const ChainSchedule& sched, State c, int target, int max_steps) {
  if (target < 1 || static_cast<std::size_t>(target) > sched.roles().target_count())
    throw InputError("target label outside 1..M");
  return absorption_cdfs(sched, c, max_steps)[static_cast<std::size_t>(target) - 1];
}

std::vector<double> first_absorption_pmf(std::span<const double> cdf) {
  if (cdf.empty()) return {};
  if (cdf[0] != 0.0) throw NumericalError("absorption cdf must vanish at k = 0");
  std::vector<double> pmf(cdf.size(), 0.0);
  for (std::size_t k = 1; k < cdf.size(); ++k) {
    if (cdf[k] < cdf[k - 1]) throw NumericalError("absorption cdf decreases at step " + std::to_string(k));
    pmf[k] = cdf[k] - cdf[k - 1];
  }
  return pmf;
}

std::vector<double> joint_likelihood(const std::vector<std::vector<double>>& factors) {
  std::vector<double> out;
  out.reserve(factors.size());
  for (const auto& row : factors) {
    double s = 0;
    for (double p : row) {
      if (!(p > 0)) {
        s = kNegInf;
        break;
      }
      s += std::log(p);
    }
    out.push_back(s);
  }
  return out;
}

std::pair<std::size_t, std::size_t> central_interval(std::span<const double> mass, double level) {
  if (!(level > 0 && level < 1)) throw InputError("posterior interval level must lie in (0,1)");
  const double lo_q = (1.0 - level) / 2.0;
  const double hi_q = 1.0 - lo_q;
  constexpr double slack = 1e-12;
  std::size_t lo = mass.size() - 1, hi = mass.size() - 1;
  bool lo_set = false;
  double cum = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    cum += mass[i];
    if (!lo_set && cum >= lo_q - slack && cum > 0) {
      lo = i;
      lo_set = true;
    }
    if (cum >= hi_q - slack) {
      hi = i;
      break;
    }
  }
  return {lo, hi};
}

namespace {

// Normalized posterior; empty result when the evidence vanishes.
std::vector<double> normalize(std::span<const double> log_l, std::span<const double> prior) {
  const std::size_t n = log_l.size();
  std::vector<double> log_post(n, kNegInf);
  double shift = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double pr = prior.empty() ? 1.0 / static_cast<double>(n) : prior[i];
    if (pr > 0 && log_l[i] > kNegInf) log_post[i] = log_l[i] + std::log(pr);
    shift = std::max(shift, log_post[i]);
  }
  if (shift == kNegInf) return {};
  std::vector<double> post(n, 0.0);
  double z = 0;
  for (std::size_t i = 0; i < n; ++i) {
    post[i] = log_post[i] == kNegInf ? 0.0 : std::exp(log_post[i] - shift);
    z += post[i];
  }
  for (auto& p : post) p /= z;
  return post;
}

}  // namespace

PosteriorResult posterior(std::span<const double> log_likelihood, std::span<const double> prior, double level) {
  const std::size_t n = log_likelihood.size();
  if (n == 0) throw InputError("posterior needs at least one candidate");
  if (!prior.empty()) {
    if (prior.size() != n) throw InputError("prior length differs from candidate count");
    double s = 0;
    for (double p : prior) {
      if (p < 0) throw InputError("prior has negative mass");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw InputError("prior must sum to one");
  }
  PosteriorResult r;
  r.level = level;
  r.log_likelihood.assign(log_likelihood.begin(), log_likelihood.end());
  r.posterior = normalize(log_likelihood, prior);
  if (r.posterior.empty()) throw NumericalError("zero evidence: every candidate has zero likelihood or prior");
  r.c_max = static_cast<std::size_t>(std::max_element(r.posterior.begin(), r.posterior.end()) - r.posterior.begin());
  r.c_ml = static_cast<std::size_t>(std::max_element(log_likelihood.begin(), log_likelihood.end()) -
                                    log_likelihood.begin());
  std::tie(r.cpi_low, r.cpi_high) = central_interval(r.posterior, level);
  return r;
}

Inversion invert(const ChainSchedule& sched, std::span<const Observation> obs, const InversionOptions& opt) {
  const auto& sources = sched.roles().sources;
  if (sources.empty()) throw InputError("roles define no candidate source states");
  if (obs.empty()) throw InputError("no observations supplied");
  if (opt.window_steps < 0) throw InputError("window half-width must be non-negative");
  int horizon = 0;
  for (const auto& o : obs) {
    if (o.target < 1 || static_cast<std::size_t>(o.target) > sched.roles().target_count())
      throw InputError("observation refers to an unknown target");
    horizon = std::max(horizon, o.steps + opt.window_steps);
  }

  Inversion inv;
  inv.factors.assign(sources.size(), std::vector<double>(obs.size(), 0.0));
  parallel_for(sources.size(), [&](std::size_t ci) {
    const auto cdfs = absorption_cdfs(sched, sources[ci], horizon);
    std::vector<std::vector<double>> pmfs;
    for (const auto& cdf : cdfs) pmfs.push_back(first_absorption_pmf(cdf));
    for (std::size_t b = 0; b < obs.size(); ++b) {
      const auto& pmf = pmfs[static_cast<std::size_t>(obs[b].target) - 1];
      double p = 0;
      for (int k = std::max(1, obs[b].steps - opt.window_steps); k <= obs[b].steps + opt.window_steps; ++k)
        p += pmf[static_cast<std::size_t>(k)];
      inv.factors[ci][b] = p;
    }
  });

  inv.result = posterior(joint_likelihood(inv.factors), opt.prior, opt.cpi_level);
  for (std::size_t b = 0; b < obs.size(); ++b) {
    std::vector<double> single(sources.size());
    for (std::size_t ci = 0; ci < sources.size(); ++ci)
      single[ci] = inv.factors[ci][b] > 0 ? std::log(inv.factors[ci][b]) : kNegInf;
    auto post = normalize(single, opt.prior);
    inv.result.single_defined.push_back(!post.empty());
    if (post.empty()) post.assign(sources.size(), 0.0);
    inv.result.single_posterior.push_back(std::move(post));
  }
  return inv;
}

StickySurface sticky_fit_map(const ChainSchedule& sched, State c, int max_steps) {
  const std::size_t n = sched.n_grid();
  if (c < 0 || static_cast<std::size_t>(c) >= n) throw InputError("candidate state outside the grid");
  const auto& sticky = sched.roles().sticky;
  StickySurface surf;
  for (const auto& s : sticky) surf.states.push_back(s.state);
  surf.mass.assign(sticky.size(), std::vector<double>(static_cast<std::size_t>(std::max(max_steps, 0)), 0.0));
  std::vector<double> f(sched.size(), 0.0);
  f[static_cast<std::size_t>(c)] = 1.0;
  for (int k = 1; k <= max_steps; ++k) {
    for (std::size_t q = 0; q < sticky.size(); ++q)
      surf.mass[q][static_cast<std::size_t>(k) - 1] = f[static_cast<std::size_t>(sticky[q].state)] * sticky[q].land_fraction;
    f = sched.at_step(k - 1).p.left_multiply(f);
  }
  return surf;
}

}  // namespace driftmc
