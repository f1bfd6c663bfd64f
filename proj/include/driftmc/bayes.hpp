#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftmc/absorb.hpp"
#include "driftmc/calendar.hpp"

namespace driftmc {

/// Which augmented matrix drives each step. Step k runs from crash + kT to
/// crash + (k+1)T and uses the season of its start date.
class ChainSchedule {
 public:
  static ChainSchedule autonomous(AugmentedChain a);
  static ChainSchedule seasonal(AugmentedChain w, AugmentedChain s, AugmentedChain sf, Epoch crash,
                                SeasonCalendar cal = {});
  /// Arbitrary per-step list, cycled when k exceeds its length.
  static ChainSchedule cyclic(std::vector<AugmentedChain> steps);

  const AugmentedChain& at_step(int k) const;
  std::string_view step_label(int k) const;
  const AugmentedChain& any() const { return *chains_.front(); }
  std::size_t n_grid() const { return any().n_grid; }
  std::size_t size() const { return any().size(); }
  const StateRoles& roles() const { return any().roles; }
  double lag_days() const { return any().lag_days; }

 private:
  std::vector<std::shared_ptr<const AugmentedChain>> chains_;
  enum class Mode { Single, Seasonal, Cyclic } mode_ = Mode::Single;
  Epoch crash_{};
  SeasonCalendar cal_{};
};

struct Observation {
  int target = 0;  // label m in 1..M
  double days = 0;
  std::string name;
  int steps = 0;  // round(days / T)
};

/// CSV `target_label,days_since_crash,name`; the header line is optional.
std::vector<Observation> parse_observations(std::string_view csv, double lag_days, std::size_t n_targets);
std::vector<Observation> load_observations(const std::filesystem::path& p, double lag_days, std::size_t n_targets);

/// cdf[k] = probability of sitting in target b after k scheduled steps from c; cdf[0] = 0.
std::vector<double> absorption_cdf(const ChainSchedule& sched, State c, int target, int max_steps);
/// All targets at once: out[m - 1][k].
std::vector<std::vector<double>> absorption_cdfs(const ChainSchedule& sched, State c, int max_steps);

/// pmf[k] = cdf[k] - cdf[k-1], pmf[0] = cdf[0] (which must be 0).
std::vector<double> first_absorption_pmf(std::span<const double> cdf);

/// Sum over observations of log factors; any zero factor gives -inf.
/// factors[c][b] is p(t^b | c).
std::vector<double> joint_likelihood(const std::vector<std::vector<double>>& factors);

struct PosteriorResult {
  std::vector<double> log_likelihood;
  std::vector<double> posterior;
  std::vector<std::vector<double>> single_posterior;  // [b][c]
  std::vector<bool> single_defined;
  std::size_t c_max = 0;  // argmax of the posterior
  std::size_t c_ml = 0;   // argmax of the likelihood
  double level = 0.95;
  std::size_t cpi_low = 0;  // positions in candidate order
  std::size_t cpi_high = 0;
};

/// Normalizes exp(logL) * prior with a max-log shift. Candidates are taken in
/// the given (latitude) order for the central posterior interval. Empty prior
/// means uniform. Throws NumericalError when the evidence is zero.
PosteriorResult posterior(std::span<const double> log_likelihood, std::span<const double> prior, double level = 0.95);

/// Position range in candidate order holding the central `level` mass.
std::pair<std::size_t, std::size_t> central_interval(std::span<const double> mass, double level);

struct InversionOptions {
  double cpi_level = 0.95;
  int window_steps = 0;
  std::vector<double> prior;  // empty: uniform over candidates
};

struct Inversion {
  PosteriorResult result;
  std::vector<std::vector<double>> factors;  // [c][b] p(t^b | c)
};

/// Full pipeline over roles().sources with the single-observation posteriors filled in.
Inversion invert(const ChainSchedule& sched, std::span<const Observation> obs, const InversionOptions& opt = {});

/// First-beaching probability at each sticky state s and step k = 1..K
/// (mass at s after k-1 steps times l(s)). Rows follow roles().sticky.
struct StickySurface {
  std::vector<State> states;
  std::vector<std::vector<double>> mass;  // [s][k - 1]
};
StickySurface sticky_fit_map(const ChainSchedule& sched, State c, int max_steps);

}  // namespace driftmc
