#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "driftmc/grid.hpp"
#include "driftmc/sparse.hpp"
#include "driftmc/ulam.hpp"

namespace driftmc {

/// Closed chain over N grid states, the cemetery (index N) and M target
/// cemeteries (index N + m for label m). Every row sums to one.
struct AugmentedChain {
  SparseMatrix p;
  std::size_t n_grid = 0;
  StateRoles roles;
  MatrixLabel label = MatrixLabel::Pooled;
  double lag_days = 0;

  std::size_t size() const { return p.rows(); }
  std::size_t n_targets() const { return roles.target_count(); }
  State cemetery() const { return static_cast<State>(n_grid); }
  State target_state(int label_m) const { return static_cast<State>(n_grid) + label_m; }
};

struct CemeteryReport {
  std::size_t leaky_rows_with_deficit = 0;
  /// Rows not declared leaky that still lose mass; their deficit is routed to
  /// the cemetery as well.
  std::size_t undeclared_leaks = 0;
  std::size_t empty_rows = 0;
};

/// (N+1)-state matrix: row deficits go to the cemetery, which is absorbing.
/// Empty rows send all their mass to the cemetery.
SparseMatrix add_cemetery(const TransitionMatrix& p, const StateRoles& roles, CemeteryReport* report = nullptr);

/// Beaching augmentation of a row-stochastic (N+1)-state matrix. Sticky rows
/// are scaled by (1 - l) over all of S and the cemetery; the beached mass l
/// goes to the cemetery for non-debris sticky states and to the target
/// cemetery (split equally when several targets share a box) otherwise.
AugmentedChain add_beaching(const SparseMatrix& with_cemetery, const StateRoles& roles, MatrixLabel label,
                            double lag_days);

/// add_cemetery followed by add_beaching.
AugmentedChain augment(const TransitionMatrix& p, const StateRoles& roles, CemeteryReport* report = nullptr);

/// Transient block Q (N x N) and absorption block R (N x (1 + M)), columns
/// of R being the cemetery followed by targets 1..M.
struct AbsorptionBlocks {
  SparseMatrix q;
  SparseMatrix r;
};

AbsorptionBlocks absorption_split(const AugmentedChain& a);

/// B = (I - Q)^{-1} R by the Neumann series, summed until the increment's
/// max-norm drops below tol. Row-major N x (1 + M).
std::vector<std::vector<double>> absorption_probabilities(const AbsorptionBlocks& blocks, double tol = 1e-14,
                                                          int max_iter = 1000000);

std::string serialize_chain(const AugmentedChain& a);
AugmentedChain parse_chain(std::string_view text);

}  // namespace driftmc
