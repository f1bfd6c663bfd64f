#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftmc/calendar.hpp"
#include "driftmc/ingest.hpp"
#include "driftmc/sparse.hpp"

namespace driftmc {

enum class MatrixLabel { W, S, SF, Annual, Pooled };

std::string_view label_name(MatrixLabel l);
MatrixLabel parse_label(std::string_view s);
MatrixLabel label_of(Season s);

/// Row-substochastic Ulam matrix over the N grid states. The deficit
/// 1 - row_sum(i) is the probability of leaving the domain in one step.
struct TransitionMatrix {
  SparseMatrix p;
  double lag_days = 0;
  MatrixLabel label = MatrixLabel::Pooled;
  std::vector<std::uint64_t> row_counts;  // samples starting in each row

  std::size_t size() const { return p.rows(); }
  bool is_empty_row(std::size_t i) const { return row_counts[i] == 0; }
  double empty_row_fraction() const;
  double deficit(std::size_t i) const { return 1.0 - p.row_sum(i); }
};

/// Ulam estimator: P_ij = #(i -> j) / #(i -> anything, including leaving).
TransitionMatrix estimate(std::span<const TransitionPair> pairs, std::size_t n_states, double lag_days,
                          MatrixLabel label);

/// Season-aware year W^e SF^e S^e SF^e (left-multiplication order), e = 18 by default.
TransitionMatrix compose_annual(const TransitionMatrix& w, const TransitionMatrix& s, const TransitionMatrix& sf,
                                int exponent = 18, double prune = 1e-15);

SparseMatrix matrix_power(const SparseMatrix& m, int exponent, double prune = 1e-15);

/// f P^k by k successive vector-matrix products.
std::vector<double> push_forward(std::span<const double> f, const SparseMatrix& p, int steps);
inline std::vector<double> push_forward(std::span<const double> f, const TransitionMatrix& p, int steps) {
  return push_forward(f, p.p, steps);
}

struct MarkovTestRow {
  int n = 0;
  std::vector<double> lambda_n;      // leading moduli of P(nT)
  std::vector<double> lambda_1_pow;  // leading moduli of P(T), raised to n
  std::vector<double> rel_deviation;
  bool converged = true;
};

/// Compares |lambda_k(P(nT))| with |lambda_k(P(T))|^n for each supplied lag matrix.
std::vector<MarkovTestRow> markov_test(const TransitionMatrix& p1, std::span<const TransitionMatrix> pn, int k_eigs);

std::string serialize_matrix(const TransitionMatrix& m);
TransitionMatrix parse_matrix(std::string_view text);

}  // namespace driftmc
