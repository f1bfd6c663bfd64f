#include "driftmc/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftmc/error.hpp"
#include "driftmc/io.hpp"
#include "driftmc/spectral.hpp"

namespace driftmc {

std::string_view label_name(MatrixLabel l) {
  switch (l) {
    case MatrixLabel::W:
      return "W";
    case MatrixLabel::S:
      return "S";
    case MatrixLabel::SF:
      return "SF";
    case MatrixLabel::Annual:
      return "annual";
    case MatrixLabel::Pooled:
      return "pooled";
  }
  return "?";
}

MatrixLabel parse_label(std::string_view s) {
  for (auto l : {MatrixLabel::W, MatrixLabel::S, MatrixLabel::SF, MatrixLabel::Annual, MatrixLabel::Pooled})
    if (label_name(l) == s) return l;
  throw InputError("unknown matrix label '" + std::string(s) + "'");
}

MatrixLabel label_of(Season s) {
  switch (s) {
    case Season::W:
      return MatrixLabel::W;
    case Season::S:
      return MatrixLabel::S;
    case Season::SF:
      break;
  }
  return MatrixLabel::SF;
}

double TransitionMatrix::empty_row_fraction() const {
  if (row_counts.empty()) return 0.0;
  const auto empty = std::count(row_counts.begin(), row_counts.end(), 0u);
  return static_cast<double>(empty) / static_cast<double>(row_counts.size());
}

TransitionMatrix estimate(std::span<const TransitionPair> pairs, std::size_t n_states, double lag_days,
                          MatrixLabel label) {
  std::vector<std::pair<State, State>> keys;
  keys.reserve(pairs.size());
  std::vector<std::uint64_t> totals(n_states, 0);
  for (const auto& p : pairs) {
    if (p.from < 0 || static_cast<std::size_t>(p.from) >= n_states || p.to < kOutside ||
        (p.to != kOutside && static_cast<std::size_t>(p.to) >= n_states))
      throw InputError("transition pair refers to a state outside 0..N-1");
    ++totals[static_cast<std::size_t>(p.from)];
    if (p.to != kOutside) keys.emplace_back(p.from, p.to);
  }
  std::sort(keys.begin(), keys.end());
  SparseRowWriter w(n_states, n_states);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_states; ++i) {
    const double denom = static_cast<double>(totals[i]);
    while (k < keys.size() && static_cast<std::size_t>(keys[k].first) == i) {
      const State j = keys[k].second;
      std::uint64_t count = 0;
      for (; k < keys.size() && static_cast<std::size_t>(keys[k].first) == i && keys[k].second == j; ++k) ++count;
      w.push(j, static_cast<double>(count) / denom);
    }
    w.end_row();
  }
  return {std::move(w).finish(), lag_days, label, std::move(totals)};
}

SparseMatrix matrix_power(const SparseMatrix& m, int exponent, double prune) {
  if (exponent < 0) throw std::invalid_argument("negative matrix power");
  SparseMatrix result = SparseMatrix::identity(m.rows());
  SparseMatrix base = m;
  bool first = true;
  while (exponent > 0) {
    if (exponent & 1) {
      result = first ? base : result.multiply(base, prune);
      first = false;
    }
    exponent >>= 1;
    if (exponent > 0) base = base.multiply(base, prune);
  }
  return result;
}

TransitionMatrix compose_annual(const TransitionMatrix& w, const TransitionMatrix& s, const TransitionMatrix& sf,
                                int exponent, double prune) {
  if (w.size() != s.size() || w.size() != sf.size()) throw InputError("seasonal matrices differ in size");
  if (w.lag_days != s.lag_days || w.lag_days != sf.lag_days)
    throw InputError("seasonal matrices differ in transition time");
  const auto pw = matrix_power(w.p, exponent, prune);
  const auto ps = matrix_power(s.p, exponent, prune);
  const auto psf = matrix_power(sf.p, exponent, prune);
  auto year = pw.multiply(psf, prune).multiply(ps, prune).multiply(psf, prune);
  std::vector<std::uint64_t> counts(w.size());
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = w.row_counts[i] + s.row_counts[i] + sf.row_counts[i];
  return {std::move(year), w.lag_days * 4 * exponent, MatrixLabel::Annual, std::move(counts)};
}

std::vector<double> push_forward(std::span<const double> f, const SparseMatrix& p, int steps) {
  if (f.size() != p.rows()) throw InputError("distribution length does not match the matrix");
  if (steps < 0) throw InputError("step count must be non-negative");
  std::vector<double> v(f.begin(), f.end());
  for (int k = 0; k < steps; ++k) v = p.left_multiply(v);
  return v;
}

std::vector<MarkovTestRow> markov_test(const TransitionMatrix& p1, std::span<const TransitionMatrix> pn, int k_eigs) {
  if (k_eigs < 1) throw InputError("markov_test needs at least one eigenvalue");
  EigenOptions opt;
  opt.count = k_eigs;
  const auto base = dominant_eigs(p1.p, opt);
  std::vector<MarkovTestRow> rows;
  for (const auto& m : pn) {
    MarkovTestRow row;
    row.n = static_cast<int>(std::lround(m.lag_days / p1.lag_days));
    const auto e = dominant_eigs(m.p, opt);
    row.converged = base.converged && e.converged;
    for (int k = 0; k < k_eigs; ++k) {
      const double lhs = k < static_cast<int>(e.moduli.size()) ? e.moduli[k] : 0.0;
      const double rhs =
          k < static_cast<int>(base.moduli.size()) ? std::pow(base.moduli[k], row.n) : 0.0;
      row.lambda_n.push_back(lhs);
      row.lambda_1_pow.push_back(rhs);
      row.rel_deviation.push_back(rhs > 0 ? std::abs(lhs - rhs) / rhs : std::abs(lhs - rhs));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string serialize_matrix(const TransitionMatrix& m) {
  std::ostringstream out;
  out << "# driftmc transition-matrix v1\n";
  out << "# states " << m.size() << "\n";
  out << "# lag_days " << io::fmt(m.lag_days) << "\n";
  out << "# label " << label_name(m.label) << "\n";
  out << "# row_counts";
  for (auto c : m.row_counts) out << ' ' << c;
  out << "\nrow,col,value\n";
  for (const auto& t : m.p.triplets()) out << t.row << ',' << t.col << ',' << io::fmt(t.value) << '\n';
  return out.str();
}

TransitionMatrix parse_matrix(std::string_view text) {
  TransitionMatrix m;
  std::size_t n = 0;
  bool have_n = false, have_lag = false, have_label = false, in_body = false;
  std::vector<Triplet> trip;
  std::size_t line_no = 0;
  for (auto line : io::split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto f = io::split(io::trim(line.substr(1)), ' ');
      if (f.size() < 1) continue;
      if (f[0] == "states" && f.size() == 2) {
        n = static_cast<std::size_t>(io::require_int(f[1], "states"));
        have_n = true;
      } else if (f[0] == "lag_days" && f.size() == 2) {
        m.lag_days = io::require_double(f[1], "lag_days");
        have_lag = true;
      } else if (f[0] == "label" && f.size() == 2) {
        m.label = parse_label(f[1]);
        have_label = true;
      } else if (f[0] == "row_counts") {
        for (std::size_t k = 1; k < f.size(); ++k)
          m.row_counts.push_back(static_cast<std::uint64_t>(io::require_int(f[k], "row count")));
      }
      continue;
    }
    if (!in_body) {
      if (line != "row,col,value") throw InputError("matrix file: expected 'row,col,value' header");
      in_body = true;
      continue;
    }
    const auto f = io::split(line, ',');
    if (f.size() != 3) throw InputError("matrix file line " + std::to_string(line_no) + ": expected i,j,value");
    trip.push_back({static_cast<std::int32_t>(io::require_int(f[0], "row")),
                    static_cast<std::int32_t>(io::require_int(f[1], "col")), io::require_double(f[2], "value")});
  }
  if (!have_n || !have_lag || !have_label || !in_body) throw InputError("matrix file: incomplete header");
  if (m.row_counts.size() != n) throw InputError("matrix file: row_counts length differs from states");
  try {
    m.p = SparseMatrix::from_triplets(n, n, std::move(trip));
  } catch (const std::out_of_range&) {
    throw InputError("matrix file: entry index outside 0..N-1");
  }
  return m;
}

}  // namespace driftmc
