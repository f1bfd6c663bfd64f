#include "driftmc/absorb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftmc/error.hpp"
#include "driftmc/io.hpp"

namespace driftmc {

namespace {
constexpr double kRowTol = 1e-12;
}

SparseMatrix add_cemetery(const TransitionMatrix& p, const StateRoles& roles, CemeteryReport* report) {
  const std::size_t n = p.size();
  const auto cemetery = static_cast<std::int32_t>(n);
  CemeteryReport rep;
  SparseRowWriter w(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = p.p.row_cols(i);
    const auto vals = p.p.row_values(i);
    double sum = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      w.push(cols[k], vals[k]);
      sum += vals[k];
    }
    double deficit = 1.0 - sum;
    if (deficit < -kRowTol)
      throw NumericalError("row " + std::to_string(i) + " sums above one; cannot add a cemetery");
    deficit = std::max(deficit, 0.0);
    if (p.is_empty_row(i)) {
      ++rep.empty_rows;
    } else if (deficit > kRowTol) {
      if (roles.is_leaky(static_cast<State>(i)))
        ++rep.leaky_rows_with_deficit;
      else
        ++rep.undeclared_leaks;
    }
    w.push(cemetery, deficit);
    w.end_row();
  }
  w.push(cemetery, 1.0);
  w.end_row();
  if (report) *report = rep;
  return std::move(w).finish();
}

AugmentedChain add_beaching(const SparseMatrix& pc, const StateRoles& roles, MatrixLabel label, double lag_days) {
  if (pc.rows() != pc.cols() || pc.rows() == 0) throw InputError("add_beaching expects a square (N+1) matrix");
  const std::size_t n = pc.rows() - 1;
  const std::size_t m_count = roles.target_count();
  const std::size_t total = n + 1 + m_count;
  const auto cemetery = static_cast<std::int32_t>(n);

  SparseRowWriter w(total, total);
  for (std::size_t i = 0; i <= n; ++i) {
    const auto cols = pc.row_cols(i);
    const auto vals = pc.row_values(i);
    const auto ell = i < n ? roles.land_fraction(static_cast<State>(i)) : std::nullopt;
    if (!ell) {
      for (std::size_t k = 0; k < cols.size(); ++k) w.push(cols[k], vals[k]);
    } else {
      const double keep = 1.0 - *ell;
      const auto labels = roles.targets_at(static_cast<State>(i));
      for (std::size_t k = 0; k < cols.size(); ++k) {
        double v = keep * vals[k];
        if (cols[k] == cemetery && labels.empty()) v += *ell;
        w.push(cols[k], v);
      }
      if (labels.empty()) {
        if (cols.empty() || cols.back() != cemetery) w.push(cemetery, *ell);
      } else {
        const double share = *ell / static_cast<double>(labels.size());
        for (int m : labels) w.push(static_cast<std::int32_t>(n) + m, share);
      }
    }
    w.end_row();
  }
  for (std::size_t m = 1; m <= m_count; ++m) {
    w.push(static_cast<std::int32_t>(n + m), 1.0);
    w.end_row();
  }
  AugmentedChain a{std::move(w).finish(), n, roles, label, lag_days};
  for (std::size_t i = 0; i < total; ++i) {
    const double s = a.p.row_sum(i);
    if (std::abs(s - 1.0) > kRowTol)
      throw NumericalError("augmented row " + std::to_string(i) + " sums to " + io::fmt(s));
  }
  return a;
}

AugmentedChain augment(const TransitionMatrix& p, const StateRoles& roles, CemeteryReport* report) {
  return add_beaching(add_cemetery(p, roles, report), roles, p.label, p.lag_days);
}

AbsorptionBlocks absorption_split(const AugmentedChain& a) {
  const std::size_t n = a.n_grid;
  const std::size_t n_abs = a.size() - n;
  std::vector<Triplet> q, r;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = a.p.row_cols(i);
    const auto vals = a.p.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto c = static_cast<std::size_t>(cols[k]);
      if (c < n)
        q.push_back({static_cast<std::int32_t>(i), cols[k], vals[k]});
      else
        r.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(c - n), vals[k]});
    }
  }
  return {SparseMatrix::from_triplets(n, n, std::move(q)), SparseMatrix::from_triplets(n, n_abs, std::move(r))};
}

std::vector<std::vector<double>> absorption_probabilities(const AbsorptionBlocks& blocks, double tol, int max_iter) {
  const std::size_t n = blocks.q.rows();
  const std::size_t cols = blocks.r.cols();
  std::vector<std::vector<double>> b(n, std::vector<double>(cols, 0.0));
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> rc(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) rc[i] = blocks.r.at(i, c);
    // x_{k+1} = Q x_k + r, x_0 = r.
    std::vector<double> x = rc;
    bool done = false;
    for (int it = 0; it < max_iter; ++it) {
      auto next = blocks.q.right_multiply(x);
      double change = 0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] += rc[i];
        change = std::max(change, std::abs(next[i] - x[i]));
      }
      x = std::move(next);
      if (change <= tol) {
        done = true;
        break;
      }
    }
    if (!done) throw NumericalError("absorption series did not converge");
    for (std::size_t i = 0; i < n; ++i) b[i][c] = x[i];
  }
  return b;
}

std::string serialize_chain(const AugmentedChain& a) {
  std::ostringstream out;
  out << "# driftmc augmented-chain v1\n";
  out << "# states " << a.size() << "\n";
  out << "# grid_states " << a.n_grid << "\n";
  out << "# lag_days " << io::fmt(a.lag_days) << "\n";
  out << "# label " << label_name(a.label) << "\n";
  out << "row,col,value\n";
  for (const auto& t : a.p.triplets()) out << t.row << ',' << t.col << ',' << io::fmt(t.value) << '\n';
  out << "[roles]\n";
  for (State s : a.roles.leaky) out << "leaky," << s << '\n';
  for (const auto& s : a.roles.sticky) out << "sticky," << s.state << ',' << io::fmt(s.land_fraction) << '\n';
  for (const auto& t : a.roles.targets) out << "debris," << t.state << ',' << t.label << '\n';
  for (State s : a.roles.sources) out << "source," << s << '\n';
  return out.str();
}

AugmentedChain parse_chain(std::string_view text) {
  AugmentedChain a;
  std::size_t total = 0;
  bool have_total = false, have_grid = false, have_lag = false, have_label = false;
  enum class Part { Header, Body, Roles } part = Part::Header;
  std::vector<Triplet> trip;
  std::size_t line_no = 0;
  for (auto line : io::split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "chain file line " + std::to_string(line_no);
    if (part == Part::Header) {
      if (line.front() == '#') {
        const auto f = io::split(io::trim(line.substr(1)), ' ');
        if (f.size() != 2) continue;
        if (f[0] == "states") {
          total = static_cast<std::size_t>(io::require_int(f[1], "states"));
          have_total = true;
        } else if (f[0] == "grid_states") {
          a.n_grid = static_cast<std::size_t>(io::require_int(f[1], "grid_states"));
          have_grid = true;
        } else if (f[0] == "lag_days") {
          a.lag_days = io::require_double(f[1], "lag_days");
          have_lag = true;
        } else if (f[0] == "label") {
          a.label = parse_label(f[1]);
          have_label = true;
        }
        continue;
      }
      if (line != "row,col,value") throw InputError(where + ": expected 'row,col,value' header");
      part = Part::Body;
      continue;
    }
    if (line == "[roles]") {
      part = Part::Roles;
      continue;
    }
    const auto f = io::split(line, ',');
    if (part == Part::Body) {
      if (f.size() != 3) throw InputError(where + ": expected i,j,value");
      trip.push_back({static_cast<std::int32_t>(io::require_int(f[0], "row")),
                      static_cast<std::int32_t>(io::require_int(f[1], "col")), io::require_double(f[2], "value")});
      continue;
    }
    const auto state = [&] { return static_cast<State>(io::require_int(f.at(1), "state")); };
    if (f[0] == "leaky" && f.size() == 2) {
      a.roles.leaky.push_back(state());
    } else if (f[0] == "sticky" && f.size() == 3) {
      a.roles.sticky.push_back({state(), io::require_double(f[2], "land fraction")});
    } else if (f[0] == "debris" && f.size() == 3) {
      a.roles.targets.push_back({state(), static_cast<int>(io::require_int(f[2], "label"))});
    } else if (f[0] == "source" && f.size() == 2) {
      a.roles.sources.push_back(state());
    } else {
      throw InputError(where + ": unknown role record");
    }
  }
  if (!have_total || !have_grid || !have_lag || !have_label || part == Part::Header)
    throw InputError("chain file: incomplete header");
  a.roles.validate(a.n_grid);
  if (total != a.n_grid + 1 + a.roles.target_count())
    throw InputError("chain file: state count does not equal N + 1 + M");
  try {
    a.p = SparseMatrix::from_triplets(total, total, std::move(trip));
  } catch (const std::out_of_range&) {
    throw InputError("chain file: entry index outside the chain");
  }
  return a;
}

}  // namespace driftmc
