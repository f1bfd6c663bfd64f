#include "driftmc/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "driftmc/error.hpp"
#include "driftmc/io.hpp"

namespace driftmc {

namespace {

using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

Mat apply(const SparseMatrix& a, const Mat& v) {
  Mat w(v.rows(), v.cols());
  std::vector<double> x(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::VectorXd::Map(x.data(), v.rows()) = v.col(c);
    const auto y = a.right_multiply(x);
    w.col(c) = Eigen::VectorXd::Map(y.data(), v.rows());
  }
  return w;
}

Mat orthonormalize(const Mat& w) {
  Eigen::HouseholderQR<Mat> qr(w);
  return qr.householderQ() * Mat::Identity(w.rows(), w.cols());
}

struct RitzPair {
  std::complex<double> value;
  CVec vector;
  double residual = 0;
};

// ||Ax - lx||_1 / (||x||_1 |l_ref|), l_ref the dominant eigenvalue, so that
// subdominant pairs near rounding level are judged against the matrix scale.
double relative_residual(const SparseMatrix& a, const CVec& x, std::complex<double> lambda, double lambda_ref) {
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<double> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = x[static_cast<Eigen::Index>(i)].real();
    im[i] = x[static_cast<Eigen::Index>(i)].imag();
  }
  const auto are = a.right_multiply(re);
  const auto aim = a.right_multiply(im);
  double r = 0, norm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<double> ax(are[i], aim[i]);
    r += std::abs(ax - lambda * x[static_cast<Eigen::Index>(i)]);
    norm += std::abs(x[static_cast<Eigen::Index>(i)]);
  }
  const double scale = norm * std::max(lambda_ref, std::numeric_limits<double>::min());
  return scale > 0 ? r / scale : r;
}

// Ritz pairs of A on span(V), V orthonormal and AV precomputed, sorted by
// decreasing modulus (positive imaginary part first within a conjugate pair).
std::vector<RitzPair> ritz(const Mat& v, const Mat& av) {
  const Mat h = v.transpose() * av;
  Eigen::EigenSolver<Mat> es(h, true);
  std::vector<RitzPair> out;
  for (Eigen::Index k = 0; k < h.rows(); ++k)
    out.push_back({es.eigenvalues()[k], v.cast<std::complex<double>>() * es.eigenvectors().col(k), 0.0});
  std::stable_sort(out.begin(), out.end(), [](const RitzPair& a, const RitzPair& b) {
    const double ma = std::abs(a.value), mb = std::abs(b.value);
    if (std::abs(ma - mb) > 1e-14 * std::max(ma, mb)) return ma > mb;
    return a.value.imag() > b.value.imag();
  });
  return out;
}

struct OneSided {
  std::vector<RitzPair> pairs;
  int iterations = 0;
  bool converged = false;
};

OneSided subspace_iteration(const SparseMatrix& a, const EigenOptions& opt) {
  const auto n = static_cast<Eigen::Index>(a.rows());
  const Eigen::Index k = std::min<Eigen::Index>(opt.count, n);
  const Eigen::Index p = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * k + 2, k + 5));

  Mat v(n, p);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  v.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (Eigen::Index c = 1; c < p; ++c)
    for (Eigen::Index r = 0; r < n; ++r) v(r, c) = normal(rng);
  v = orthonormalize(v);

  // Iterate past tol to tighten vectors; stop early once progress stalls.
  const double target = opt.tol * 1e-3;
  OneSided best;
  double best_err = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const Mat av = apply(a, v);
    auto pairs = ritz(v, av);
    double err = 0;
    for (Eigen::Index q = 0; q < k; ++q) {
      pairs[static_cast<std::size_t>(q)].residual = relative_residual(
          a, pairs[static_cast<std::size_t>(q)].vector, pairs[static_cast<std::size_t>(q)].value, std::abs(pairs[0].value));
      err = std::max(err, pairs[static_cast<std::size_t>(q)].residual);
    }
    if (err < best_err * 0.999 || best.pairs.empty()) {
      best.pairs.assign(pairs.begin(), pairs.begin() + k);
      best.iterations = it;
      stalled = err < best_err ? 0 : stalled + 1;
      best_err = std::min(err, best_err);
    } else {
      ++stalled;
    }
    if (best_err <= target || p == n) break;
    if (best_err <= opt.tol && stalled > 200) break;
    v = orthonormalize(av);
  }
  best.converged = best_err <= opt.tol || p == n;
  return best;
}

std::vector<double> real_normalized(const CVec& x, bool left, double& scale_out) {
  std::vector<double> v(static_cast<std::size_t>(x.size()));
  // Rotate the phase so the largest component is real and positive.
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  const std::complex<double> phase = std::abs(x[imax]) > 0 ? std::conj(x[imax]) / std::abs(x[imax]) : 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) v[static_cast<std::size_t>(i)] = (x[i] * phase).real();
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (sum < 0)
    for (auto& e : v) e = -e;
  double maxabs = 0;
  for (double e : v) maxabs = std::max(maxabs, std::abs(e));
  const bool nonneg = std::all_of(v.begin(), v.end(), [&](double e) { return e >= -1e-12 * maxabs; });
  double scale = maxabs;
  if (left && nonneg) scale = std::abs(std::accumulate(v.begin(), v.end(), 0.0));
  if (scale > 0)
    for (auto& e : v) e /= scale;
  scale_out = scale;
  return v;
}

double real_residual(const SparseMatrix& a, std::span<const double> x, std::complex<double> lambda,
                     double lambda_ref) {
  CVec cx(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) cx[static_cast<Eigen::Index>(i)] = x[i];
  return relative_residual(a, cx, lambda, lambda_ref);
}

}  // namespace

EigenResult dominant_eigs(const SparseMatrix& a, const EigenOptions& opt) {
  if (a.rows() != a.cols()) throw InputError("eigen-solver requires a square matrix");
  if (a.rows() == 0) throw InputError("eigen-solver requires a non-empty matrix");
  if (opt.count < 1) throw InputError("eigenpair count must be at least 1");
  const auto at = a.transpose();
  const auto right = subspace_iteration(a, opt);
  const auto left = subspace_iteration(at, opt);

  EigenResult res;
  res.iterations = std::max(right.iterations, left.iterations);
  res.converged = right.converged && left.converged;
  const double right_ref = std::abs(right.pairs.front().value);
  const double left_ref = std::abs(left.pairs.front().value);
  for (std::size_t q = 0; q < right.pairs.size(); ++q) {
    const auto lambda = right.pairs[q].value;
    const bool cplx = std::abs(lambda.imag()) > 1e-12 * std::max(1.0, std::abs(lambda));
    res.values.push_back(cplx ? lambda : std::complex<double>(lambda.real(), 0.0));
    res.moduli.push_back(std::abs(lambda));
    res.complex_pair.push_back(cplx);
    double scale = 0;
    res.right.push_back(real_normalized(right.pairs[q].vector, false, scale));
    res.right_residual.push_back(cplx ? right.pairs[q].residual : real_residual(a, res.right.back(), lambda.real(), right_ref));
    const auto lpair = q < left.pairs.size() ? left.pairs[q] : left.pairs.back();
    res.left.push_back(real_normalized(lpair.vector, true, scale));
    res.left_residual.push_back(cplx ? lpair.residual : real_residual(at, res.left.back(), lpair.value.real(), left_ref));
  }
  return res;
}

std::vector<State> basin_of_attraction(std::span<const double> r, double threshold) {
  std::vector<State> out;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] > threshold) out.push_back(static_cast<State>(i));
  return out;
}

RetentionResult retention_time(const SparseMatrix& p, std::span<const State> basin, double transition_time,
                               const EigenOptions& opt) {
  if (basin.empty()) throw InputError("retention time needs a non-empty basin");
  const auto sub = p.principal_submatrix(basin);
  if (sub.nnz() == 0) throw InputError("matrix restricted to the basin is identically zero");
  EigenOptions o = opt;
  o.count = 1;
  const auto e = dominant_eigs(sub, o);
  if (!e.converged) throw NumericalError("eigen-solver did not converge on the basin restriction");
  RetentionResult r;
  r.lambda_b = e.moduli.front();
  if (r.lambda_b >= 1.0 - 1e-12) {
    r.infinite = true;
    r.retention = std::numeric_limits<double>::infinity();
  } else {
    r.retention = transition_time / (1.0 - r.lambda_b);
  }
  return r;
}

std::vector<ZonalRow> zonal_profile(std::span<const double> v, const GridCovering& g) {
  if (v.size() != g.size()) throw InputError("zonal profile: vector length differs from state count");
  std::vector<double> sum(static_cast<std::size_t>(g.n_lat()), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(g.n_lat()), 0);
  for (std::size_t s = 0; s < v.size(); ++s) {
    const auto row = static_cast<std::size_t>(g.box_of(static_cast<State>(s)).lat);
    sum[row] += v[s];
    ++count[row];
  }
  std::vector<ZonalRow> rows;
  for (int j = 0; j < g.n_lat(); ++j)
    if (count[static_cast<std::size_t>(j)] > 0)
      rows.push_back({j, g.lat_of_row(j), sum[static_cast<std::size_t>(j)] / static_cast<double>(count[static_cast<std::size_t>(j)]), 0.0,
                      count[static_cast<std::size_t>(j)]});
  for (std::size_t k = 0; k < rows.size() && rows.size() > 1; ++k) {
    const auto lo = k == 0 ? 0 : k - 1;
    const auto hi = k + 1 == rows.size() ? k : k + 1;
    rows[k].deriv = (rows[hi].mean - rows[lo].mean) / (rows[hi].lat - rows[lo].lat);
  }
  return rows;
}

std::string state_vector_csv(std::span<const double> v, const GridCovering& g) {
  std::ostringstream out;
  out << "state,lon_center,lat_center,value\n";
  for (std::size_t s = 0; s < v.size(); ++s) {
    const auto [lon, lat] = g.center(static_cast<State>(s));
    out << s << ',' << io::fmt(lon) << ',' << io::fmt(lat) << ',' << io::fmt(v[s]) << '\n';
  }
  return out.str();
}

std::string zonal_profile_csv(std::span<const ZonalRow> rows) {
  std::ostringstream out;
  out << "lat,mean,deriv\n";
  for (const auto& r : rows) out << io::fmt(r.lat) << ',' << io::fmt(r.mean) << ',' << io::fmt(r.deriv) << '\n';
  return out.str();
}

std::string basin_geojson(std::span<const State> members, const GridCovering& g) {
  using nlohmann::json;
  json polys = json::array();
  const double h = g.cell_size() / 2;
  for (State s : members) {
    const auto [lon, lat] = g.center(s);
    polys.push_back(json::array({json::array({{lon - h, lat - h}, {lon + h, lat - h}, {lon + h, lat + h},
                                              {lon - h, lat + h}, {lon - h, lat - h}})}));
  }
  json feature = {{"type", "Feature"},
                  {"properties", {{"name", "basin"}, {"boxes", members.size()}}},
                  {"geometry", {{"type", "MultiPolygon"}, {"coordinates", polys}}}};
  json fc = {{"type", "FeatureCollection"}, {"features", json::array({feature})}};
  return fc.dump(1) + "\n";
}

}  // namespace driftmc
