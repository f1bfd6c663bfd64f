#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>

#include "driftmc/error.hpp"
#include "driftmc/spectral.hpp"
#include "driftmc/ulam.hpp"
#include "oracles.hpp"

using namespace driftmc;

namespace {

double max_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[static_cast<Eigen::Index>(i)]));
  return m;
}

/// Two weakly coupled 3-state gyres; gyre A (0..2) barely leaks, gyre B (3..5) leaks heavily.
oracle::Dense two_gyres() {
  oracle::Dense p = oracle::Dense::Zero(6, 6);
  const double a_leak = 0.01, b_leak = 0.25, couple = 0.02;
  for (int g = 0; g < 2; ++g) {
    const double stay = 1.0 - (g == 0 ? a_leak : b_leak) - couple;
    for (int i = 0; i < 3; ++i) {
      const int s = 3 * g + i;
      p(s, 3 * g + (i + 1) % 3) = 0.6 * stay;
      p(s, s) = 0.4 * stay;
      p(s, 3 * (1 - g) + i) = couple;
    }
  }
  return p;
}

}  // namespace

TEST_CASE("identity gives lambda 1 and the uniform left vector") {
  const auto r = dominant_eigs(SparseMatrix::identity(5));
  CHECK(r.converged);
  CHECK(r.values[0].real() == doctest::Approx(1.0));
  for (double v : r.left[0]) CHECK(v == doctest::Approx(0.2));
  for (double v : r.right[0]) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("2x2 closed form") {
  const oracle::Dense p = (oracle::Dense(2, 2) << 0.9, 0.1, 0.2, 0.8).finished();
  const auto r = dominant_eigs(oracle::sparse(p), {.count = 2});
  REQUIRE(r.converged);
  CHECK(r.values[0].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.values[1].real() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(r.left[0][0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(r.left[0][1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(r.right[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.right[0][1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("substochastic matrices agree with the dense eigensolver") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial;
    const auto p = oracle::random_substochastic(n, rng, 0.7, 1.0, 0.5);
    const auto want = oracle::dense_eig(p);
    const auto got = dominant_eigs(oracle::sparse(p), {.count = 3});
    REQUIRE(got.converged);
    CHECK(std::abs(got.values[0].real() - want.lambda) < 1e-10);
    CHECK(got.values[0].real() < 1.0 + 1e-10);
    CHECK(max_diff(got.left[0], want.left) < 1e-10);
    CHECK(max_diff(got.right[0], want.right) < 1e-10);
    for (double v : got.left[0]) CHECK(v >= -1e-12);
    for (std::size_t k = 0; k < got.moduli.size(); ++k) {
      CHECK(std::abs(got.moduli[k] - want.moduli[k]) < 1e-8);
      if (k > 0) CHECK(got.moduli[k] <= got.moduli[k - 1] + 1e-12);
    }
    CHECK(got.left_residual[0] <= 1e-10);
    CHECK(got.right_residual[0] <= 1e-10);
  }
}

TEST_CASE("stochastic matrices have the constant right vector") {
  std::mt19937_64 rng(32);
  const auto p = oracle::random_substochastic(30, rng, 1.0, 1.0, 0.2);
  const auto r = dominant_eigs(oracle::sparse(p));
  REQUIRE(r.converged);
  for (double v : r.right[0]) CHECK(std::abs(v - 1.0) < 1e-10);
}

TEST_CASE("rotation gives a flagged complex pair") {
  // 3-cycle scaled by 0.9 plus a slow mode: eigenvalues 0.9 * cube roots of unity.
  oracle::Dense p = oracle::Dense::Zero(3, 3);
  p(0, 1) = p(1, 2) = p(2, 0) = 0.9;
  const auto r = dominant_eigs(oracle::sparse(p), {.count = 3});
  REQUIRE(r.moduli.size() == 3);
  for (double m : r.moduli) CHECK(m == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(std::count(r.complex_pair.begin(), r.complex_pair.end(), true) == 2);
}

TEST_CASE("basin_of_attraction") {
  const std::vector<double> ones(4, 1.0);
  CHECK(basin_of_attraction(ones) == std::vector<State>{0, 1, 2, 3});
  const std::vector<double> single{0, 0, 1, 0};
  CHECK(basin_of_attraction(single) == std::vector<State>{2});
  const std::vector<double> edge{0.5, 0.51, 0.2};
  CHECK(basin_of_attraction(edge) == std::vector<State>{1});
  CHECK(basin_of_attraction(edge, 0.1) == std::vector<State>{0, 1, 2});
}

TEST_CASE("retention_time") {
  SUBCASE("published value") {
    const oracle::Dense p = (oracle::Dense(1, 1) << 0.5103).finished();
    const std::vector<State> b{0};
    const auto r = retention_time(oracle::sparse(p), b, 1.0);
    CHECK(r.lambda_b == doctest::Approx(0.5103).epsilon(1e-12));
    CHECK(std::abs(r.retention - 2.0421) < 1e-4);
  }
  SUBCASE("two-state toy, T = 5 d") {
    const oracle::Dense p = (oracle::Dense(3, 3) << 0.25, 0.25, 0.5, 0.25, 0.25, 0.5, 0, 0, 1).finished();
    const std::vector<State> b{0, 1};
    const auto r = retention_time(oracle::sparse(p), b, 5.0);
    CHECK(r.lambda_b == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.retention == doctest::Approx(10.0).epsilon(1e-10));
  }
  SUBCASE("absorbing singleton is closed") {
    const std::vector<State> b{1};
    const auto r = retention_time(SparseMatrix::identity(3), b, 5.0);
    CHECK(r.infinite);
    CHECK(std::isinf(r.retention));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(retention_time(SparseMatrix::identity(2), std::vector<State>{}, 1.0), InputError);
    const oracle::Dense z = (oracle::Dense(2, 2) << 0, 1, 0, 0).finished();
    CHECK_THROWS(retention_time(oracle::sparse(z), std::vector<State>{0}, 1.0));
  }
}

TEST_CASE("zonal profile") {
  const GridCovering g(GridBounds{0, 2, -5, 5}, 0.5, {});
  std::vector<double> v(g.size());
  SUBCASE("constant") {
    std::fill(v.begin(), v.end(), 1.0);
    for (const auto& r : zonal_profile(v, g)) {
      CHECK(r.mean == 1.0);
      CHECK(r.deriv == 0.0);
      CHECK(r.boxes == 4);
    }
  }
  SUBCASE("linear in latitude") {
    for (std::size_t s = 0; s < v.size(); ++s) v[s] = 3.0 * g.center(static_cast<State>(s)).second - 1.0;
    const auto rows = zonal_profile(v, g);
    CHECK(rows.size() == 20);
    for (const auto& r : rows) {
      CHECK(std::abs(r.deriv - 3.0) < 1e-12);
      CHECK(std::abs(r.mean - (3.0 * r.lat - 1.0)) < 1e-12);
    }
  }
  SUBCASE("step") {
    for (std::size_t s = 0; s < v.size(); ++s) v[s] = g.box_of(static_cast<State>(s)).lat >= 12 ? 1.0 : 0.0;
    const auto rows = zonal_profile(v, g);
    const auto peak = std::max_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.deriv < b.deriv; });
    CHECK((peak->row == 11 || peak->row == 12));
    CHECK(peak->deriv == doctest::Approx(1.0 / (2 * 0.5)));
    for (const auto& r : rows)
      if (r.row < 11 || r.row > 12) CHECK(r.deriv == 0.0);
  }
}

TEST_CASE("decay ratio of the mass tends to lambda_1") {
  std::mt19937_64 rng(12);
  const auto p = oracle::random_substochastic(10, rng, 0.8, 0.99, 0.6);
  const auto lambda = dominant_eigs(oracle::sparse(p)).values[0].real();
  std::vector<double> f(10, 0.1);
  double prev = 1.0, ratio = 0;
  for (int k = 1; k <= 50; ++k) {
    f = push_forward(f, oracle::sparse(p), 1);
    const double m = std::accumulate(f.begin(), f.end(), 0.0);
    ratio = m / prev;
    prev = m;
  }
  CHECK(std::abs(ratio - lambda) / lambda < 0.01);
}

TEST_CASE("two-gyre chain: basin is the shielded gyre, confirmed by Monte-Carlo survival") {
  const auto p = two_gyres();
  const auto e = dominant_eigs(oracle::sparse(p));
  const auto basin = basin_of_attraction(e.right[0]);
  CHECK(basin == std::vector<State>{0, 1, 2});

  // Mean survival steps from each state by simulation.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> survival(6, 0.0);
  const int walks = 20000;
  for (int s0 = 0; s0 < 6; ++s0) {
    double total = 0;
    for (int w = 0; w < walks; ++w) {
      int s = s0, t = 0;
      while (s >= 0) {
        ++t;
        const double x = u(rng);
        double cum = 0;
        int next = -1;
        for (int j = 0; j < 6; ++j)
          if (x < (cum += p(s, j))) {
            next = j;
            break;
          }
        s = next;
      }
      total += t;
    }
    survival[static_cast<std::size_t>(s0)] = total / walks;
  }
  const double in_min = *std::min_element(survival.begin(), survival.begin() + 3);
  const double out_max = *std::max_element(survival.begin() + 3, survival.end());
  CHECK(in_min > 2 * out_max);
  // Expected steps before first leaving B match T / (1 - lambda_B). The gyre is
  // symmetric, so the exit time is geometric from every member state.
  const auto ret = retention_time(oracle::sparse(p), basin, 1.0);
  double exit_total = 0;
  for (int w = 0; w < walks; ++w) {
    int s = 0, t = 0;
    while (s >= 0 && s < 3) {
      ++t;
      const double x = u(rng);
      double cum = 0;
      int next = -1;
      for (int j = 0; j < 6; ++j)
        if (x < (cum += p(s, j))) {
          next = j;
          break;
        }
      s = next;
    }
    exit_total += t;
  }
  CHECK(std::abs(exit_total / walks - ret.retention) / ret.retention < 0.03);
}

TEST_CASE("output formats") {
  const GridCovering g(GridBounds{0, 1, 0, 0.5}, 0.5, {});
  const std::vector<double> v{0.25, 0.75};
  const auto csv = state_vector_csv(v, g);
  CHECK(csv.rfind("state,lon_center,lat_center,value\n", 0) == 0);
  CHECK(csv.find("1,0.75,0.25,0.75") != std::string::npos);
  const auto rows = zonal_profile(v, g);
  CHECK(zonal_profile_csv(rows).rfind("lat,mean,deriv\n", 0) == 0);
  const auto gj = nlohmann::json::parse(basin_geojson(std::vector<State>{1}, g));
  CHECK(gj["type"] == "FeatureCollection");
  const auto& geom = gj["features"][0]["geometry"];
  CHECK(geom["type"] == "MultiPolygon");
  CHECK(geom["coordinates"].size() == 1);
  CHECK(geom["coordinates"][0][0].size() == 5);
}
