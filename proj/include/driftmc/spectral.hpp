#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftmc/grid.hpp"
#include "driftmc/sparse.hpp"

namespace driftmc {

struct EigenOptions {
  int count = 1;
  double tol = 1e-10;
  int max_iter = 100000;
  std::uint64_t seed = 0;
};

/// Leading eigenpairs ordered by decreasing modulus. Real vectors are sign
/// fixed to positive sum; left vectors sum to 1 when nonnegative (else max
/// |x| = 1), right vectors have max |x| = 1. For a complex pair the real part
/// of the vector is stored and `complex_pair` is set.
struct EigenResult {
  std::vector<std::complex<double>> values;
  std::vector<double> moduli;
  std::vector<bool> complex_pair;
  std::vector<std::vector<double>> left;
  std::vector<std::vector<double>> right;
  std::vector<double> left_residual;   // ||xA - lx||_1 / (|l_1| ||x||_1)
  std::vector<double> right_residual;  // ||Ax - lx||_1 / (|l_1| ||x||_1)
  int iterations = 0;
  bool converged = false;
};

/// Restarted subspace iteration with Rayleigh-Ritz extraction, run on A for
/// right vectors and on A^T for left vectors. Deterministic for a fixed seed.
EigenResult dominant_eigs(const SparseMatrix& a, const EigenOptions& opt = {});

/// {i : r_i > threshold}.
std::vector<State> basin_of_attraction(std::span<const double> r, double threshold = 0.5);

struct RetentionResult {
  double lambda_b = 0;
  double retention = 0;  // same unit as the supplied transition time; +inf when closed
  bool infinite = false;
};

/// T / (1 - lambda_B), lambda_B the dominant eigenvalue of P restricted to B.
RetentionResult retention_time(const SparseMatrix& p, std::span<const State> basin, double transition_time,
                               const EigenOptions& opt = {});

struct BasinResult {
  std::vector<State> members;
  double threshold = 0.5;
  RetentionResult retention;
};

struct ZonalRow {
  int row = 0;  // latitude row index in the grid
  double lat = 0;
  double mean = 0;
  double deriv = 0;  // d(mean)/d(lat) per degree
  std::size_t boxes = 0;
};

/// Mean of v over active boxes in each latitude row that has any, and its
/// centered-difference derivative in latitude (one-sided at the ends).
std::vector<ZonalRow> zonal_profile(std::span<const double> v, const GridCovering& g);

std::string state_vector_csv(std::span<const double> v, const GridCovering& g);
std::string zonal_profile_csv(std::span<const ZonalRow> rows);
/// FeatureCollection with one MultiPolygon of the member boxes.
std::string basin_geojson(std::span<const State> members, const GridCovering& g);

}  // namespace driftmc
