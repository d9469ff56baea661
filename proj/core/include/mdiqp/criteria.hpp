#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mdiqp/gf2.hpp"

namespace mdiqp {

// Rows of A are the samples. With s >= n the covariance is the n x n matrix
// (2A-1)^T (2A-1) / s and gamma = n / s; otherwise the roles swap so that
// gamma <= 1 always.
struct Covariance {
  std::size_t dim = 0;
  double gamma = 0.0;
  std::vector<double> data;  // row-major dim x dim
  double at(std::size_t i, std::size_t j) const { return data[i * dim + j]; }
};
Covariance standardized_covariance(const BitMatrix& a);
std::vector<double> covariance_spectrum(const Covariance& c);

// Marchenko-Pastur law with a_pm = (1 +- sqrt(gamma))^2. mp_density is the
// continuous part; for gamma > 1 the CDF adds the mass 1 - 1/gamma at zero.
double mp_density(double lambda, double gamma);
double mp_cdf(double x, double gamma);
// Kolmogorov-Smirnov distance between the empirical spectral CDF and MP.
double mp_distance(std::vector<double> eigs, double gamma);

// Upper tail of the chi-square distribution.
double chi2_sf(double x, double dof);

struct BinomialFit {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 0.0;
  std::size_t samples = 0;
};
// Chi-square goodness of fit of samples against Binomial(trials, 1/2),
// merging bins until every expected count is at least 5.
BinomialFit binomial_fit(const std::vector<std::size_t>& samples, std::size_t trials);

struct HammingReport {
  BinomialFit rows, cols, row_pairs, col_pairs;
  bool rows_pass = false;
  bool cols_pass = false;
  bool pairwise_pass = false;
};
// Pairwise distances use at most max_pairs random distinct pairs per side.
HammingReport hamming_statistics(const BitMatrix& a, double alpha = 1e-3, std::size_t max_pairs = 5000,
                                 std::uint64_t seed = 0);

// Fraction of random square submatrices of side min(s, n) / 2 whose GF(2)
// rank is at least side - 2.
double submatrix_rank_fraction(const BitMatrix& a, int trials, std::uint64_t seed);

struct CriterionThresholds {
  double ks_max = 0.05;
  double p_min = 1e-3;
  double rank_min = 0.90;
  int rank_trials = 100;
  std::size_t max_pairs = 5000;
};

struct CriterionReport {
  double gamma = 0.0;
  double mp_distance = 0.0;
  bool mp_pass = false;
  HammingReport hamming;
  double rank_fraction = 0.0;
  bool rank_pass = false;
  bool overall = false;
};

CriterionReport criterion1(const BitMatrix& a, const CriterionThresholds& th = {}, std::uint64_t seed = 0);

std::string to_json(const CriterionReport& r);
// Columns: bin_center, empirical_density, mp_density.
void write_spectrum_csv(std::ostream& os, const std::vector<double>& eigs, double gamma, int bins);

enum class Generator { ancilla_free, measurement_driven };
enum class Connectivity { grid, all_to_all };

// Matrix tested by criterion1 for one instance at `depth`: for
// ancilla-free circuits depth counts cx layers of a random network, for
// measurement-driven circuits it is the number of rounds D (r1 = r2 = 1).
// Sizes on a grid must be perfect squares.
BitMatrix criterion_instance(Generator g, Connectivity c, std::size_t n, int depth, std::uint64_t seed);

struct DepthScanRow {
  Generator generator;
  Connectivity connectivity;
  std::size_t n = 0;
  int min_depth = -1;        // -1: no passing depth up to the search limit
  std::size_t cx_depth = 0;  // measured two-qubit depth at min_depth
  double pass_fraction = 0.0;
};

// Smallest depth at which criterion1 passes on a majority of `seeds`
// instances, by binary search on [1, max_depth].
std::vector<DepthScanRow> min_depth_scan(Generator g, Connectivity c, const std::vector<std::size_t>& sizes, int seeds,
                                         int max_depth, std::uint64_t seed, const CriterionThresholds& th = {});

std::string to_string(Generator g);
std::string to_string(Connectivity c);

}  // namespace mdiqp
