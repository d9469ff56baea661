#include "mdiqp/criteria.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "mdiqp/grid.hpp"
#include "mdiqp/rng.hpp"
#include "mdiqp/staircase.hpp"

namespace mdiqp {

namespace {

std::size_t xor_weight(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  std::size_t w = 0;
  for (std::size_t k = 0; k < a.size(); ++k) w += std::popcount(a[k] ^ b[k]);
  return w;
}

// Gram matrix of the +-1 rows of m, scaled by 1 / cols.
Covariance row_gram(const BitMatrix& m) {
  Covariance c;
  c.dim = m.rows();
  c.data.assign(c.dim * c.dim, 0.0);
  const double len = static_cast<double>(m.cols());
  for (std::size_t i = 0; i < c.dim; ++i) {
    c.data[i * c.dim + i] = 1.0;
    for (std::size_t j = i + 1; j < c.dim; ++j) {
      const double v = (len - 2.0 * static_cast<double>(xor_weight(m.row(i), m.row(j)))) / len;
      c.data[i * c.dim + j] = c.data[j * c.dim + i] = v;
    }
  }
  return c;
}

double log_binom_pmf(std::size_t n, std::size_t k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::numbers::ln2;
}

// Distinct uniformly random i < j pairs; every pair when there are at most max_pairs.
std::vector<std::pair<std::size_t, std::size_t>> pick_pairs(std::size_t m, std::size_t max_pairs, std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (m < 2) return out;
  if (m * (m - 1) / 2 <= max_pairs) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) out.emplace_back(i, j);
    return out;
  }
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  std::unordered_set<std::size_t> seen;
  while (out.size() < max_pairs) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (seen.insert(i * m + j).second) out.emplace_back(i, j);
  }
  return out;
}

std::vector<std::size_t> random_subset(std::size_t m, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

nlohmann::json fit_json(const BinomialFit& f) {
  return {{"statistic", f.statistic}, {"dof", f.dof}, {"p_value", f.p_value}, {"samples", f.samples}};
}

int grid_side(std::size_t n) {
  const auto w = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (w * w != n || w == 0) throw std::invalid_argument("grid connectivity needs a perfect-square size");
  return static_cast<int>(w);
}

}  // namespace

Covariance standardized_covariance(const BitMatrix& a) {
  if (a.empty()) throw std::invalid_argument("standardized_covariance: empty matrix");
  const std::size_t s = a.rows(), n = a.cols();
  Covariance c = s >= n ? row_gram(a.transpose()) : row_gram(a);
  c.gamma = static_cast<double>(std::min(s, n)) / static_cast<double>(std::max(s, n));
  return c;
}

std::vector<double> covariance_spectrum(const Covariance& c) {
  const auto d = static_cast<Eigen::Index>(c.dim);
  Eigen::Map<const Eigen::MatrixXd> m(c.data.data(), d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("covariance_spectrum: eigensolver failed");
  return {es.eigenvalues().data(), es.eigenvalues().data() + d};
}

double mp_density(double lambda, double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("mp_density: gamma must be positive");
  const double am = std::pow(1 - std::sqrt(gamma), 2), ap = std::pow(1 + std::sqrt(gamma), 2);
  if (lambda <= am || lambda >= ap || lambda <= 0) return 0.0;
  return std::sqrt((ap - lambda) * (lambda - am)) / (2 * std::numbers::pi * gamma * lambda);
}

double mp_cdf(double x, double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("mp_cdf: gamma must be positive");
  const double am = std::pow(1 - std::sqrt(gamma), 2), ap = std::pow(1 + std::sqrt(gamma), 2);
  const double atom = gamma > 1 ? 1 - 1 / gamma : 0.0;
  if (x < 0) return 0.0;
  if (x <= am) return atom;
  if (x >= ap) return 1.0;
  // lambda = mid - half cos u removes the square-root edges.
  const double mid = (ap + am) / 2, half = (ap - am) / 2;
  const double top = std::acos(std::clamp((mid - x) / half, -1.0, 1.0));
  auto f = [&](double u) {
    const double lam = mid - half * std::cos(u);
    const double s = std::sin(u);
    if (lam <= 0) return half * (1 + std::cos(u)) / (2 * std::numbers::pi * gamma);  // gamma = 1 limit at u = 0
    return half * half * s * s / (2 * std::numbers::pi * gamma * lam);
  };
  const int m = 512;
  const double h = top / m;
  double acc = f(0) + f(top);
  for (int k = 1; k < m; ++k) acc += (k % 2 ? 4 : 2) * f(k * h);
  return std::min(1.0, atom + acc * h / 3);
}

double mp_distance(std::vector<double> eigs, double gamma) {
  if (eigs.empty()) throw std::invalid_argument("mp_distance: no eigenvalues");
  std::sort(eigs.begin(), eigs.end());
  const double n = static_cast<double>(eigs.size());
  double d = 0;
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    const double f = mp_cdf(eigs[i], gamma);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return d;
}

double chi2_sf(double x, double dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2, x / 2);
}

BinomialFit binomial_fit(const std::vector<std::size_t>& samples, std::size_t trials) {
  BinomialFit fit;
  fit.samples = samples.size();
  if (samples.empty()) {
    fit.p_value = 1.0;
    return fit;
  }
  std::vector<double> observed(trials + 1, 0.0);
  for (auto k : samples) {
    if (k > trials) throw std::invalid_argument("binomial_fit: sample exceeds trial count");
    observed[k] += 1;
  }
  const double total = static_cast<double>(samples.size());
  std::vector<double> obs_bins, exp_bins;
  double o = 0, e = 0;
  for (std::size_t k = 0; k <= trials; ++k) {
    o += observed[k];
    e += total * std::exp(log_binom_pmf(trials, k));
    if (e >= 5) {
      obs_bins.push_back(o);
      exp_bins.push_back(e);
      o = e = 0;
    }
  }
  if (e > 0 || o > 0) {
    if (exp_bins.empty()) {
      obs_bins.push_back(o);
      exp_bins.push_back(e);
    } else {
      obs_bins.back() += o;
      exp_bins.back() += e;
    }
  }
  for (std::size_t b = 0; b < obs_bins.size(); ++b)
    fit.statistic += (obs_bins[b] - exp_bins[b]) * (obs_bins[b] - exp_bins[b]) / exp_bins[b];
  fit.dof = static_cast<double>(obs_bins.size()) - 1;
  fit.p_value = chi2_sf(fit.statistic, fit.dof);
  return fit;
}

HammingReport hamming_statistics(const BitMatrix& a, double alpha, std::size_t max_pairs, std::uint64_t seed) {
  HammingReport r;
  const BitMatrix at = a.transpose();
  auto rng = make_rng(derive_seed(seed, "hamming", 0));

  std::vector<std::size_t> w;
  for (std::size_t i = 0; i < a.rows(); ++i) w.push_back(a.row_weight(i));
  r.rows = binomial_fit(w, a.cols());
  w.clear();
  for (std::size_t j = 0; j < at.rows(); ++j) w.push_back(at.row_weight(j));
  r.cols = binomial_fit(w, a.rows());

  w.clear();
  for (auto [i, j] : pick_pairs(a.rows(), max_pairs, rng)) w.push_back(xor_weight(a.row(i), a.row(j)));
  r.row_pairs = binomial_fit(w, a.cols());
  w.clear();
  for (auto [i, j] : pick_pairs(at.rows(), max_pairs, rng)) w.push_back(xor_weight(at.row(i), at.row(j)));
  r.col_pairs = binomial_fit(w, a.rows());

  r.rows_pass = r.rows.p_value >= alpha;
  r.cols_pass = r.cols.p_value >= alpha;
  r.pairwise_pass = r.row_pairs.p_value >= alpha && r.col_pairs.p_value >= alpha;
  return r;
}

double submatrix_rank_fraction(const BitMatrix& a, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("submatrix_rank_fraction: trials must be positive");
  const std::size_t side = std::min(a.rows(), a.cols()) / 2;
  if (side < 3) throw std::invalid_argument("submatrix_rank_fraction: submatrix side below 3");
  int good = 0;
  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(derive_seed(seed, "rank", static_cast<std::uint64_t>(t)));
    const auto rows = random_subset(a.rows(), side, rng);
    const auto cols = random_subset(a.cols(), side, rng);
    if (rank_gf2(a.select(rows, cols)) + 2 >= side) ++good;
  }
  return static_cast<double>(good) / trials;
}

CriterionReport criterion1(const BitMatrix& a, const CriterionThresholds& th, std::uint64_t seed) {
  CriterionReport r;
  const auto cov = standardized_covariance(a);
  r.gamma = cov.gamma;
  r.mp_distance = mp_distance(covariance_spectrum(cov), cov.gamma);
  r.mp_pass = r.mp_distance <= th.ks_max;
  r.hamming = hamming_statistics(a, th.p_min, th.max_pairs, seed);
  r.rank_fraction = submatrix_rank_fraction(a, th.rank_trials, seed);
  r.rank_pass = r.rank_fraction >= th.rank_min;
  r.overall = r.mp_pass && r.hamming.rows_pass && r.hamming.cols_pass && r.hamming.pairwise_pass && r.rank_pass;
  return r;
}

std::string to_json(const CriterionReport& r) {
  nlohmann::json j = {
      {"gamma", r.gamma},
      {"mp_distance", r.mp_distance},
      {"mp_pass", r.mp_pass},
      {"hamming",
       {{"rows", fit_json(r.hamming.rows)},
        {"cols", fit_json(r.hamming.cols)},
        {"row_pairs", fit_json(r.hamming.row_pairs)},
        {"col_pairs", fit_json(r.hamming.col_pairs)},
        {"rows_pass", r.hamming.rows_pass},
        {"cols_pass", r.hamming.cols_pass},
        {"pairwise_pass", r.hamming.pairwise_pass}}},
      {"rank_fraction", r.rank_fraction},
      {"rank_pass", r.rank_pass},
      {"overall", r.overall},
  };
  return j.dump(2);
}

void write_spectrum_csv(std::ostream& os, const std::vector<double>& eigs, double gamma, int bins) {
  if (bins < 1) throw std::invalid_argument("write_spectrum_csv: bins must be positive");
  const double ap = std::pow(1 + std::sqrt(gamma), 2);
  double hi = ap;
  for (double e : eigs) hi = std::max(hi, e);
  const double width = hi / bins;
  std::vector<double> hist(bins, 0.0);
  for (double e : eigs) hist[std::clamp(static_cast<int>(std::max(e, 0.0) / width), 0, bins - 1)] += 1;
  os << "bin_center,empirical_density,mp_density\n";
  char buf[128];
  for (int b = 0; b < bins; ++b) {
    const double x = (b + 0.5) * width;
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", x, hist[b] / (eigs.size() * width), mp_density(x, gamma));
    os << buf;
  }
}

BitMatrix criterion_instance(Generator g, Connectivity c, std::size_t n, int depth, std::uint64_t seed) {
  if (depth < 1) throw std::invalid_argument("criterion_instance: depth must be positive");
  if (g == Generator::measurement_driven) {
    const StaircaseParams p{depth, 1, 1};
    if (c == Connectivity::all_to_all) return build_staircase_all_to_all(n, p, seed).conjugation;
    const int w = grid_side(n);
    return build_staircase(system_grid_layout(w, w), p, seed).conjugation;
  }
  const auto edges = c == Connectivity::all_to_all ? complete_edges(n) : grid_edges(grid_side(n), grid_side(n));
  const BitMatrix b = apply_cx_gates(n, random_nn_cx_network(n, edges, depth, seed));
  return inverse_gf2(b).transpose();
}

std::vector<DepthScanRow> min_depth_scan(Generator g, Connectivity c, const std::vector<std::size_t>& sizes, int seeds,
                                         int max_depth, std::uint64_t seed, const CriterionThresholds& th) {
  if (seeds < 1 || max_depth < 1) throw std::invalid_argument("min_depth_scan: seeds and max_depth must be positive");
  std::vector<DepthScanRow> out;
  for (std::size_t n : sizes) {
    auto fraction = [&](int d) {
      int pass = 0;
      for (int k = 0; k < seeds; ++k) {
        const auto inst_seed = derive_seed(seed, "scan", n * 1000003ULL + static_cast<std::uint64_t>(d) * 1009 + k);
        if (criterion1(criterion_instance(g, c, n, d, inst_seed), th, inst_seed).overall) ++pass;
      }
      return static_cast<double>(pass) / seeds;
    };
    DepthScanRow row{g, c, n};
    double top = fraction(max_depth);
    if (top > 0.5) {
      int lo = 0, hi = max_depth;  // fails at lo (or lo == 0), passes at hi
      double at_hi = top;
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        const double f = fraction(mid);
        if (f > 0.5) {
          hi = mid;
          at_hi = f;
        } else {
          lo = mid;
        }
      }
      row.min_depth = hi;
      row.pass_fraction = at_hi;
      if (g == Generator::measurement_driven) {
        const StaircaseParams p{hi, 1, 1};
        const auto fs = c == Connectivity::all_to_all
                            ? build_staircase_all_to_all(n, p, seed)
                            : build_staircase(system_grid_layout(grid_side(n), grid_side(n)), p, seed);
        row.cx_depth = depth_and_counts(fs.circuit).depth;
      } else {
        row.cx_depth = static_cast<std::size_t>(hi);
      }
    } else {
      row.pass_fraction = top;
    }
    out.push_back(row);
  }
  return out;
}

std::string to_string(Generator g) { return g == Generator::ancilla_free ? "ancilla_free" : "measurement_driven"; }
std::string to_string(Connectivity c) { return c == Connectivity::grid ? "grid" : "all_to_all"; }

}  // namespace mdiqp
