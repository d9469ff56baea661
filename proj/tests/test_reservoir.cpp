#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "mdiqp/reservoir.hpp"
#include "mdiqp/rng.hpp"

using namespace mdiqp;
using std::numbers::pi;
using Eigen::MatrixXcd;

namespace {

const cplx I{0, 1};

MatrixXcd pauli(char p) {
  MatrixXcd m(2, 2);
  switch (p) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, -I, I, 0; break;
    case 'z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1;
  }
  return m;
}

// Dense Pauli string; letters[q] acts on qubit q (bit q of the index).
MatrixXcd dense_string(const std::string& letters) {
  MatrixXcd m = MatrixXcd::Identity(1, 1);
  for (char c : letters) m = Eigen::kroneckerProduct(pauli(c), m).eval();
  return m;
}

std::string letters_on(std::size_t n, std::initializer_list<std::size_t> qs, char p) {
  std::string s(n, 'i');
  for (auto q : qs) s[q] = p;
  return s;
}

MatrixXcd dense_ssh(const SshSpec& s) {
  const std::size_t dim = std::size_t{1} << s.n;
  MatrixXcd h = MatrixXcd::Zero(dim, dim);
  for (std::size_t i = 0; i + 1 < s.n; ++i) {
    const double g = i % 2 == 0 ? s.J : s.Jp;
    for (char mu : {'x', 'y', 'z'}) h += (mu == 'z' ? s.delta : 1.0) * g * dense_string(letters_on(s.n, {i, i + 1}, mu));
  }
  return h;
}

Eigen::VectorXcd vec(const StateVector& s) {
  Eigen::VectorXcd v(s.dim());
  for (std::size_t k = 0; k < s.dim(); ++k) v(k) = s[k];
  return v;
}

StateVector random_state(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> a(std::size_t{1} << n);
  for (auto& v : a) v = {g(rng), g(rng)};
  auto s = StateVector::from_amplitudes(std::move(a));
  s.normalize();
  return s;
}

}  // namespace

TEST_CASE("SSH Hamiltonian is Hermitian and matches the dense operator") {
  const SshSpec s{6, 0.7, 1.3, 2.5};
  const auto h = dense_ssh(s);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto v = random_state(6, seed), w = random_state(6, seed + 10);
    std::vector<cplx> hv, hw;
    ssh_apply(s, v.amplitudes(), hv);
    ssh_apply(s, w.amplitudes(), hw);
    cplx vhw = 0, whv = 0;
    for (std::size_t k = 0; k < hv.size(); ++k) {
      vhw += std::conj(v[k]) * hw[k];
      whv += std::conj(w[k]) * hv[k];
    }
    CHECK(std::abs(vhw - std::conj(whv)) < 1e-10);
    const Eigen::VectorXcd ref = h * vec(v);
    for (std::size_t k = 0; k < hv.size(); ++k) CHECK(std::abs(hv[k] - ref(k)) < 1e-12);
  }
  CHECK_THROWS(validate(SshSpec{5, 1, 1, 1}));
  CHECK_THROWS_AS(validate(SshSpec{14, 1, 1, 1}), ResourceError);
}

TEST_CASE("decoupled dimers") {
  // Two-site block J (XX + YY + ZZ): its minimum from a dense 4 x 4 solve.
  const SshSpec dimer{2, 1.0, 0.0, 1.0};
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(dense_ssh(dimer));
  const double e2 = es.eigenvalues()(0);
  CHECK(e2 == doctest::Approx(-3.0));
  for (std::size_t n : {4u, 6u, 8u}) {
    const auto sp = ssh_lowest({n, 1.0, 0.0, 1.0}, 1);
    CHECK(sp.energies[0] == doctest::Approx(n / 2 * e2).epsilon(1e-10));
    CHECK_FALSE(sp.degenerate_cut);
  }
  // Next level: one dimer in its triplet, six-fold degenerate.
  CHECK(ssh_lowest({4, 1.0, 0.0, 1.0}, 3).degenerate_cut);
  CHECK_THROWS(ssh_lowest({4, 1.0, 0.0, 1.0}, 17));
}

TEST_CASE("Lanczos levels match dense diagonalization") {
  for (auto p : {Phase::trivial, Phase::topological, Phase::symmetry_broken}) {
    const auto s = phase_parameters(p, 4);
    const auto h = dense_ssh(s);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    const auto sp = ssh_lowest(s, 8);
    REQUIRE(sp.vectors.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(sp.energies[k] == doctest::Approx(es.eigenvalues()(k)).epsilon(1e-9));
      const auto v = vec(sp.vectors[k]);
      CHECK((h * v - sp.energies[k] * v).norm() < 1e-7);
      CHECK(std::abs(v.norm() - 1) < 1e-12);
      for (std::size_t j = 0; j < k; ++j) CHECK(std::abs(vec(sp.vectors[j]).dot(v)) < 1e-8);
    }
  }
  // Larger chain against dense energies.
  const auto s = phase_parameters(Phase::topological, 8);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(dense_ssh(s), Eigen::EigenvaluesOnly);
  const auto sp = ssh_lowest(s, 20);
  for (std::size_t k = 0; k < 20; ++k) CHECK(sp.energies[k] == doctest::Approx(es.eigenvalues()(k)).epsilon(1e-8));
  const auto picks = sample_eigenstates(sp, 50, 3);
  CHECK(picks.size() == 50);
}

TEST_CASE("perturbation") {
  const auto s = random_state(5, 1);
  CHECK(fidelity(perturb(s, 0.0, 4), s) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS(perturb(s, -1.0, 4));
  const auto a = perturb(s, 0.2, 9), b = perturb(s, 0.2, 9);
  CHECK(a.amplitudes() == b.amplitudes());
  CHECK(std::abs(a.norm() - 1) < 1e-12);

  const auto base = StateVector::plus(12);
  double mean = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) mean += fidelity(perturb(base, 0.03, seed), base) / 100;
  CHECK(mean >= 0.9);

  // Single qubit: R_x(t) on |0> leaves population cos^2(t/2) in |0>.
  const auto one = perturb(StateVector(1), 0.5, 3);
  CHECK(std::norm(one[0]) < 1.0);
}

TEST_CASE("Pauli rotations match dense exponentials") {
  const std::size_t n = 4;
  auto rng = make_rng(5);
  for (int t = 0; t < 20; ++t) {
    std::string letters(n, 'i');
    std::uint64_t xm = 0, ym = 0, zm = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const int c = static_cast<int>(rng() % 4);
      letters[q] = "ixyz"[c];
      if (c == 1) xm |= 1u << q;
      if (c == 2) ym |= 1u << q;
      if (c == 3) zm |= 1u << q;
    }
    const double angle = 3 * uniform01(rng);
    auto s = random_state(n, t);
    const Eigen::VectorXcd ref = (I * angle * dense_string(letters)).exp() * vec(s);
    apply_pauli_rotation(s, xm, ym, zm, angle);
    CHECK((vec(s) - ref).norm() < 1e-10);
  }
}

TEST_CASE("multibody step against the dense matrix exponential") {
  const std::size_t n = 5;
  const BitMatrix A = BitMatrix::from_rows({"10110", "01101", "11111"});
  auto r = multibody_reservoir(A, "xy", 1.0, 1);
  // Single heavy x row with c = pi/4, every other coefficient zero.
  for (auto& c : r.coeff)
    for (auto& v : c) v = 0;
  r.coeff[0][1] = pi / 4;
  auto s = random_state(n, 2);
  Eigen::VectorXcd ref = (I * (pi / 4) * dense_string("ixxix")).exp() * vec(s);
  floquet_step(r, s);
  CHECK((vec(s) - ref).norm() < 1e-10);

  // Generic coefficients: exp(x sector) first, then exp(y sector).
  r = multibody_reservoir(A, "xy", 0.7, 3);
  MatrixXcd hx = MatrixXcd::Zero(32, 32), hy = hx;
  for (std::size_t k = 0; k < A.rows(); ++k) {
    std::string lx(n, 'i'), ly(n, 'i');
    for (std::size_t q = 0; q < n; ++q)
      if (A.get(k, q)) lx[q] = 'x', ly[q] = 'y';
    hx += r.coeff[0][k] * dense_string(lx);
    hy += r.coeff[1][k] * dense_string(ly);
  }
  s = random_state(n, 4);
  ref = (I * 0.7 * hy).exp() * ((I * 0.7 * hx).exp() * vec(s));
  floquet_step(r, s);
  CHECK((vec(s) - ref).norm() < 1e-10);

  // Zero couplings act as the identity.
  for (auto& c : r.coeff)
    for (auto& v : c) v = 0;
  auto z = random_state(n, 5);
  const auto before = z;
  floquet_step(r, z);
  CHECK(fidelity(z, before) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("strings within a sector commute") {
  const BitMatrix A = BitMatrix::from_rows({"110100", "011011", "101110", "000111"});
  auto r = multibody_reservoir(A, "y", 0.9, 6);
  auto a = random_state(6, 7), b = a;
  floquet_step(r, a);
  for (std::size_t k = A.rows(); k-- > 0;) apply_pauli_rotation(b, 0, A.row(k)[0], 0, 0.9 * r.coeff[0][k]);
  CHECK(fidelity(a, b) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("local families match ordered dense term products") {
  const std::size_t n = 4;
  const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  for (auto f : {Family::heisenberg, Family::tfi, Family::xy}) {
    const auto r = local_reservoir(f, n, edges, 0.3, 8);
    MatrixXcd u = MatrixXcd::Identity(16, 16);
    auto term = [&](const std::string& l, double c) { u = ((I * 0.3 * c) * dense_string(l)).exp() * u; };
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto [a, b] = edges[e];
      if (f == Family::heisenberg)
        for (int m = 0; m < 3; ++m) term(letters_on(n, {a, b}, "xyz"[m]), r.edge_coupling[e][m]);
      if (f == Family::tfi) term(letters_on(n, {a, b}, 'z'), r.edge_coupling[e][0]);
      if (f == Family::xy)
        for (int m = 0; m < 2; ++m) term(letters_on(n, {a, b}, "xy"[m]), r.edge_coupling[e][m]);
    }
    if (f != Family::heisenberg)
      for (std::size_t q = 0; q < n; ++q) term(letters_on(n, {q}, 'x'), r.field[q]);
    auto s = random_state(n, 9);
    const Eigen::VectorXcd ref = u * vec(s);
    floquet_step(r, s);
    CHECK((vec(s) - ref).norm() < 1e-10);
  }
  CHECK_THROWS(local_reservoir(Family::tfi, 3, {{0, 3}}, 0.1, 1));
  CHECK(family_from_string("multibody-xy") == Family::multibody);
  CHECK_THROWS(family_from_string("ising"));
}

TEST_CASE("Floquet steps preserve the norm") {
  auto mb = measurement_reservoir(3, 2, 2, true, 0.4, 1);
  auto tfi = local_reservoir(Family::tfi, 6, grid_edges(3, 2), 0.4, 2);
  auto heis = local_reservoir(Family::heisenberg, 6, grid_edges(3, 2), 0.4, 3);
  auto noff = mb;
  noff.feed_forward = false;
  auto rng = make_rng(4);
  for (auto* r : {&mb, &tfi, &heis, &noff}) {
    auto s = random_state(6, 5);
    for (int c = 0; c < 10; ++c) floquet_step(*r, s, &rng);
    CHECK(std::abs(s.norm() - 1) < 1e-10);
  }
  StateVector fresh(6);
  CHECK_THROWS(floquet_step(noff, fresh, nullptr));
  auto wrong = StateVector(5);
  CHECK_THROWS(floquet_step(mb, wrong));
}

TEST_CASE("measurement reservoir architecture") {
  const auto r = measurement_reservoir(4, 2, 2, true, 0.05, 11);
  CHECK(r.n == 8);
  CHECK(r.A.rows() == 16);
  CHECK(rank_gf2(r.A) == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(r.A.row_weight(8 + i) == 1);
  CHECK(r.coeff.size() == 2);
  CHECK(r.byproducts.cols() == 8);
  CHECK(rank_gf2(r.byproducts) == 8);
}

TEST_CASE("feature extraction") {
  const auto zero = output_distribution(StateVector(4));
  for (double f : extract_features(zero, 4, 100, 0.0, 1)) CHECK(f == 1.0);
  const double eps = 0.05;
  double mean = 0;
  for (double f : extract_features(zero, 4, 200000, eps, 2)) mean += f / 4;
  CHECK(std::abs(mean - (1 - 2 * eps)) < 4 * 2 * std::sqrt(eps * (1 - eps) / 800000));
  const std::uint64_t shots = 8192;
  for (double f : extract_features(output_distribution(StateVector::plus(4)), 4, shots, 0.0, 3))
    CHECK(std::abs(f) <= 3 / std::sqrt(double(shots)));
  CHECK_THROWS(extract_features(zero, 4, 0, 0.0, 1));

  // Unbiased with binomial spread: mean over repetitions approaches the exact
  // expectation, and the per-run variance matches (1 - m^2) / shots.
  const auto d = output_distribution(random_state(4, 6));
  const auto exact = exact_z_expectations(d, 4);
  const int reps = 2000;
  const std::uint64_t s = 1024;
  std::vector<double> acc(4, 0.0), sq(4, 0.0);
  for (int rep = 0; rep < reps; ++rep) {
    const auto f = extract_features(d, 4, s, 0.0, 100 + rep);
    for (std::size_t q = 0; q < 4; ++q) {
      acc[q] += f[q] / reps;
      sq[q] += (f[q] - exact[q]) * (f[q] - exact[q]) / reps;
    }
  }
  for (std::size_t q = 0; q < 4; ++q) {
    const double var = (1 - exact[q] * exact[q]) / s;
    CHECK(std::abs(acc[q] - exact[q]) <= 4 * std::sqrt(var / reps));
    CHECK(sq[q] / var == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("classifiers") {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  auto rng = make_rng(1);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 60; ++k) {
      x.push_back({10.0 * c + uniform01(rng)});
      y.push_back(c);
    }
  ClassifierParams knn, ridge;
  ridge.kind = Classifier::ridge;
  ridge.ridge_lambda = 1e-6;
  CHECK(train_eval(x, y, knn, 2) == 1.0);
  // One linear feature separates only the outer classes for a linear
  // one-vs-rest readout; two features make all three separable.
  std::vector<std::vector<double>> x2;
  for (std::size_t i = 0; i < x.size(); ++i) x2.push_back({x[i][0], y[i] == 1 ? 1.0 : 0.0});
  CHECK(train_eval(x2, y, ridge, 2) == 1.0);

  std::vector<int> one(y.size(), 0);
  CHECK_THROWS(train_eval(x, one, knn, 1));

  // Label-shuffled random features stay near chance.
  std::vector<std::vector<double>> noise;
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < 300; ++i) noise.push_back({g(rng), g(rng), g(rng), g(rng)});
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) labels.push_back(i % 3);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double a = train_eval(noise, labels, knn, seed), b = train_eval(noise, labels, ridge, seed);
    CHECK(a >= 0.2);
    CHECK(a <= 0.47);
    CHECK(b >= 0.2);
    CHECK(b <= 0.47);
  }
}

TEST_CASE("feature tables") {
  DatasetConfig cfg;
  cfg.n = 4;
  cfg.levels = 6;
  cfg.per_class = 5;
  cfg.cycles = 3;
  cfg.shots = 256;
  cfg.trajectories = 4;
  const auto inputs = ssh_dataset(cfg, 1);
  REQUIRE(inputs.size() == 3);
  auto r = measurement_reservoir(2, 2, 2, true, 0.1, 2);
  const auto t = build_features(r, inputs, cfg, 3);
  CHECK(t.data.size() == 15);
  CHECK(t.labels[14] == 2);
  for (const auto& s : t.data)
    for (const auto& c : s)
      for (double f : c) CHECK(std::abs(f) <= 1.0);
  CHECK(cycle_features(t, 3).size() == 15);
  CHECK_THROWS(cycle_features(t, 4));
  const auto again = build_features(r, inputs, cfg, 3);
  CHECK(again.data == t.data);

  std::ostringstream os;
  write_features_csv(os, t);
  CHECK(os.str().rfind("sample,cycle,f1,f2,f3,f4,label\n0,1,", 0) == 0);
  CHECK(os.str().find(",symmetry_broken\n") != std::string::npos);

  r.feed_forward = false;
  const auto mixed = build_features(r, inputs, cfg, 3);
  CHECK(mixed.data != t.data);
}

TEST_CASE("encoded inputs and the readout gap") {
  const std::vector<std::size_t> S{0, 4, 8};
  for (int l = 0; l < 2; ++l) {
    const auto psi = encoded_input(9, S, l);
    CHECK(std::abs(psi.norm() - 1) < 1e-12);
    double o = 0;
    for (std::size_t x = 0; x < psi.dim(); ++x) o += ((x & 1) ^ (x >> 4 & 1) ^ (x >> 8 & 1) ? -1.0 : 1.0) * std::norm(psi[x]);
    CHECK(std::abs(o) < 1e-12);
  }
  CHECK_THROWS(encoded_input(9, {0, 0, 1}, 0));

  for (auto g : {Graph::path, Graph::grid}) {
    const auto r = theorem2_demo(9, 0.0, g, 1);
    CHECK(std::abs(r.gap_measurement_driven - 2.0) < 1e-10);
  }
  const auto path = theorem2_demo(9, 0.0, Graph::path, 1);
  CHECK(path.triplet == S);
  CHECK(path.min_distance == 4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = theorem2_demo(9, 0.01, Graph::path, seed);
    CHECK(r.gap_measurement_driven >= 1.9);
    CHECK(r.gap_local <= r.gap_measurement_driven / 2);
  }
  CHECK_THROWS(theorem2_demo(2, 0.0, Graph::path, 1));
}
