#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "dense_oracle.hpp"
#include "mdiqp/rng.hpp"
#include "mdiqp/staircase.hpp"

using namespace mdiqp;
using std::numbers::pi;

namespace {

// `layers` repetitions of the nearest-neighbour ladder on n system and n-1
// auxiliary qubits, followed by one X measurement of every auxiliary.
DynamicCircuit cx_ladder(std::size_t n, int layers) {
  DynamicCircuit c;
  c.n_system = n;
  c.n_aux = n - 1;
  for (int l = 0; l < layers; ++l) {
    for (std::size_t i = 0; i + 1 < n; ++i) c.ops.push_back(Instruction::cx(i, n + i));
    for (std::size_t i = 0; i + 1 < n; ++i) c.ops.push_back(Instruction::cx(n + i, i + 1));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) c.ops.push_back(Instruction::measure_x(n + i, c.n_slots++));
  return c;
}

FanoutStaircase wrap(DynamicCircuit c) {
  FanoutStaircase fs;
  fs.system_map = system_map(c);
  fs.conjugation = inverse_gf2(fs.system_map).transpose();
  fs.transfers = all_transfer_matrices(c);
  fs.circuit = std::move(c);
  return fs;
}

oracle::State random_state(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  oracle::State s(std::size_t{1} << n);
  for (auto& a : s) a = {g(rng), g(rng)};
  return s;
}

BitVec frame_of(const std::vector<TransferMatrix>& ts, std::size_t n, const BitVec& outcomes) {
  BitVec z(n, 0);
  for (const auto& t : ts) {
    BitVec m(t.slots.size());
    for (std::size_t c = 0; c < m.size(); ++c) m[c] = outcomes[t.slots[c]];
    auto part = mat_vec_gf2(t.t, m);
    for (std::size_t i = 0; i < n; ++i) z[i] ^= part[i];
  }
  return z;
}

// Dense check: every outcome bit's correction equals the Z string read from
// the transfer matrices, and every branch has equal weight.
void check_transfer_against_dense(DynamicCircuit c, std::uint64_t seed) {
  for (std::size_t a = 0; a < c.n_aux; ++a) c.ops.push_back(Instruction::reset_aux(c.n_system + a));
  auto rng = make_rng(seed);
  const auto ts = all_transfer_matrices(c);
  const auto psi = oracle::embed(random_state(c.n_system, rng), c.n_qubits());
  BitVec zero(c.n_slots, 0);
  const auto base = oracle::restrict_system(oracle::run(c, psi, zero), c.n_system);
  for (std::size_t k = 0; k < c.n_slots; ++k) {
    BitVec m = zero;
    m[k] = 1;
    auto branch = oracle::run(c, psi, m);
    auto sys = oracle::restrict_system(branch, c.n_system);
    CHECK(oracle::norm2(sys) == doctest::Approx(oracle::norm2(branch)).epsilon(1e-12));
    CHECK(oracle::norm2(sys) == doctest::Approx(oracle::norm2(base)).epsilon(1e-10));
    auto z = frame_of(ts, c.n_system, m);
    auto corrected = base;
    for (std::size_t i = 0; i < c.n_system; ++i)
      if (z[i]) oracle::apply_z(corrected, i);
    CHECK(oracle::fidelity(sys, corrected) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

std::vector<std::vector<double>> random_angles(std::size_t layers, std::size_t n, std::mt19937_64& rng) {
  std::vector<std::vector<double>> r(layers, std::vector<double>(n));
  for (auto& l : r)
    for (auto& a : l) a = 2 * pi * uniform01(rng);
  return r;
}

// |H^n psi_{A,theta}>|^2 straight from the phase-state formula.
std::vector<double> iqp_distribution(const IqpSpec& spec) {
  const std::size_t n = spec.n(), dim = std::size_t{1} << n;
  oracle::State s(dim);
  for (std::size_t x = 0; x < dim; ++x) {
    double phase = 0;
    for (std::size_t r = 0; r < spec.s(); ++r) {
      int parity = 0;
      for (std::size_t j = 0; j < n; ++j) parity ^= spec.A.get(r, j) & (x >> j & 1);
      phase += spec.theta[r] * (parity ? -1.0 : 1.0);
    }
    s[x] = std::polar(1.0 / std::sqrt(double(dim)), phase);
  }
  for (std::size_t q = 0; q < n; ++q) oracle::apply_h(s, q);
  std::vector<double> p(dim);
  for (std::size_t x = 0; x < dim; ++x) p[x] = std::norm(s[x]);
  return p;
}

}  // namespace

TEST_CASE("one-layer ladder transfer matrix") {
  auto c = cx_ladder(4, 1);
  auto t = transfer_matrix(c, 0);
  CHECK(t.t == BitMatrix::from_rows({"111", "011", "001", "000"}));
  CHECK(t.slots == std::vector<std::size_t>{0, 1, 2});
  auto counts = depth_and_counts(c);
  CHECK(counts.depth == 2);
  CHECK(counts.cx == 6);
  CHECK(counts.measurements == 3);
  check_transfer_against_dense(c, 1);
  CHECK_THROWS(transfer_matrix(c, 1));
}

TEST_CASE("two-layer ladder transfer matrix") {
  for (std::size_t n = 3; n <= 12; ++n) {
    auto t = transfer_matrix(cx_ladder(n, 2), 0).t;
    // 1-based system i, auxiliary j
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j < n; ++j) {
        const bool expect = i < j && (j - i) % 3 != 0;
        CHECK_MESSAGE(t.get(i - 1, j - 1) == expect, "n=" << n << " i=" << i << " j=" << j);
      }
  }
  for (std::size_t n = 2; n <= 5; ++n) check_transfer_against_dense(cx_ladder(n, 2), n);
}

TEST_CASE("empty circuit counts") {
  auto counts = depth_and_counts(DynamicCircuit{});
  CHECK(counts.depth == 0);
  CHECK(counts.cx == 0);
  CHECK(counts.measurements == 0);
}

TEST_CASE("two-site staircase is the bare ladder") {
  auto fs = build_staircase_all_to_all(2, {1, 1, 1}, 4);
  CHECK(fs.circuit.n_aux == 1);
  CHECK(depth_and_counts(fs.circuit).cx == 4);
  CHECK(count_rounds(fs.circuit) == 2);
  CHECK(fs.transfers.size() == 2);
  CHECK(rank_gf2(fs.system_map) == 2);
  auto g = system_grid_layout(2, 1);  // 4-site row: S A S A
  auto fg = build_staircase(g, {1, 1, 1}, 4);
  CHECK(fg.circuit.n_system == 2);
  CHECK(depth_and_counts(fg.circuit).cx == 4);
}

TEST_CASE("staircase parameter validation") {
  CHECK_THROWS(build_staircase_all_to_all(1, {1, 1, 1}, 0));
  CHECK_THROWS(build_staircase_all_to_all(4, {0, 1, 1}, 0));
  CHECK_THROWS(build_staircase_all_to_all(4, {1, 0, 1}, 0));
}

TEST_CASE("staircase transfer matrices agree with dense propagation") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 2 + seed % 3;
    auto fs = build_staircase_all_to_all(n, {1 + int(seed % 2), 1, 1 + int(seed % 2)}, seed);
    CHECK(fs.circuit.n_qubits() <= 7);
    check_transfer_against_dense(fs.circuit, seed);
  }
  auto fs = build_staircase(system_grid_layout(2, 2), {1, 1, 1}, 21);
  check_transfer_against_dense(fs.circuit, 21);
}

TEST_CASE("transfer matrices are linear") {
  auto rng = make_rng(99);
  auto fs = build_staircase(system_grid_layout(4, 4), {2, 1, 1}, 5);
  for (const auto& t : fs.transfers) {
    CHECK(t.t.rows() == 16);
    CHECK(t.t.cols() == 15);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto& t = fs.transfers[trial % fs.transfers.size()];
    BitVec a(t.t.cols()), b(t.t.cols()), ab(t.t.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng() & 1;
      b[i] = rng() & 1;
      ab[i] = a[i] ^ b[i];
    }
    auto za = mat_vec_gf2(t.t, a), zb = mat_vec_gf2(t.t, b), zab = mat_vec_gf2(t.t, ab);
    for (std::size_t i = 0; i < za.size(); ++i) CHECK(zab[i] == (za[i] ^ zb[i]));
  }
}

TEST_CASE("staircase depth and gate count") {
  for (int D = 1; D <= 3; ++D) {
    auto fs = build_staircase(system_grid_layout(4, 4), {D, 1, 1}, 7 + D);
    auto counts = depth_and_counts(fs.circuit);
    CHECK(count_rounds(fs.circuit) == std::size_t(2 * D));
    CHECK(counts.depth <= std::size_t(4 * D * 2));
    CHECK(counts.depth >= std::size_t(4 * D));
    CHECK(counts.measurements == std::size_t(2 * D * 15));
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto fs = build_staircase(system_grid_layout(20, 20), {3, 1, 1}, seed);
    CHECK(depth_and_counts(fs.circuit).cx <= 8 * 3 * 400);
    CHECK(rank_gf2(fs.system_map) == 400);
  }
}

TEST_CASE("grid staircases only couple lattice neighbours") {
  auto g = system_grid_layout(3, 3);
  auto fs = build_staircase(g, {2, 1, 1}, 3);
  std::vector<std::size_t> site_of_qubit;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.role(i) == Role::system) site_of_qubit.push_back(i);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.role(i) == Role::auxiliary) site_of_qubit.push_back(i);
  for (const auto& ins : fs.circuit.ops)
    if (ins.op == OpCode::cx) CHECK(adjacent(g.site(site_of_qubit[ins.q0]), g.site(site_of_qubit[ins.q1])));
}

TEST_CASE("feed-forward update") {
  BitMatrix t = BitMatrix::identity(3);
  std::vector<double> a{0.1, 3 * pi / 2, 1.0};
  CHECK(feedforward_update(a, t, {0, 0, 0}) == a);
  auto u = feedforward_update(a, t, {0, 1, 0});
  CHECK(u[1] == doctest::Approx(0.0));
  CHECK(u[0] == a[0]);
  CHECK(canonical_angle(-pi / 2) == doctest::Approx(3 * pi / 2));
  CHECK(canonical_angle(2 * pi) == 0.0);
}

TEST_CASE("effective iqp without staircases") {
  auto spec = effective_iqp(std::vector<BitMatrix>{}, {{0.1, 0.2, 0.3}});
  CHECK(spec.A == BitMatrix::identity(3));
  CHECK(spec.theta == std::vector<double>{0.1, 0.2, 0.3});
}

TEST_CASE("effective iqp rows for a ladder") {
  auto fs = wrap(cx_ladder(3, 1));
  std::vector<std::vector<double>> rot{{0.3, 0.5, 0.7}, {0, 0, 0}};
  auto spec = effective_iqp(std::vector<FanoutStaircase>{fs}, rot);
  // The ladder adds each input to its right neighbour, so inputs are prefix
  // parities of the outputs.
  CHECK(spec.s() == 6);
  CHECK(spec.A == BitMatrix::from_rows({"100", "110", "111", "100", "010", "001"}));
  auto dist = iqp_distribution(spec);
  auto c = measurement_driven_circuit({fs}, rot);
  auto out = oracle::restrict_system(oracle::run(c, oracle::embed({1.0}, c.n_qubits()), {0, 0}), 3);
  for (std::size_t x = 0; x < 8; ++x) CHECK(std::norm(out[x]) / oracle::norm2(out) == doctest::Approx(dist[x]).epsilon(1e-12));
}

TEST_CASE("outcome independence and iqp equivalence") {
  auto rng = make_rng(2024);
  for (int cfg = 0; cfg < 12; ++cfg) {
    const std::size_t n = 2 + cfg % 3;
    const std::size_t L = 1 + cfg % 2;
    std::vector<FanoutStaircase> stairs;
    for (std::size_t l = 0; l < L; ++l) stairs.push_back(build_staircase_all_to_all(n, {1, 1, 1}, rng()));
    auto rot = random_angles(L + 1, n, rng);
    auto c = measurement_driven_circuit(stairs, rot);
    auto spec = effective_iqp(stairs, rot);
    auto dist = iqp_distribution(spec);
    auto psi = oracle::embed({1.0}, c.n_qubits());
    BitVec zero(c.n_slots, 0);
    auto base = oracle::restrict_system(oracle::run(c, psi, zero), n);
    for (int trial = 0; trial < 16; ++trial) {
      BitVec m(c.n_slots);
      for (auto& b : m) b = rng() & 1;
      auto out = oracle::run(c, psi, m);
      auto sys = oracle::restrict_system(out, n);
      CHECK(oracle::fidelity(sys, base) >= 1 - 1e-10);
      const double w = oracle::norm2(sys);
      for (std::size_t x = 0; x < sys.size(); ++x) CHECK(std::abs(std::norm(sys[x]) / w - dist[x]) < 1e-10);
    }
  }
}

TEST_CASE("k-local synthesis reproduces the many-body rotation") {
  for (std::size_t r = 1; r <= 6; ++r)
    for (std::size_t k = 1; k <= 3; ++k)
      for (long long ell = 0; ell < (1LL << k); ++ell) {
        auto terms = synthesize_klocal(r, ell, k);
        const double theta = ell * pi / double(1 << k);
        std::complex<double> ref;
        double worst = 0;
        for (std::size_t x = 0; x < (std::size_t{1} << r); ++x) {
          double phase = 0;
          for (const auto& t : terms) {
            CHECK(t.support.size() <= k);
            int parity = 0;
            for (auto q : t.support) parity ^= int(x >> q & 1);
            phase += t.angle * (parity ? -1.0 : 1.0);
          }
          const double target = theta * ((std::popcount(x) % 2) ? -1.0 : 1.0);
          auto ratio = std::polar(1.0, phase - target);
          if (x == 0) ref = ratio;
          worst = std::max(worst, std::abs(ratio - ref));
        }
        CHECK_MESSAGE(worst < 1e-10, "r=" << r << " k=" << k << " ell=" << ell);
      }
}

TEST_CASE("k-local synthesis worked angles") {
  auto single = synthesize_klocal(2, 3, 3);
  REQUIRE(single.size() == 1);
  CHECK(single[0].support.size() == 2);
  CHECK(single[0].angle == doctest::Approx(3 * pi / 8));

  auto terms = synthesize_klocal(4, 1, 3);
  CHECK(terms.size() == 4 + 6 + 4);
  for (const auto& t : terms) {
    const double expect = t.support.size() == 1 ? pi / 8 : t.support.size() == 2 ? -pi / 8 : pi / 8;
    CHECK(t.angle == doctest::Approx(expect));
  }
  CHECK_THROWS(synthesize_klocal(3, 8, 3));
}

TEST_CASE("circuit and spec json round trip") {
  auto fs = build_staircase_all_to_all(4, {1, 1, 1}, 3);
  auto rng = make_rng(1);
  auto c = measurement_driven_circuit({fs}, random_angles(2, 4, rng));
  auto back = circuit_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.ops.size() == c.ops.size());
  auto spec = effective_iqp(std::vector<FanoutStaircase>{fs}, random_angles(2, 4, rng));
  auto sb = iqp_from_json(to_json(spec));
  CHECK(sb.A == spec.A);
  CHECK(sb.theta == spec.theta);
  CHECK_THROWS(circuit_from_json(R"({"n_system":1,"n_aux":0,"n_slots":0,"ops":[{"op":"cx","qubits":[0,3]}]})"));
}

TEST_CASE("grid routing preserves the cx network") {
  const int w = 4, h = 3;
  const std::size_t n = 12;
  std::set<std::pair<std::size_t, std::size_t>> nn;
  for (auto [a, b] : grid_edges(w, h)) {
    nn.insert({a, b});
    nn.insert({b, a});
  }
  // Corner to corner: distance 5 costs 16 gates.
  const auto corner = route_on_grid({{0, 11}}, w, h);
  CHECK(corner.size() == 16);
  CHECK(apply_cx_gates(n, corner) == apply_cx_gates(n, {{0, 11}}));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto gates = random_nn_cx_network(n, complete_edges(n), 8, seed);
    const auto routed = route_on_grid(gates, w, h);
    CHECK(apply_cx_gates(n, routed) == apply_cx_gates(n, gates));
    for (const auto& g : routed) CHECK(nn.count({g.control, g.target}) == 1);
  }
  const CxGateList local{{0, 1}, {5, 1}};
  CHECK(route_on_grid(local, w, h) == local);
  CHECK_THROWS(route_on_grid({{0, 12}}, w, h));
}
