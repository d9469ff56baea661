#include "mdiqp/reservoir.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "mdiqp/grid.hpp"
#include "mdiqp/rng.hpp"
#include "mdiqp/staircase.hpp"

namespace mdiqp {

namespace {

constexpr cplx kI{0.0, 1.0};

using Bonds = std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>>;

Bonds ssh_bonds(const SshSpec& s) {
  Bonds b;
  for (std::size_t i = 0; i + 1 < s.n; ++i) b.push_back({{i, i + 1}, i % 2 == 0 ? s.J : s.Jp});
  return b;
}

template <class T>
void ssh_apply_impl(const SshSpec& s, const std::vector<T>& x, std::vector<T>& y) {
  const std::size_t dim = x.size();
  y.assign(dim, T{});
  for (auto [bond, g] : ssh_bonds(s)) {
    const std::size_t ma = std::size_t{1} << bond.first, mb = std::size_t{1} << bond.second;
    for (std::size_t k = 0; k < dim; ++k) {
      const bool a = k & ma, b = k & mb;
      if (a == b) {
        y[k] += s.delta * g * x[k];
      } else {
        y[k] -= s.delta * g * x[k];
        // XX + YY swaps the antiparallel pair with amplitude 2.
        y[k] += 2.0 * g * x[k ^ ma ^ mb];
      }
    }
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}

void orthogonalize(std::vector<double>& w, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) axpy(-dot(q, w), q, w);
}

std::uint64_t row_mask(const BitMatrix& a, std::size_t r) {
  if (a.cols() > 64) throw std::invalid_argument("reservoir rows are limited to 64 qubits");
  return a.cols() == 0 ? 0 : a.row(r)[0];
}

Mat2 rx(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  return {cplx{c, 0}, cplx{0, -s}, cplx{0, -s}, cplx{c, 0}};
}
Mat2 rzh(double t) { return {std::polar(1.0, -t / 2), 0.0, 0.0, std::polar(1.0, t / 2)}; }
const Mat2 kS{1.0, 0.0, 0.0, kI};
const Mat2 kSdg{1.0, 0.0, 0.0, -kI};

void basis_in(StateVector& s, char sector) {
  for (std::size_t q = 0; q < s.qubits(); ++q) {
    if (sector == 'x') s.h(q);
    if (sector == 'y') {
      s.apply(q, kSdg);
      s.h(q);
    }
  }
}

void basis_out(StateVector& s, char sector) {
  for (std::size_t q = 0; q < s.qubits(); ++q) {
    if (sector == 'x') s.h(q);
    if (sector == 'y') {
      s.h(q);
      s.apply(q, kS);
    }
  }
}

// exp(i tau sum_r c_r P_r) for commuting strings of one letter.
void sector_exponential(StateVector& s, char sector, const BitMatrix& A, const std::vector<double>& c, double tau) {
  std::vector<std::uint64_t> rows(A.rows());
  for (std::size_t r = 0; r < A.rows(); ++r) rows[r] = row_mask(A, r);
  basis_in(s, sector);
  auto& a = s.amplitudes();
  for (std::size_t x = 0; x < a.size(); ++x) {
    double phi = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) phi += (std::popcount(x & rows[r]) & 1) ? -c[r] : c[r];
    a[x] *= std::polar(1.0, tau * phi);
  }
  basis_out(s, sector);
}

std::uint64_t random_span_element(const BitMatrix& gens, std::mt19937_64& rng) {
  std::uint64_t u = 0;
  for (std::size_t r = 0; r < gens.rows(); ++r)
    if (rng() & 1) u ^= row_mask(gens, r);
  return u;
}

std::vector<std::vector<std::size_t>> all_distances(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  const std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<std::size_t> q;
    q.push(s);
    d[s][s] = 0;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto v : adj[u])
        if (d[s][v] == inf) {
          d[s][v] = d[s][u] + 1;
          q.push(v);
        }
    }
  }
  return d;
}

double z_string_expectation(const StateVector& s, std::uint64_t mask) {
  double e = 0;
  for (std::size_t x = 0; x < s.dim(); ++x) e += (std::popcount(x & mask) & 1 ? -1.0 : 1.0) * std::norm(s[x]);
  return e;
}

}  // namespace

SshSpec phase_parameters(Phase p, std::size_t n) {
  switch (p) {
    case Phase::trivial: return {n, 1.0, 0.2, 1.0};
    case Phase::topological: return {n, 0.2, 1.0, 1.0};
    case Phase::symmetry_broken: return {n, 0.2, 1.0, 4.0};
  }
  throw std::invalid_argument("unknown phase");
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::trivial: return "trivial";
    case Phase::topological: return "topological";
    case Phase::symmetry_broken: return "symmetry_broken";
  }
  return "?";
}

void validate(const SshSpec& s, std::size_t cap) {
  if (s.n < 2 || s.n % 2) throw std::invalid_argument("SSH chain needs an even number of spins >= 2");
  if (s.n > cap) throw ResourceError("SSH chain exceeds the qubit cap");
}

void ssh_apply(const SshSpec& s, const std::vector<cplx>& x, std::vector<cplx>& y) {
  if (x.size() != (std::size_t{1} << s.n)) throw std::invalid_argument("ssh_apply: dimension mismatch");
  ssh_apply_impl(s, x, y);
}

Spectrum ssh_lowest(const SshSpec& s, std::size_t levels, double tol) {
  validate(s);
  const std::size_t dim = std::size_t{1} << s.n;
  if (levels < 1 || levels > dim) throw std::invalid_argument("ssh_lowest: levels must lie in [1, 2^n]");
  const std::size_t want = std::min(levels + 1, dim);
  auto rng = make_rng(derive_seed(0x55a1, "lanczos", s.n));
  std::normal_distribution<double> g;
  Spectrum sp;
  std::vector<std::vector<double>> locked;
  std::vector<double> energies;
  std::vector<double> w;
  for (std::size_t level = 0; level < want; ++level) {
    const std::size_t room = dim - locked.size();
    const std::size_t m_max = std::min<std::size_t>(room, 400);
    std::vector<double> v(dim);
    for (auto& a : v) a = g(rng);
    orthogonalize(v, locked);
    double nv = std::sqrt(dot(v, v));
    for (auto& a : v) a /= nv;
    std::vector<std::vector<double>> V{v};
    std::vector<double> alpha, beta;
    double theta = 0, resid = 0;
    Eigen::VectorXd ritz;
    for (std::size_t j = 0; j < m_max; ++j) {
      ssh_apply_impl(s, V[j], w);
      ++sp.matvecs;
      alpha.push_back(dot(V[j], w));
      orthogonalize(w, locked);
      orthogonalize(w, V);
      const double b = std::sqrt(dot(w, w));
      const bool last = j + 1 == m_max || b < 1e-12;
      if (last || j % 5 == 4) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), alpha.size());
        Eigen::VectorXd e = Eigen::VectorXd::Zero(std::max<Eigen::Index>(0, d.size() - 1));
        for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = beta[k];
        es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
        theta = es.eigenvalues()(0);
        ritz = es.eigenvectors().col(0);
        resid = std::abs(b * ritz(ritz.size() - 1));
        if (resid < tol || last) break;
      }
      beta.push_back(b);
      for (auto& a : w) a /= b;
      V.push_back(w);
    }
    std::vector<double> y(dim, 0.0);
    for (Eigen::Index k = 0; k < ritz.size(); ++k) axpy(ritz(k), V[k], y);
    orthogonalize(y, locked);
    nv = std::sqrt(dot(y, y));
    for (auto& a : y) a /= nv;
    ssh_apply_impl(s, y, w);
    axpy(-theta, y, w);
    const double true_resid = std::sqrt(dot(w, w));
    if (true_resid > 100 * tol * std::max(1.0, std::abs(theta))) {
      std::ostringstream os;
      os << "ssh_lowest: level " << level << " did not converge after " << V.size() << " Lanczos steps (residual "
         << true_resid << ", estimate " << resid << ")";
      throw std::runtime_error(os.str());
    }
    locked.push_back(std::move(y));
    energies.push_back(theta);
  }
  std::vector<std::size_t> order(want);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return energies[a] < energies[b]; });
  for (std::size_t k = 0; k < levels; ++k) {
    sp.energies.push_back(energies[order[k]]);
    std::vector<cplx> amps(locked[order[k]].begin(), locked[order[k]].end());
    sp.vectors.push_back(StateVector::from_amplitudes(std::move(amps)));
  }
  if (want > levels) sp.degenerate_cut = std::abs(energies[order[levels]] - sp.energies.back()) < 1e-7;
  return sp;
}

std::vector<StateVector> sample_eigenstates(const Spectrum& sp, std::size_t count, std::uint64_t seed) {
  if (sp.vectors.empty()) throw std::invalid_argument("sample_eigenstates: empty spectrum");
  auto rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sp.vectors.size() - 1);
  std::vector<StateVector> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(sp.vectors[pick(rng)]);
  return out;
}

StateVector perturb(const StateVector& s, double sigma, std::uint64_t seed) {
  if (sigma < 0) throw std::invalid_argument("perturb: sigma must be nonnegative");
  StateVector out = s;
  if (sigma == 0) return out;
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  for (std::size_t q = 0; q < s.qubits(); ++q) {
    const double tx = g(rng), tz = g(rng);
    out.apply(q, rzh(tz));
    out.apply(q, rx(tx));
  }
  return out;
}

void apply_pauli_rotation(StateVector& s, std::uint64_t xmask, std::uint64_t ymask, std::uint64_t zmask, double angle) {
  const std::uint64_t flip = xmask | ymask, sign = ymask | zmask;
  static const cplx ipow[4] = {1.0, kI, -1.0, -kI};
  const cplx base = ipow[std::popcount(ymask) % 4];
  const double c = std::cos(angle), sn = std::sin(angle);
  const auto a = s.amplitudes();
  auto& out = s.amplitudes();
  for (std::size_t x = 0; x < a.size(); ++x) {
    const std::size_t y = x ^ flip;
    const cplx ph = (std::popcount(y & sign) & 1) ? -base : base;
    out[x] = c * a[x] + kI * sn * ph * a[y];
  }
}

void apply_pauli_string(StateVector& s, char letter, std::uint64_t support) {
  for (std::size_t q = 0; q < s.qubits(); ++q) {
    if (!(support >> q & 1)) continue;
    switch (letter) {
      case 'x': case 'X': s.x(q); break;
      case 'y': case 'Y': s.y(q); break;
      case 'z': case 'Z': s.z(q); break;
      default: throw std::invalid_argument("Pauli letter must be x, y or z");
    }
  }
}

std::string to_string(Family f) {
  switch (f) {
    case Family::heisenberg: return "heisenberg";
    case Family::tfi: return "tfi";
    case Family::xy: return "xy";
    case Family::multibody: return "multibody-xy";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "heisenberg") return Family::heisenberg;
  if (s == "tfi") return Family::tfi;
  if (s == "xy") return Family::xy;
  if (s == "multibody-xy" || s == "multibody") return Family::multibody;
  throw std::invalid_argument("unknown reservoir family '" + s + "'");
}

ReservoirSpec local_reservoir(Family f, std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                              double tau, std::uint64_t seed, double coupling_variance) {
  if (f == Family::multibody) throw std::invalid_argument("local_reservoir: multibody is not a local family");
  for (auto [a, b] : edges)
    if (a >= n || b >= n || a == b) throw std::invalid_argument("local_reservoir: bad edge");
  ReservoirSpec r;
  r.family = f;
  r.n = n;
  r.tau = tau;
  r.edges = edges;
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(coupling_variance));
  const std::size_t comps = f == Family::heisenberg ? 3 : f == Family::xy ? 2 : 1;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    std::vector<double> c(comps);
    for (auto& v : c) v = g(rng);
    r.edge_coupling.push_back(c);
  }
  if (f != Family::heisenberg)
    for (std::size_t q = 0; q < n; ++q) r.field.push_back(g(rng));
  return r;
}

ReservoirSpec multibody_reservoir(const BitMatrix& A, const std::string& sectors, double tau, std::uint64_t seed,
                                  double coupling_variance) {
  if (sectors.empty() || sectors.find_first_not_of("xyz") != std::string::npos)
    throw std::invalid_argument("sectors must be a nonempty string over x, y, z");
  ReservoirSpec r;
  r.family = Family::multibody;
  r.n = A.cols();
  r.tau = tau;
  r.A = A;
  r.sectors = sectors;
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(coupling_variance));
  for (std::size_t k = 0; k < sectors.size(); ++k) {
    std::vector<double> c(A.rows());
    for (auto& v : c) v = g(rng);
    r.coeff.push_back(c);
  }
  return r;
}

ReservoirSpec measurement_reservoir(int width, int height, int rounds, bool with_identity, double tau,
                                    std::uint64_t seed, double coupling_variance) {
  const auto fs = build_staircase(system_grid_layout(width, height), {rounds, 1, 1}, derive_seed(seed, "reservoir-fs", 0));
  const std::size_t n = fs.conjugation.rows();
  BitMatrix A(with_identity ? 2 * n : n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      A.set(i, j, fs.conjugation.get(i, j));
      if (with_identity) A.set(n + i, j, i == j);
    }
  auto r = multibody_reservoir(A, "xy", tau, derive_seed(seed, "reservoir-coupling", 0), coupling_variance);
  // Outcome frames t map back to logical supports B^T t.
  std::size_t m = 0;
  for (const auto& t : fs.transfers) m += t.t.cols();
  BitMatrix T(n, m);
  std::size_t c0 = 0;
  for (const auto& t : fs.transfers) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < t.t.cols(); ++j) T.set(i, c0 + j, t.t.get(i, j));
    c0 += t.t.cols();
  }
  r.byproducts = mat_mul_gf2(fs.system_map.transpose(), T).transpose();
  return r;
}

void floquet_step(const ReservoirSpec& r, StateVector& s, std::mt19937_64* rng) {
  if (s.qubits() != r.n) throw std::invalid_argument("floquet_step: state size does not match the reservoir");
  const double t = r.tau;
  auto bit = [](std::size_t q) { return std::uint64_t{1} << q; };
  switch (r.family) {
    case Family::multibody:
      for (std::size_t k = 0; k < r.sectors.size(); ++k) {
        sector_exponential(s, r.sectors[k], r.A, r.coeff[k], t);
        if (!r.feed_forward && r.byproducts.rows() > 0) {
          if (!rng) throw std::invalid_argument("floquet_step: an rng is required without feed-forward");
          apply_pauli_string(s, r.sectors[k], random_span_element(r.byproducts, *rng));
        }
      }
      return;
    case Family::heisenberg:
      for (std::size_t e = 0; e < r.edges.size(); ++e) {
        const auto m = bit(r.edges[e].first) | bit(r.edges[e].second);
        apply_pauli_rotation(s, m, 0, 0, t * r.edge_coupling[e][0]);
        apply_pauli_rotation(s, 0, m, 0, t * r.edge_coupling[e][1]);
        apply_pauli_rotation(s, 0, 0, m, t * r.edge_coupling[e][2]);
      }
      return;
    case Family::tfi:
      for (std::size_t e = 0; e < r.edges.size(); ++e)
        apply_pauli_rotation(s, 0, 0, bit(r.edges[e].first) | bit(r.edges[e].second), t * r.edge_coupling[e][0]);
      for (std::size_t q = 0; q < r.n; ++q) apply_pauli_rotation(s, bit(q), 0, 0, t * r.field[q]);
      return;
    case Family::xy:
      for (std::size_t e = 0; e < r.edges.size(); ++e) {
        const auto m = bit(r.edges[e].first) | bit(r.edges[e].second);
        apply_pauli_rotation(s, m, 0, 0, t * r.edge_coupling[e][0]);
        apply_pauli_rotation(s, 0, m, 0, t * r.edge_coupling[e][1]);
      }
      for (std::size_t q = 0; q < r.n; ++q) apply_pauli_rotation(s, bit(q), 0, 0, t * r.field[q]);
      return;
  }
}

std::vector<double> exact_z_expectations(const Distribution& d, std::size_t n) {
  std::vector<double> z(n, 0.0);
  for (std::size_t x = 0; x < d.size(); ++x)
    for (std::size_t q = 0; q < n; ++q) z[q] += (x >> q & 1 ? -1.0 : 1.0) * d[x];
  return z;
}

std::vector<double> extract_features(const Distribution& d, std::size_t n, std::uint64_t shots, double readout_error,
                                     std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("extract_features: shots must be positive");
  if (readout_error < 0 || readout_error > 1) throw std::invalid_argument("extract_features: readout error must lie in [0, 1]");
  const auto counts = sample(d, shots, seed);
  auto rng = make_rng(derive_seed(seed, "readout", 0));
  std::vector<double> f(n);
  for (std::size_t q = 0; q < n; ++q) {
    std::uint64_t ones = 0;
    for (std::size_t x = 0; x < counts.size(); ++x)
      if (x >> q & 1) ones += counts[x];
    std::uint64_t seen = ones;
    if (readout_error > 0) {
      std::binomial_distribution<std::uint64_t> keep(ones, 1 - readout_error), flip(shots - ones, readout_error);
      seen = keep(rng) + flip(rng);
    }
    f[q] = (static_cast<double>(shots) - 2.0 * static_cast<double>(seen)) / static_cast<double>(shots);
  }
  return f;
}

std::vector<std::vector<StateVector>> ssh_dataset(const DatasetConfig& cfg, const std::vector<SshSpec>& phases,
                                                 std::uint64_t seed) {
  std::vector<std::vector<StateVector>> out;
  for (std::size_t pi = 0; pi < phases.size(); ++pi) {
    if (phases[pi].n != cfg.n) throw std::invalid_argument("ssh_dataset: phase chain length differs from the dataset n");
    const auto sp = ssh_lowest(phases[pi], cfg.levels);
    auto states = sample_eigenstates(sp, cfg.per_class, derive_seed(seed, "ssh-sample", pi));
    for (std::size_t k = 0; k < states.size(); ++k)
      states[k] = perturb(states[k], cfg.perturb_sigma, derive_seed(seed, "perturb", pi * 1000003 + k));
    out.push_back(std::move(states));
  }
  return out;
}

std::vector<std::vector<StateVector>> ssh_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  std::vector<SshSpec> phases;
  for (Phase p : {Phase::trivial, Phase::topological, Phase::symmetry_broken}) phases.push_back(phase_parameters(p, cfg.n));
  return ssh_dataset(cfg, phases, seed);
}

FeatureTable build_features(const ReservoirSpec& r, const std::vector<std::vector<StateVector>>& inputs,
                            const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.cycles < 1) throw std::invalid_argument("build_features: cycles must be positive");
  FeatureTable t;
  t.n = r.n;
  t.cycles = static_cast<std::size_t>(cfg.cycles);
  const bool mixed = r.family == Family::multibody && !r.feed_forward;
  const int traj = mixed ? std::max(1, cfg.trajectories) : 1;
  std::uint64_t idx = 0;
  for (std::size_t label = 0; label < inputs.size(); ++label) {
    for (const auto& input : inputs[label]) {
      std::vector<StateVector> states(traj, input);
      std::vector<std::mt19937_64> rngs;
      for (int k = 0; k < traj; ++k) rngs.push_back(make_rng(derive_seed(seed, "byproduct", idx * 1009 + k)));
      std::vector<std::vector<double>> rows;
      for (int c = 0; c < cfg.cycles; ++c) {
        Distribution d(std::size_t{1} << r.n, 0.0);
        for (int k = 0; k < traj; ++k) {
          floquet_step(r, states[k], &rngs[k]);
          const auto p = output_distribution(states[k]);
          for (std::size_t x = 0; x < d.size(); ++x) d[x] += p[x] / traj;
        }
        rows.push_back(extract_features(d, r.n, cfg.shots, cfg.readout_error,
                                        derive_seed(seed, "shots", idx * 1009 + static_cast<std::uint64_t>(c))));
      }
      t.data.push_back(std::move(rows));
      t.labels.push_back(static_cast<int>(label));
      ++idx;
    }
  }
  return t;
}

void write_features_csv(std::ostream& os, const FeatureTable& t) {
  os << "sample,cycle";
  for (std::size_t q = 0; q < t.n; ++q) os << ",f" << q + 1;
  os << ",label\n";
  char buf[64];
  for (std::size_t s = 0; s < t.data.size(); ++s)
    for (std::size_t c = 0; c < t.data[s].size(); ++c) {
      os << s << ',' << c + 1;
      for (double v : t.data[s][c]) {
        std::snprintf(buf, sizeof buf, ",%.10g", v);
        os << buf;
      }
      const int l = t.labels[s];
      os << ',' << (l >= 0 && l < 3 ? to_string(static_cast<Phase>(l)) : std::to_string(l)) << '\n';
    }
}

std::vector<std::vector<double>> cycle_features(const FeatureTable& t, int cycle) {
  if (cycle < 1 || static_cast<std::size_t>(cycle) > t.cycles) throw std::out_of_range("cycle_features: no such cycle");
  std::vector<std::vector<double>> x;
  for (const auto& s : t.data) x.push_back(s[cycle - 1]);
  return x;
}

double train_eval(const std::vector<std::vector<double>>& x, const std::vector<int>& labels, const ClassifierParams& p,
                  std::uint64_t seed) {
  if (x.size() != labels.size() || x.empty()) throw std::invalid_argument("train_eval: features and labels differ in size");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw std::invalid_argument("train_eval: need at least two classes");
  auto rng = make_rng(derive_seed(seed, "split", 0));
  std::vector<std::size_t> train, test;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) throw std::invalid_argument("train_eval: every class needs two samples");
    std::shuffle(idx.begin(), idx.end(), rng);
    auto k = static_cast<std::size_t>(std::llround(p.train_fraction * idx.size()));
    k = std::clamp<std::size_t>(k, 1, idx.size() - 1);
    train.insert(train.end(), idx.begin(), idx.begin() + k);
    test.insert(test.end(), idx.begin() + k, idx.end());
  }
  const std::size_t d = x.front().size();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (auto i : train)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[i][j] / train.size();
  for (auto i : train)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (x[i][j] - mean[j]) * (x[i][j] - mean[j]) / train.size();
  for (auto& v : sd) v = v > 1e-24 ? std::sqrt(v) : 1.0;
  auto z = [&](std::size_t i) {
    Eigen::VectorXd v(d);
    for (std::size_t j = 0; j < d; ++j) v(j) = (x[i][j] - mean[j]) / sd[j];
    return v;
  };
  std::vector<int> classes;
  for (auto& [label, idx] : by_class) classes.push_back(label);
  const auto nc = classes.size();
  std::size_t correct = 0;
  if (p.kind == Classifier::ridge) {
    Eigen::MatrixXd X(train.size(), d + 1), Y = Eigen::MatrixXd::Zero(train.size(), nc);
    for (std::size_t r = 0; r < train.size(); ++r) {
      X.row(r).head(d) = z(train[r]).transpose();
      X(r, d) = 1.0;
      Y(r, std::find(classes.begin(), classes.end(), labels[train[r]]) - classes.begin()) = 1.0;
    }
    Eigen::MatrixXd G = X.transpose() * X;
    for (std::size_t j = 0; j < d; ++j) G(j, j) += p.ridge_lambda;
    const Eigen::MatrixXd W = G.ldlt().solve(X.transpose() * Y);
    for (auto i : test) {
      Eigen::VectorXd f(d + 1);
      f.head(d) = z(i);
      f(d) = 1.0;
      Eigen::Index best;
      (W.transpose() * f).maxCoeff(&best);
      correct += classes[best] == labels[i];
    }
  } else {
    if (p.k < 1) throw std::invalid_argument("train_eval: k must be positive");
    const std::size_t k = std::min<std::size_t>(p.k, train.size());
    std::vector<Eigen::VectorXd> zt;
    for (auto i : train) zt.push_back(z(i));
    for (auto i : test) {
      const auto q = z(i);
      std::vector<std::pair<double, std::size_t>> dist;
      for (std::size_t r = 0; r < train.size(); ++r) dist.push_back({(zt[r] - q).squaredNorm(), r});
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      std::map<int, std::pair<int, double>> votes;  // label -> (count, -nearest distance)
      for (std::size_t r = 0; r < k; ++r) {
        auto& v = votes[labels[train[dist[r].second]]];
        if (v.first == 0) v.second = -dist[r].first;
        ++v.first;
      }
      const auto best = std::max_element(votes.begin(), votes.end(), [](auto& a, auto& b) { return a.second < b.second; });
      correct += best->first == labels[i];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

StateVector encoded_input(std::size_t n, const std::vector<std::size_t>& triplet, int l) {
  if (triplet.size() != 3) throw std::invalid_argument("encoded_input: need three qubits");
  std::uint64_t smask = 0;
  for (auto q : triplet) {
    if (q >= n) throw std::invalid_argument("encoded_input: qubit out of range");
    smask |= std::uint64_t{1} << q;
  }
  if (std::popcount(smask) != 3) throw std::invalid_argument("encoded_input: qubits must be distinct");
  std::vector<cplx> a(std::size_t{1} << n, 0.0);
  const double amp = std::pow(2.0, -0.5 * static_cast<double>(n - 2));
  for (std::size_t x = 0; x < a.size(); ++x) {
    if ((x & smask) == 0) a[x] = amp;
    if ((x & smask) == smask) a[x] = (l % 2 ? -1.0 : 1.0) * kI * amp;
  }
  return StateVector::from_amplitudes(std::move(a));
}

GapResult theorem2_demo(std::size_t n, double epsilon, Graph g, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("theorem2_demo: need at least three qubits");
  int w = static_cast<int>(n), h = 1;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (g == Graph::path) {
    for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  } else {
    for (int d = 1; d * d <= static_cast<int>(n); ++d)
      if (n % d == 0) h = d;
    w = static_cast<int>(n) / h;
    edges = grid_edges(w, h);
  }
  std::vector<std::size_t> degree(n, 0);
  for (auto [a, b] : edges) ++degree[a], ++degree[b];
  const double max_deg = static_cast<double>(*std::max_element(degree.begin(), degree.end()));
  const auto dist = all_distances(n, edges);

  GapResult res;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const auto m = std::min({dist[i][j], dist[j][k], dist[i][k]});
        if (res.triplet.empty() || m > res.min_distance) {
          res.triplet = {i, j, k};
          res.min_distance = m;
        }
      }
  const double need = static_cast<double>(n) / (3 * max_deg);
  if (static_cast<double>(res.min_distance) < need) {
    std::ostringstream os;
    os << "theorem2_demo: best triplet has pairwise distance " << res.min_distance << " < n / (3 Delta) = " << need;
    throw std::invalid_argument(os.str());
  }
  std::uint64_t smask = 0;
  for (auto q : res.triplet) smask |= std::uint64_t{1} << q;

  auto md = measurement_reservoir(w, h, 2, false, 1.0, seed);
  md.feed_forward = true;
  const std::size_t heavy = 0;
  for (std::size_t j = 0; j < n; ++j) md.A.set(heavy, j, smask >> j & 1);
  const double shrink = epsilon / static_cast<double>(n);
  for (std::size_t r = 0; r < md.A.rows(); ++r) {
    const bool odd = std::popcount(row_mask(md.A, r) & smask) & 1;
    if (r == heavy) {
      md.coeff[0][r] = std::numbers::pi / 4;
      md.coeff[1][r] *= shrink;
    } else if (odd) {
      md.coeff[0][r] *= shrink;
      md.coeff[1][r] *= shrink;
    }
  }
  auto tfi = local_reservoir(Family::tfi, n, edges, 1.0, derive_seed(seed, "theorem2-tfi", 0));

  double md_o[2], loc_o[2];
  for (int l = 0; l < 2; ++l) {
    auto a = encoded_input(n, res.triplet, l);
    auto b = a;
    floquet_step(md, a);
    floquet_step(tfi, b);
    md_o[l] = z_string_expectation(a, smask);
    loc_o[l] = z_string_expectation(b, smask);
  }
  res.gap_measurement_driven = std::abs(md_o[0] - md_o[1]);
  res.gap_local = std::abs(loc_o[0] - loc_o[1]);
  return res;
}

}  // namespace mdiqp
