#include "mdiqp/simcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include <Eigen/Dense>

#include "mdiqp/rng.hpp"

namespace mdiqp {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_qubit(std::size_t q, std::size_t n) {
  if (q >= n) throw std::out_of_range("qubit index out of range");
}
}  // namespace

StateVector::StateVector(std::size_t n, std::size_t cap) : n_(n) {
  if (n > cap) throw ResourceError("state vector of " + std::to_string(n) + " qubits exceeds the cap of " + std::to_string(cap));
  amps_.assign(std::size_t{1} << n, cplx{});
  amps_[0] = 1.0;
}

StateVector StateVector::plus(std::size_t n) {
  StateVector s(n);
  std::fill(s.amps_.begin(), s.amps_.end(), cplx(1.0 / std::sqrt(double(s.dim())), 0.0));
  return s;
}

StateVector StateVector::from_amplitudes(std::vector<cplx> amps) {
  if (amps.empty() || !std::has_single_bit(amps.size())) throw std::invalid_argument("amplitude count must be a power of two");
  StateVector s;
  s.n_ = static_cast<std::size_t>(std::countr_zero(amps.size()));
  s.amps_ = std::move(amps);
  return s;
}

void StateVector::h(std::size_t q) {
  check_qubit(q, n_);
  const std::size_t m = std::size_t{1} << q;
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if (!(i & m)) {
      const cplx a = amps_[i], b = amps_[i | m];
      amps_[i] = kInvSqrt2 * (a + b);
      amps_[i | m] = kInvSqrt2 * (a - b);
    }
}

void StateVector::x(std::size_t q) {
  check_qubit(q, n_);
  const std::size_t m = std::size_t{1} << q;
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if (!(i & m)) std::swap(amps_[i], amps_[i | m]);
}

void StateVector::y(std::size_t q) {
  check_qubit(q, n_);
  const std::size_t m = std::size_t{1} << q;
  const cplx I(0, 1);
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if (!(i & m)) {
      const cplx a = amps_[i], b = amps_[i | m];
      amps_[i] = -I * b;
      amps_[i | m] = I * a;
    }
}

void StateVector::z(std::size_t q) {
  check_qubit(q, n_);
  const std::size_t m = std::size_t{1} << q;
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if (i & m) amps_[i] = -amps_[i];
}

void StateVector::cx(std::size_t c, std::size_t t) {
  check_qubit(c, n_);
  check_qubit(t, n_);
  if (c == t) throw std::invalid_argument("cx control equals target");
  const std::size_t mc = std::size_t{1} << c, mt = std::size_t{1} << t;
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if ((i & mc) && !(i & mt)) std::swap(amps_[i], amps_[i | mt]);
}

void StateVector::rz(std::size_t q, double a) {
  check_qubit(q, n_);
  const std::size_t m = std::size_t{1} << q;
  const cplx p0 = std::polar(1.0, a), p1 = std::conj(p0);
  for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] *= (i & m) ? p1 : p0;
}

void StateVector::apply(std::size_t q, const Mat2& u) {
  check_qubit(q, n_);
  const std::size_t m = std::size_t{1} << q;
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if (!(i & m)) {
      const cplx a = amps_[i], b = amps_[i | m];
      amps_[i] = u[0] * a + u[1] * b;
      amps_[i | m] = u[2] * a + u[3] * b;
    }
}

void StateVector::apply(std::size_t q0, std::size_t q1, const Mat4& u) {
  check_qubit(q0, n_);
  check_qubit(q1, n_);
  if (q0 == q1) throw std::invalid_argument("two-qubit gate on a single qubit");
  const std::size_t m0 = std::size_t{1} << q0, m1 = std::size_t{1} << q1;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if (i & (m0 | m1)) continue;
    const std::size_t idx[4] = {i, i | m0, i | m1, i | m0 | m1};
    cplx v[4];
    for (int k = 0; k < 4; ++k) v[k] = amps_[idx[k]];
    for (int r = 0; r < 4; ++r) {
      cplx acc = 0;
      for (int k = 0; k < 4; ++k) acc += u[4 * r + k] * v[k];
      amps_[idx[r]] = acc;
    }
  }
}

void StateVector::hadamard_all() {
  for (std::size_t q = 0; q < n_; ++q) h(q);
}

double StateVector::norm() const {
  double s = 0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

void StateVector::normalize() {
  const double nr = norm();
  if (nr == 0.0) return;
  for (auto& a : amps_) a /= nr;
}

void StateVector::add_qubit() {
  amps_.resize(amps_.size() * 2, cplx{});
  ++n_;
}

double StateVector::project_out(std::size_t q, int bit) {
  check_qubit(q, n_);
  const std::size_t low = (std::size_t{1} << q) - 1;
  std::vector<cplx> out(amps_.size() / 2);
  double w = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t idx = ((i & ~low) << 1) | (i & low) | (static_cast<std::size_t>(bit) << q);
    out[i] = amps_[idx];
    w += std::norm(out[i]);
  }
  amps_ = std::move(out);
  --n_;
  return w;
}

double StateVector::probability_zero(std::size_t q) const {
  check_qubit(q, n_);
  const std::size_t m = std::size_t{1} << q;
  double p0 = 0, tot = 0;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    const double w = std::norm(amps_[i]);
    tot += w;
    if (!(i & m)) p0 += w;
  }
  return tot > 0 ? p0 / tot : 0.0;
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  cplx ip = 0;
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    ip += std::conj(a[i]) * b[i];
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  return std::norm(ip) / (na * nb);
}

LiveRegister::LiveRegister(std::size_t n_system, std::size_t n_aux, std::size_t cap)
    : n_system_(n_system), cap_(cap), pos_(n_system + n_aux, -1), idle_(n_system + n_aux, Idle::zero),
      state_(n_system, cap) {
  for (std::size_t q = 0; q < n_system; ++q) {
    pos_[q] = static_cast<long>(q);
    owner_.push_back(static_cast<long>(q));
  }
}

std::size_t LiveRegister::touch(std::size_t q) {
  check_qubit(q, pos_.size());
  if (pos_[q] >= 0) return static_cast<std::size_t>(pos_[q]);
  if (state_.qubits() + 1 > cap_)
    throw ResourceError("live register would exceed the cap of " + std::to_string(cap_) + " qubits");
  state_.add_qubit();
  const std::size_t p = state_.qubits() - 1;
  pos_[q] = static_cast<long>(p);
  owner_.push_back(static_cast<long>(q));
  if (idle_[q] == Idle::minus) state_.x(p);
  if (idle_[q] != Idle::zero) state_.h(p);
  idle_[q] = Idle::zero;
  return p;
}

void LiveRegister::pauli(std::size_t q, char p) {
  check_qubit(q, pos_.size());
  if (pos_[q] < 0 && p == 'Z') {
    if (idle_[q] == Idle::plus) idle_[q] = Idle::minus;
    else if (idle_[q] == Idle::minus) idle_[q] = Idle::plus;
    return;
  }
  const std::size_t b = touch(q);
  switch (p) {
    case 'X': state_.x(b); break;
    case 'Y': state_.y(b); break;
    case 'Z': state_.z(b); break;
    default: throw std::invalid_argument("pauli must be X, Y or Z");
  }
}

void LiveRegister::drop(std::size_t q, int bit) {
  const auto p = static_cast<std::size_t>(pos_[q]);
  state_.project_out(p, bit);
  owner_.erase(owner_.begin() + static_cast<long>(p));
  for (std::size_t k = p; k < owner_.size(); ++k) pos_[owner_[k]] = static_cast<long>(k);
  pos_[q] = -1;
}

double LiveRegister::measure_x(std::size_t q, const std::function<int(double)>& choose) {
  if (q < n_system_) throw std::invalid_argument("measure_x must target an auxiliary qubit");
  const std::size_t p = touch(q);
  state_.h(p);
  const double p0 = state_.probability_zero(p);
  const int bit = choose(p0);
  drop(q, bit);
  state_.normalize();
  idle_[q] = bit ? Idle::minus : Idle::plus;
  return bit ? 1.0 - p0 : p0;
}

void LiveRegister::reset(std::size_t q) {
  check_qubit(q, pos_.size());
  if (q < n_system_) throw std::invalid_argument("reset_aux must target an auxiliary qubit");
  if (pos_[q] >= 0) {
    const double p0 = state_.probability_zero(static_cast<std::size_t>(pos_[q]));
    if (p0 > 1 - 1e-12) drop(q, 0);
    else if (p0 < 1e-12) drop(q, 1);
    else throw std::logic_error("reset of an auxiliary that is entangled with the register");
    state_.normalize();
  }
  idle_[q] = Idle::zero;
}

void LiveRegister::release_clean_aux() {
  for (std::size_t q = n_system_; q < pos_.size(); ++q) {
    if (pos_[q] < 0) continue;
    if (state_.probability_zero(static_cast<std::size_t>(pos_[q])) < 1 - 1e-12)
      throw std::logic_error("auxiliary qubit left unmeasured and not in |0>");
    drop(q, 0);
  }
}

namespace {

struct Exec {
  LiveRegister reg;
  BitVec outcomes;
  double probability = 1.0;
};

void validate(const DynamicCircuit& c) {
  for (const auto& ins : c.ops) {
    check_qubit(ins.q0, c.n_qubits());
    if (ins.op == OpCode::cx) check_qubit(ins.q1, c.n_qubits());
    if (ins.op == OpCode::measure_x && ins.slot >= c.n_slots) throw std::out_of_range("measurement slot out of range");
    for (auto f : ins.frame)
      if (f >= c.n_slots) throw std::out_of_range("frame slot out of range");
  }
}

// Applies every non-measurement instruction.
void apply_unitary(Exec& e, const Instruction& ins) {
  auto& reg = e.reg;
  switch (ins.op) {
    case OpCode::cx: {
      const std::size_t a = reg.touch(ins.q0), b = reg.touch(ins.q1);
      reg.state().cx(a, b);
      break;
    }
    case OpCode::h: reg.state().h(reg.touch(ins.q0)); break;
    case OpCode::rz: {
      int parity = 0;
      for (auto f : ins.frame) parity ^= e.outcomes[f];
      reg.state().rz(reg.touch(ins.q0), ins.angle + (parity ? std::numbers::pi / 2 : 0.0));
      break;
    }
    case OpCode::reset_aux: reg.reset(ins.q0); break;
    case OpCode::measure_x: break;
  }
}

DynamicResult finish(Exec& e, std::size_t n_system) {
  e.reg.release_clean_aux();
  DynamicResult r;
  r.system = std::move(e.reg.state());
  if (r.system.qubits() != n_system) throw std::logic_error("live register does not match the system register");
  r.outcomes = std::move(e.outcomes);
  r.probability = e.probability;
  if (r.probability == 0.0) std::fill(r.system.amplitudes().begin(), r.system.amplitudes().end(), cplx{});
  return r;
}

}  // namespace

DynamicResult run_dynamic(const DynamicCircuit& c, const OutcomeChooser& choose, const OpHook& hook, std::size_t cap) {
  validate(c);
  Exec e{LiveRegister(c.n_system, c.n_aux, cap), BitVec(c.n_slots, 0), 1.0};
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const auto& ins = c.ops[i];
    if (ins.op == OpCode::measure_x) {
      int bit = 0;
      e.probability *= e.reg.measure_x(ins.q0, [&](double p0) {
        bit = choose(ins.slot, p0);
        return bit;
      });
      e.outcomes[ins.slot] = static_cast<std::uint8_t>(bit);
    } else {
      apply_unitary(e, ins);
    }
    if (hook) hook(i, ins, e.reg);
  }
  return finish(e, c.n_system);
}

DynamicResult run_dynamic_sample(const DynamicCircuit& c, std::uint64_t seed, std::size_t cap) {
  auto rng = make_rng(seed);
  return run_dynamic(c, [&](std::size_t, double p0) { return uniform01(rng) < p0 ? 0 : 1; }, {}, cap);
}

DynamicResult run_dynamic_fixed(const DynamicCircuit& c, const BitVec& outcomes, std::size_t cap) {
  if (outcomes.size() != c.n_slots) throw std::invalid_argument("fixed outcome vector has the wrong length");
  return run_dynamic(c, [&](std::size_t slot, double) { return int(outcomes[slot] & 1); }, {}, cap);
}

std::vector<DynamicResult> run_dynamic_enumerate(const DynamicCircuit& c, std::size_t max_branches, std::size_t cap) {
  validate(c);
  std::vector<DynamicResult> out;
  std::function<void(Exec, std::size_t)> dfs = [&](Exec e, std::size_t i) {
    for (; i < c.ops.size(); ++i) {
      const auto& ins = c.ops[i];
      if (ins.op != OpCode::measure_x) {
        apply_unitary(e, ins);
        continue;
      }
      for (int bit = 0; bit < 2; ++bit) {
        Exec f = e;
        f.probability *= f.reg.measure_x(ins.q0, [bit](double) { return bit; });
        f.outcomes[ins.slot] = static_cast<std::uint8_t>(bit);
        dfs(std::move(f), i + 1);
      }
      return;
    }
    if (out.size() >= max_branches) throw ResourceError("branch enumeration exceeds " + std::to_string(max_branches));
    out.push_back(finish(e, c.n_system));
  };
  dfs(Exec{LiveRegister(c.n_system, c.n_aux, cap), BitVec(c.n_slots, 0), 1.0}, 0);
  return out;
}

StateVector phase_state(const IqpSpec& spec, std::size_t cap) {
  const std::size_t n = spec.n();
  if (n > cap) throw ResourceError("phase state of " + std::to_string(n) + " qubits exceeds the cap of " + std::to_string(cap));
  if (spec.theta.size() != spec.s()) throw std::invalid_argument("phase_state: theta length differs from row count");
  std::vector<std::uint64_t> masks(spec.s(), 0);
  for (std::size_t r = 0; r < spec.s(); ++r) masks[r] = spec.A.row(r)[0];
  const std::size_t dim = std::size_t{1} << n;
  const double amp = 1.0 / std::sqrt(double(dim));
  std::vector<cplx> a(dim);
  for (std::size_t x = 0; x < dim; ++x) {
    double phase = 0;
    for (std::size_t r = 0; r < masks.size(); ++r) phase += (std::popcount(masks[r] & x) & 1) ? -spec.theta[r] : spec.theta[r];
    a[x] = std::polar(amp, phase);
  }
  return StateVector::from_amplitudes(std::move(a));
}

StateVector iqp_output_state(const IqpSpec& spec, std::size_t cap) {
  auto s = phase_state(spec, cap);
  s.hadamard_all();
  return s;
}

Distribution output_distribution(const StateVector& s) {
  Distribution d(s.dim());
  double tot = 0;
  for (std::size_t i = 0; i < s.dim(); ++i) tot += d[i] = std::norm(s[i]);
  if (tot > 0)
    for (auto& p : d) p /= tot;
  return d;
}

Distribution uniform_distribution(std::size_t n) {
  const std::size_t dim = std::size_t{1} << n;
  return Distribution(dim, 1.0 / double(dim));
}

std::vector<std::uint64_t> sample(const Distribution& d, std::uint64_t shots, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::vector<std::uint64_t> counts(d.size(), 0);
  double rest = 0;
  for (double p : d) rest += p;
  std::uint64_t left = shots;
  for (std::size_t i = 0; i < d.size() && left > 0; ++i) {
    if (i + 1 == d.size() || rest <= 0) {
      counts[i] = left;
      break;
    }
    const double p = std::clamp(d[i] / rest, 0.0, 1.0);
    const auto k = std::binomial_distribution<std::uint64_t>(left, p)(rng);
    counts[i] = k;
    left -= k;
    rest -= d[i];
  }
  return counts;
}

double collision_probability(const Distribution& d) {
  double s = 0;
  for (double p : d) s += p * p;
  return s;
}

double haar_collision(std::size_t n) { return 2.0 / (std::ldexp(1.0, static_cast<int>(n)) + 1.0); }

double total_variation(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: length mismatch");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::clamp(s / 2, 0.0, 1.0);
}

double entanglement_entropy(const StateVector& s, const std::vector<std::size_t>& subset) {
  const std::size_t n = s.qubits();
  std::vector<std::uint8_t> in(n, 0);
  for (auto q : subset) {
    check_qubit(q, n);
    if (in[q]) throw std::invalid_argument("entanglement_entropy: repeated qubit");
    in[q] = 1;
  }
  if (subset.empty() || subset.size() == n) throw std::invalid_argument("entanglement_entropy: subset must be nonempty and proper");
  std::vector<std::size_t> rest;
  for (std::size_t q = 0; q < n; ++q)
    if (!in[q]) rest.push_back(q);
  const std::size_t ra = std::size_t{1} << subset.size(), rb = std::size_t{1} << rest.size();
  Eigen::MatrixXcd m(ra, rb);
  for (std::size_t i = 0; i < s.dim(); ++i) {
    std::size_t a = 0, b = 0;
    for (std::size_t k = 0; k < subset.size(); ++k) a |= (i >> subset[k] & 1) << k;
    for (std::size_t k = 0; k < rest.size(); ++k) b |= (i >> rest[k] & 1) << k;
    m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s[i];
  }
  const double nrm = m.squaredNorm();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  double ent = 0;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    const double p = svd.singularValues()(k) * svd.singularValues()(k) / nrm;
    if (p > 1e-300) ent -= p * std::log(p);
  }
  return std::max(ent, 0.0);
}

double xi_cost(const StateVector& s, int width, int height) {
  if (width < 1 || height < 1 || s.qubits() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("xi_cost: grid does not match the register");
  double total = 0;
  std::vector<std::size_t> part;
  for (int cut = 1; cut < width; ++cut) {
    part.clear();
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < cut; ++x) part.push_back(static_cast<std::size_t>(y) * width + x);
    total += entanglement_entropy(s, part);
  }
  for (int cut = 1; cut < height; ++cut) {
    part.clear();
    for (int y = 0; y < cut; ++y)
      for (int x = 0; x < width; ++x) part.push_back(static_cast<std::size_t>(y) * width + x);
    total += entanglement_entropy(s, part);
  }
  return total;
}

XiBaseline xi_linear_baseline(int width, int height, int instances, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  XiBaseline b;
  b.instances = instances;
  b.cx_depth = static_cast<int>(6 * n);
  b.definition =
      "rotation layer, random nearest-neighbour CX network of depth 6n, rotation layer; uniform angles; phase-state xi";
  const auto edges = grid_edges(width, height);
  double sum = 0, sum2 = 0;
  for (int i = 0; i < instances; ++i) {
    auto rng = make_rng(derive_seed(seed, "xi_lin", static_cast<std::uint64_t>(i)));
    std::vector<std::vector<double>> rot(2, std::vector<double>(n));
    for (auto& layer : rot)
      for (auto& a : layer) a = 2 * std::numbers::pi * uniform01(rng);
    const auto net = random_nn_cx_network(n, edges, b.cx_depth, rng());
    const auto spec = effective_iqp(std::vector<BitMatrix>{apply_cx_gates(n, net)}, rot);
    const double xi = xi_cost(phase_state(spec), width, height);
    sum += xi;
    sum2 += xi * xi;
  }
  b.mean = sum / instances;
  b.stddev = instances > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / instances) / (instances - 1))) : 0.0;
  return b;
}

std::string bitstring(std::uint64_t x, std::size_t n) {
  std::string s(n, '0');
  for (std::size_t i = 0; i < n; ++i)
    if (x >> i & 1) s[i] = '1';
  return s;
}

void write_distribution_csv(std::ostream& os, const Distribution& d) {
  const auto n = static_cast<std::size_t>(std::countr_zero(d.size()));
  os << "bitstring,probability\n";
  char buf[64];
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", d[i]);
    os << bitstring(i, n) << ',' << buf << '\n';
  }
}

void write_distribution_binary(std::ostream& os, const Distribution& d) {
  for (double p : d) {
    const auto bits = std::bit_cast<std::uint64_t>(p);
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>(bits >> (8 * k) & 0xff);
    os.write(b, 8);
  }
}

Distribution read_distribution_binary(std::istream& is) {
  Distribution d;
  char b[8];
  while (is.read(b, 8)) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[k])) << (8 * k);
    d.push_back(std::bit_cast<double>(bits));
  }
  if (is.gcount() != 0) throw std::invalid_argument("binary distribution length is not a multiple of 8 bytes");
  return d;
}

}  // namespace mdiqp
