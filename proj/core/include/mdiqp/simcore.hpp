#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdiqp/gf2.hpp"
#include "mdiqp/staircase.hpp"

namespace mdiqp {

using cplx = std::complex<double>;
using Mat2 = std::array<cplx, 4>;   // row-major
using Mat4 = std::array<cplx, 16>;  // row-major, basis index b0 + 2 b1

inline constexpr std::size_t kDefaultQubitCap = 24;

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Qubit q is bit q of the basis index.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t n, std::size_t cap = kDefaultQubitCap);
  static StateVector zero(std::size_t n) { return StateVector(n); }
  static StateVector plus(std::size_t n);
  static StateVector from_amplitudes(std::vector<cplx> amps);

  std::size_t qubits() const { return n_; }
  std::size_t dim() const { return amps_.size(); }
  const std::vector<cplx>& amplitudes() const { return amps_; }
  std::vector<cplx>& amplitudes() { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[i]; }

  void h(std::size_t q);
  void x(std::size_t q);
  void y(std::size_t q);
  void z(std::size_t q);
  void cx(std::size_t c, std::size_t t);
  // exp(i a Z_q)
  void rz(std::size_t q, double a);
  void apply(std::size_t q, const Mat2& u);
  void apply(std::size_t q0, std::size_t q1, const Mat4& u);
  void hadamard_all();

  double norm() const;
  void normalize();
  // Appends a qubit in |0> as the new highest bit.
  void add_qubit();
  // Keeps the slice where bit q equals `bit` and removes the qubit; returns
  // the squared norm of the kept slice.
  double project_out(std::size_t q, int bit);
  double probability_zero(std::size_t q) const;

 private:
  std::size_t n_ = 0;
  std::vector<cplx> amps_;
};

double fidelity(const StateVector& a, const StateVector& b);

// Live register for dynamic circuits: system qubits stay at bits 0..n-1,
// auxiliaries are allocated on first use and dropped once measured or reset.
class LiveRegister {
 public:
  LiveRegister(std::size_t n_system, std::size_t n_aux, std::size_t cap);

  StateVector& state() { return state_; }
  const StateVector& state() const { return state_; }
  bool live(std::size_t q) const { return pos_[q] >= 0; }
  std::size_t live_count() const { return state_.qubits(); }

  // Bit position of q, allocating it from its stored classical state.
  std::size_t touch(std::size_t q);
  // Pauli 'X', 'Y' or 'Z' on q; a Z on an idle |0> auxiliary is a no-op.
  void pauli(std::size_t q, char p);
  double measure_x(std::size_t q, const std::function<int(double)>& choose);
  void reset(std::size_t q);
  // Removes live auxiliaries that are back in |0>; throws if any is entangled.
  void release_clean_aux();

 private:
  void drop(std::size_t q, int bit);
  enum class Idle : std::uint8_t { zero, plus, minus };
  std::size_t n_system_;
  std::size_t cap_;
  std::vector<long> pos_;
  std::vector<long> owner_;  // bit position -> qubit
  std::vector<Idle> idle_;
  StateVector state_;
};

struct DynamicResult {
  StateVector system;
  BitVec outcomes;
  double probability = 1.0;  // probability of the realized outcome branch
};

// Called after instruction `index` has been applied.
using OpHook = std::function<void(std::size_t index, const Instruction&, LiveRegister&)>;
// Picks the outcome of `slot` given the probability of 0.
using OutcomeChooser = std::function<int(std::size_t slot, double p0)>;

DynamicResult run_dynamic(const DynamicCircuit& c, const OutcomeChooser& choose, const OpHook& hook = {},
                          std::size_t cap = kDefaultQubitCap);
DynamicResult run_dynamic_sample(const DynamicCircuit& c, std::uint64_t seed, std::size_t cap = kDefaultQubitCap);
// A branch of probability 0 returns probability 0 and a zero state.
DynamicResult run_dynamic_fixed(const DynamicCircuit& c, const BitVec& outcomes, std::size_t cap = kDefaultQubitCap);
// Depth-first over outcome bits; throws ResourceError past max_branches.
std::vector<DynamicResult> run_dynamic_enumerate(const DynamicCircuit& c, std::size_t max_branches = 1 << 16,
                                                 std::size_t cap = kDefaultQubitCap);

// 2^{-n/2} sum_x exp(i sum_r theta_r (-1)^{A_r . x}) |x>
StateVector phase_state(const IqpSpec& spec, std::size_t cap = kDefaultQubitCap);
// Hadamards applied to the phase state: the IQP circuit's output state.
StateVector iqp_output_state(const IqpSpec& spec, std::size_t cap = kDefaultQubitCap);

using Distribution = std::vector<double>;

Distribution output_distribution(const StateVector& s);
Distribution uniform_distribution(std::size_t n);
// Multinomial counts per basis index.
std::vector<std::uint64_t> sample(const Distribution& d, std::uint64_t shots, std::uint64_t seed);
double collision_probability(const Distribution& d);
double haar_collision(std::size_t n);
double total_variation(const Distribution& p, const Distribution& q);

// Von Neumann entropy in nats of the reduced state on `subset`.
double entanglement_entropy(const StateVector& s, const std::vector<std::size_t>& subset);
// Sum of cut entropies over all vertical and horizontal cuts of a
// width x height grid of qubits indexed y * width + x.
double xi_cost(const StateVector& s, int width, int height);

struct XiBaseline {
  double mean = 0.0;
  double stddev = 0.0;
  int instances = 0;
  int cx_depth = 0;
  std::string definition;
};
// Phase states of one random nearest-neighbour CX network of depth 6n
// between two layers of uniform random rotations, averaged over instances.
XiBaseline xi_linear_baseline(int width, int height, int instances, std::uint64_t seed);

// Character i of the string is qubit i.
std::string bitstring(std::uint64_t x, std::size_t n);
void write_distribution_csv(std::ostream& os, const Distribution& d);
void write_distribution_binary(std::ostream& os, const Distribution& d);
Distribution read_distribution_binary(std::istream& is);

}  // namespace mdiqp
