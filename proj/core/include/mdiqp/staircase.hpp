#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdiqp/gf2.hpp"
#include "mdiqp/grid.hpp"

namespace mdiqp {

enum class OpCode : std::uint8_t { cx, h, rz, measure_x, reset_aux };

// rz(q, angle) is exp(i * angle * Z_q). Its effective angle is shifted by
// pi/2 for every set outcome slot in `frame`, which realizes the Pauli-frame
// correction as an angle update.
struct Instruction {
  OpCode op;
  std::size_t q0 = 0;  // control for cx
  std::size_t q1 = 0;  // target for cx
  double angle = 0.0;
  std::size_t slot = 0;  // measure_x only
  std::vector<std::size_t> frame;

  static Instruction cx(std::size_t c, std::size_t t) { return {OpCode::cx, c, t, 0.0, 0, {}}; }
  static Instruction h(std::size_t q) { return {OpCode::h, q, 0, 0.0, 0, {}}; }
  static Instruction rz(std::size_t q, double a, std::vector<std::size_t> frame = {}) {
    return {OpCode::rz, q, 0, a, 0, std::move(frame)};
  }
  static Instruction measure_x(std::size_t q, std::size_t slot) { return {OpCode::measure_x, q, 0, 0.0, slot, {}}; }
  static Instruction reset_aux(std::size_t q) { return {OpCode::reset_aux, q, 0, 0.0, 0, {}}; }
};

// Qubits 0..n_system-1 are system qubits, the rest auxiliaries.
struct DynamicCircuit {
  std::size_t n_system = 0;
  std::size_t n_aux = 0;
  std::size_t n_slots = 0;
  std::vector<Instruction> ops;

  std::size_t n_qubits() const { return n_system + n_aux; }
  bool is_aux(std::size_t q) const { return q >= n_system; }
  void append(const DynamicCircuit& other);
};

struct TransferMatrix {
  BitMatrix t;                      // n_system x (measurements in the round)
  std::size_t round = 0;
  std::vector<std::size_t> slots;   // outcome slot per column
};

struct FanoutStaircase {
  DynamicCircuit circuit;  // cx, measure_x and reset_aux only
  std::vector<TransferMatrix> transfers;
  BitMatrix system_map;    // x -> Bx on system bits when every outcome is 0
  BitMatrix conjugation;   // Z support c -> B^{-T} c
  std::size_t window_clamps = 0;
  std::size_t skipped_partners = 0;
};

struct StaircaseParams {
  int D = 1;
  int r1 = 1;
  int r2 = 1;
};

// Fan-out staircase along freshly sampled Hamiltonian paths of the lattice.
FanoutStaircase build_staircase(const GridLayout& layout, StaircaseParams p, std::uint64_t seed,
                                int path_iterations = 2000);
// All-to-all variant: paths are uniformly random orderings of n system and
// n-1 auxiliary qubits.
FanoutStaircase build_staircase_all_to_all(std::size_t n, StaircaseParams p, std::uint64_t seed);

struct LadderPath {
  std::vector<std::size_t> system;  // n system qubit indices in path order
  std::vector<std::size_t> aux;     // n - 1 aux register offsets; aux[i] sits between system[i] and system[i+1]
};
// Staircase whose forward ladders follow `paths` (one per round); each
// backward ladder reverses its path. adjacency[s][a] restricts the random
// fan-out partners to lattice neighbors; nullptr allows any pair.
FanoutStaircase build_staircase_on_paths(std::size_t n_system, std::size_t n_aux, const std::vector<LadderPath>& paths,
                                         StaircaseParams p, std::uint64_t seed,
                                         const std::vector<std::vector<std::uint8_t>>* adjacency);

// Number of measurement rounds: maximal runs of consecutive measure_x.
std::size_t count_rounds(const DynamicCircuit& c);

// Maps the outcomes of `round` to the Z frame on system qubits at the end
// of the circuit. Requires a circuit of cx / rz / measure_x / reset_aux.
TransferMatrix transfer_matrix(const DynamicCircuit& c, std::size_t round);
std::vector<TransferMatrix> all_transfer_matrices(const DynamicCircuit& c);
// System-qubit GF(2) map of the circuit's cx network with zero outcomes.
BitMatrix system_map(const DynamicCircuit& c);

struct IqpSpec {
  BitMatrix A;  // s x n
  std::vector<double> theta;
  double global_phase = 0.0;
  std::size_t n() const { return A.cols(); }
  std::size_t s() const { return A.rows(); }
};

// Rows for layer i come from B_i^{-1} ... B_L^{-1}, where B_i are the system
// maps of the networks between rotation layers. rotations has L + 1 layers.
IqpSpec effective_iqp(const std::vector<BitMatrix>& system_maps, const std::vector<std::vector<double>>& rotations);
IqpSpec effective_iqp(const std::vector<FanoutStaircase>& stairs, const std::vector<std::vector<double>>& rotations);

double canonical_angle(double a);
std::vector<double> feedforward_update(const std::vector<double>& angles, const BitMatrix& T, const BitVec& m);

// |+>^n, rotation layer, staircase, rotation layer, ..., final rotation layer,
// Hadamards on the system register. Each rotation after a staircase carries
// that staircase's frame correction.
DynamicCircuit measurement_driven_circuit(const std::vector<FanoutStaircase>& stairs,
                                          const std::vector<std::vector<double>>& rotations);

// Same effective circuit with cx networks in place of staircases, no auxiliaries.
DynamicCircuit unitary_iqp_circuit(std::size_t n, const std::vector<CxGateList>& networks,
                                   const std::vector<std::vector<double>>& rotations);

// Random nearest-neighbor CX network: `depth` layers, each a random matching
// of the edge set with random orientation.
CxGateList random_nn_cx_network(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges, int depth,
                                std::uint64_t seed);
std::vector<std::pair<std::size_t, std::size_t>> grid_edges(int width, int height);
std::vector<std::pair<std::size_t, std::size_t>> complete_edges(std::size_t n);

// Rewrites each cx as 4(d - 1) nearest-neighbor cx along a shortest path of
// length d in the width x height grid; intermediate qubits are restored.
CxGateList route_on_grid(const CxGateList& gates, int width, int height);

struct KlocalTerm {
  std::vector<std::size_t> support;
  double angle;
};
// Terms whose product of exp(i angle Z_support) equals exp(i ell pi / 2^k Z^{(x)r})
// up to a global phase; every support has weight <= k.
std::vector<KlocalTerm> synthesize_klocal(std::size_t r, long long ell, std::size_t k);

struct CircuitCounts {
  std::size_t depth = 0;
  std::size_t cx = 0;
  std::size_t measurements = 0;
};
CircuitCounts depth_and_counts(const DynamicCircuit& c);

std::string to_json(const DynamicCircuit& c);
DynamicCircuit circuit_from_json(const std::string& text);
std::string to_json(const IqpSpec& s);
IqpSpec iqp_from_json(const std::string& text);

}  // namespace mdiqp
