#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mdiqp/gf2.hpp"
#include "mdiqp/simcore.hpp"

namespace mdiqp {

// Extended SSH chain on n (even) spins: sum over mu of gamma_mu (J on bonds
// (2i-1, 2i) and J' on bonds (2i, 2i+1)), with gamma_z = delta and
// gamma_x = gamma_y = 1.
struct SshSpec {
  std::size_t n = 8;
  double J = 1.0;
  double Jp = 0.2;
  double delta = 1.0;
};

enum class Phase { trivial, topological, symmetry_broken };
SshSpec phase_parameters(Phase p, std::size_t n);
std::string to_string(Phase p);

void validate(const SshSpec& s, std::size_t cap = 12);
// y = H x without forming H.
void ssh_apply(const SshSpec& s, const std::vector<cplx>& x, std::vector<cplx>& y);

struct Spectrum {
  std::vector<double> energies;  // ascending
  std::vector<StateVector> vectors;
  // The last returned level is degenerate with the next one, so the cut
  // splits an eigenspace.
  bool degenerate_cut = false;
  std::size_t matvecs = 0;
};

// Lowest `levels` eigenpairs by Lanczos with full reorthogonalization and
// locking, one eigenpair per restart. Throws std::runtime_error with
// residual diagnostics when a restart fails to converge.
Spectrum ssh_lowest(const SshSpec& s, std::size_t levels, double tol = 1e-9);

// `count` states drawn uniformly (with replacement) from the spectrum.
std::vector<StateVector> sample_eigenstates(const Spectrum& sp, std::size_t count, std::uint64_t seed);

// R_x(theta_x) R_z(theta_z) on every qubit with angles ~ N(0, sigma^2);
// R_a(t) = exp(-i t sigma_a / 2).
StateVector perturb(const StateVector& s, double sigma, std::uint64_t seed);

// exp(i angle P) for the Pauli string with letters X, Y, Z at the masks.
void apply_pauli_rotation(StateVector& s, std::uint64_t xmask, std::uint64_t ymask, std::uint64_t zmask, double angle);
// Pauli string with one letter on the support of `row`.
void apply_pauli_string(StateVector& s, char letter, std::uint64_t support);

enum class Family { heisenberg, tfi, xy, multibody };
std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct ReservoirSpec {
  Family family = Family::multibody;
  std::size_t n = 0;
  double tau = 0.05;  // per-term evolution time in one Floquet step

  // Local families: couplings per edge (heisenberg: x, y, z; tfi: z; xy: x, y)
  // and fields per site (tfi, xy).
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<double>> edge_coupling;  // [edge][component]
  std::vector<double> field;

  // Multibody: rows of A, sectors applied in order, coefficients per sector and row.
  BitMatrix A;
  std::string sectors = "xy";
  std::vector<std::vector<double>> coeff;  // [sector][row]

  // Without feed-forward each sector exponential is followed by an
  // unheralded Pauli string of the sector letter, its support uniform over
  // the row space of `byproducts`.
  bool feed_forward = true;
  BitMatrix byproducts;
};

// Couplings ~ N(0, coupling_variance).
ReservoirSpec local_reservoir(Family f, std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                              double tau, std::uint64_t seed, double coupling_variance = 0.5);
ReservoirSpec multibody_reservoir(const BitMatrix& A, const std::string& sectors, double tau, std::uint64_t seed,
                                  double coupling_variance = 0.5);

// Architecture for the multibody family on a width x height system grid
// (height 1 is a path): the rows of a fan-out staircase's conjugation map,
// followed by identity rows when `with_identity`. Fills `byproducts` with the
// system-frame supports reachable by unheralded outcomes.
ReservoirSpec measurement_reservoir(int width, int height, int rounds, bool with_identity, double tau,
                                    std::uint64_t seed, double coupling_variance = 0.5);

// One Floquet step. `rng` draws the unheralded byproducts when feed-forward is off.
void floquet_step(const ReservoirSpec& r, StateVector& s, std::mt19937_64* rng = nullptr);

// Per-qubit <Z> from `shots` sampled bitstrings of d with independent
// symmetric readout flips.
std::vector<double> extract_features(const Distribution& d, std::size_t n, std::uint64_t shots, double readout_error,
                                     std::uint64_t seed);
std::vector<double> exact_z_expectations(const Distribution& d, std::size_t n);

struct FeatureTable {
  std::size_t n = 0;
  std::size_t cycles = 0;
  std::vector<int> labels;                             // per sample
  std::vector<std::vector<std::vector<double>>> data;  // [sample][cycle][qubit]
};

struct DatasetConfig {
  std::size_t n = 8;
  std::size_t levels = 20;
  std::size_t per_class = 150;
  double perturb_sigma = 0.17320508075688773;  // sqrt(0.03): 0.03 read as a variance
  int cycles = 10;
  std::uint64_t shots = 8192;
  double readout_error = 5e-3;
  int trajectories = 16;  // only used without feed-forward
};

// Runs every sample of every phase through the reservoir, recording features
// after each cycle.
FeatureTable build_features(const ReservoirSpec& r, const std::vector<std::vector<StateVector>>& inputs,
                            const DatasetConfig& cfg, std::uint64_t seed);
// inputs[phase][sample] for the three phases.
std::vector<std::vector<StateVector>> ssh_dataset(const DatasetConfig& cfg, std::uint64_t seed);
// Same with explicit parameters, one class per entry.
std::vector<std::vector<StateVector>> ssh_dataset(const DatasetConfig& cfg, const std::vector<SshSpec>& phases,
                                                 std::uint64_t seed);

void write_features_csv(std::ostream& os, const FeatureTable& t);

enum class Classifier { ridge, knn };
struct ClassifierParams {
  Classifier kind = Classifier::knn;
  int k = 21;
  double ridge_lambda = 1.0;
  double train_fraction = 0.7;
};

// Class-balanced split, train-set standardization, held-out accuracy.
// x[sample] are feature rows; throws std::invalid_argument for fewer than two classes.
double train_eval(const std::vector<std::vector<double>>& x, const std::vector<int>& labels, const ClassifierParams& p,
                  std::uint64_t seed);
// Features of one cycle (1-based) as rows.
std::vector<std::vector<double>> cycle_features(const FeatureTable& t, int cycle);

enum class Graph { path, grid };
struct GapResult {
  double gap_measurement_driven = 0.0;
  double gap_local = 0.0;
  std::vector<std::size_t> triplet;
  std::size_t min_distance = 0;
};

// Readout gap of O = Z_i Z_j Z_k between the two encoded inputs after one
// Floquet cycle, for a measurement-driven XY reservoir whose heavy row is
// the triplet indicator and for a random nearest-neighbor TFI cycle of the
// same duration. Grid graphs use the most square factorization of n.
GapResult theorem2_demo(std::size_t n, double epsilon, Graph g, std::uint64_t seed);

// Encoded inputs (H_S|+> +- i X_S H_S|+>) / sqrt 2, l = 0 or 1.
StateVector encoded_input(std::size_t n, const std::vector<std::size_t>& triplet, int l);

}  // namespace mdiqp
