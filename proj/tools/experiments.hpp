#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "mdiqp/criteria.hpp"
#include "mdiqp/noise.hpp"
#include "mdiqp/reservoir.hpp"

namespace mdiqp::cli {

// Runs f(0) ... f(count - 1) on up to `threads` workers. Each index must
// write only to its own output slot.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& f);

// Angles uniform on [0, 2 pi), layers x n.
std::vector<std::vector<double>> random_rotations(std::size_t layers, std::size_t n, std::uint64_t seed);

// Equivalence of the feed-forward dynamic circuit and its effective IQP circuit.
struct EquivalenceCase {
  std::size_t n = 0;
  std::size_t layers = 0;
  int D = 1;
  bool grid = false;
  std::size_t aux = 0;
  std::size_t slots = 0;
  std::size_t branches = 0;
  bool exhaustive = false;  // all 2^slots branches; otherwise every branch of each staircase in turn
  double max_error = 0.0;
};
struct EquivalenceSummary {
  std::vector<EquivalenceCase> cases;
  double max_error = 0.0;
  double tolerance = 1e-9;
  bool pass = false;
};
// Random configurations with n <= 4 system qubits, layers <= max_layers,
// D <= max_D; 2 x 2 grid staircases for n = 4 on odd configurations.
EquivalenceSummary equivalence_oracle(int configs, int max_layers, int max_D, std::uint64_t seed, int threads,
                                      std::size_t exhaustive_slots = 12);

// Measurement-driven staircases on a width x width system grid against
// ancilla-free nearest-neighbor CX networks of the same CX depth.
struct GridPair {
  IqpSpec measurement_driven;
  IqpSpec ancilla_free;
  int cx_depth = 0;  // per network
};
GridPair grid_pair(int width, int height, int layers, int D, std::uint64_t seed);

struct CollisionRow {
  std::size_t n = 0;
  int cx_depth = 0;
  int instances = 0;
  double md_mean = 0, md_sem = 0;
  double af_mean = 0, af_sem = 0;
};
// Mean chi / chi_Haar per square grid width.
std::vector<CollisionRow> anticoncentration(const std::vector<int>& widths, int layers, int D, int instances,
                                            std::uint64_t seed, int threads);

struct XiRow {
  int width = 0;
  int cx_depth = 0;
  int instances = 0;
  double md = 0, af = 0, lin = 0;
  double md_ratio = 0, af_ratio = 0;
  std::string baseline;
};
std::vector<XiRow> xi_comparison(const std::vector<int>& widths, int layers, int D, int instances, std::uint64_t seed,
                                 int threads);

// Noise study on a width x height system grid: measurement-driven circuits
// against the same effective IQP circuit compiled to nearest-neighbor CX
// networks (Gaussian elimination, then routed on the grid).
struct NoisePair {
  DynamicCircuit measurement_driven;
  DynamicCircuit unitary;
  Distribution ideal;
};
NoisePair noise_pair(int width, int height, int layers, int D, std::uint64_t seed);

struct NoiseRow {
  std::string param;
  double value = 0;
  double md_tv = 0, md_sd = 0, md_duration_ns = 0;
  double unitary_tv = 0, unitary_sd = 0, unitary_duration_ns = 0;
  int trajectories = 0;
};
struct NoiseStudy {
  std::vector<NoiseRow> rows;
  double md_cx = 0, unitary_cx = 0, md_depth = 0, unitary_depth = 0;
};
// model "depol" sweeps p2, "dephase" sweeps T2 (ns) at fixed layer duration,
// "duration" sweeps the layer duration (ns) at fixed T2.
NoiseStudy noise_study(int width, int height, int layers, int D, const std::string& model,
                       const std::vector<double>& values, double t2_ns, double layer_ns, int instances,
                       int trajectories, std::uint64_t seed, int threads);

struct ReservoirBenchSettings {
  DatasetConfig data;
  int width = 4;
  int height = 2;
  int rounds = 2;
  bool identity_rows = true;
  double total_time = 1.0;
  int architectures = 10;
  std::vector<std::string> families{"multibody-xy", "multibody-xy-noff", "tfi", "heisenberg", "xy"};
  ClassifierParams knn{Classifier::knn, 21, 1.0, 0.7};
  ClassifierParams ridge{Classifier::ridge, 21, 1.0, 0.7};
};
struct ReservoirRow {
  std::string family;
  int architecture = 0;
  int cycle = 0;
  double knn = 0, ridge = 0;
};
struct ReservoirBench {
  std::vector<ReservoirRow> rows;  // every recorded cycle
  // Means over architectures at the last cycle, keyed like `families`.
  std::vector<std::string> families;
  std::vector<double> knn_mean, ridge_mean;
  double mean(const std::string& family, bool knn) const;
};
ReservoirBench reservoir_bench(const ReservoirBenchSettings& s, std::uint64_t seed, int threads);

struct GapRow {
  std::uint64_t seed = 0;
  double epsilon = 0;
  GapResult gap;
};
std::vector<GapRow> readout_gaps(std::size_t n, Graph g, const std::vector<double>& epsilons, int seeds,
                                  std::uint64_t seed);

// Registry ------------------------------------------------------------------

struct Artifact {
  std::string name;
  std::string content;
};
struct RunContext {
  std::uint64_t seed = 0;
  int threads = 1;
  std::function<void(const std::string&)> step;  // progress log
};
struct JobResult {
  std::vector<Artifact> files;
  std::map<std::string, std::string> notes;  // copied into metadata.json
};
using Job = std::function<JobResult(const RunContext&)>;

struct Experiment {
  std::string name;
  std::string description;
  // Reads and validates settings; throws ConfigError. No side effects.
  std::function<Job(const Config&)> prepare;
};
const std::vector<Experiment>& registry();
const Experiment* find_experiment(const std::string& name);

struct RunOptions {
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
};
// Exit status: 0 success, 1 failure while running (nothing left in
// out_dir), 2 usage or configuration error (nothing written).
int run_experiment(const Config& cfg, const RunOptions& opt, std::ostream& log);

std::string sha256_hex(const std::string& data);
std::string git_describe();

}  // namespace mdiqp::cli
