#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mdiqp/simcore.hpp"
#include "mdiqp/staircase.hpp"

namespace mdiqp {

struct NoiseModel {
  double p1 = 0.0;  // after every h / rz
  double p2 = 0.0;  // after every cx
  double t2_ns = std::numeric_limits<double>::infinity();
  double layer_ns = 200.0;
  // false: each cx qubit independently gets X/Y/Z with probability p2.
  bool joint_two_qubit = true;

  bool noiseless() const { return p1 == 0.0 && p2 == 0.0 && !(t2_ns < std::numeric_limits<double>::infinity()); }
};

void validate(const NoiseModel& nm);

// Pauli errors to inject after each instruction, indexed like c.ops.
using PauliEvents = std::vector<std::vector<std::pair<std::size_t, char>>>;
PauliEvents sample_noise_events(const DynamicCircuit& c, const NoiseModel& nm, std::mt19937_64& rng);

// Wall-clock duration: greedy cx depth times the layer duration.
double circuit_duration_ns(const DynamicCircuit& c, const NoiseModel& nm);

// Average of exact per-trajectory output distributions of the system
// register; measurements are ideal and feed-forward uses each trajectory's
// own outcomes.
Distribution noisy_distribution(const DynamicCircuit& c, const NoiseModel& nm, int trajectories, std::uint64_t seed);

struct SaturationFit {
  double delta_inf = 0.0;
  double kappa = 0.0;     // 1/ns
  double residual = 0.0;  // root-mean-square
  bool degenerate = false;
};

// Least-squares fit of delta_inf * (1 - exp(-kappa * t)).
SaturationFit fit_saturation(const std::vector<std::pair<double, double>>& points);

struct NoisyInstance {
  DynamicCircuit circuit;
  Distribution ideal;
};
using InstanceFamily = std::function<NoisyInstance(std::size_t index)>;

struct SweepRow {
  std::string param;
  double value = 0.0;
  double mean_tv = 0.0;
  double stddev = 0.0;
  double duration_ns = 0.0;  // mean over instances
  int trajectories = 0;
  std::uint64_t seed = 0;
};

std::vector<SweepRow> tv_sweep(const InstanceFamily& family, std::size_t instances, const std::string& param,
                               const std::vector<double>& values, const std::function<NoiseModel(double)>& model,
                               int trajectories, std::uint64_t seed);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace mdiqp
