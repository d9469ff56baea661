#include "mdiqp/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "mdiqp/rng.hpp"

namespace mdiqp {

void validate(const NoiseModel& nm) {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(nm.p1) || !prob(nm.p2)) throw std::invalid_argument("noise probabilities must lie in [0, 1]");
  if (!(nm.t2_ns > 0.0) || nm.layer_ns < 0.0) throw std::invalid_argument("T2 must be positive and layer duration nonnegative");
}

namespace {

// Time key per instruction: a cx in layer l ends at l, a single-qubit
// instruction at a layer boundary t sits at t + 1/2.
std::vector<double> time_keys(const DynamicCircuit& c, std::size_t& depth) {
  std::vector<std::size_t> front(c.n_qubits(), 0);
  std::vector<double> key(c.ops.size());
  depth = 0;
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const auto& ins = c.ops[i];
    if (ins.op == OpCode::cx) {
      const std::size_t l = std::max(front[ins.q0], front[ins.q1]) + 1;
      front[ins.q0] = front[ins.q1] = l;
      depth = std::max(depth, l);
      key[i] = static_cast<double>(l);
    } else {
      key[i] = static_cast<double>(front[ins.q0]) + 0.5;
    }
  }
  return key;
}

const char kPauli[3] = {'X', 'Y', 'Z'};

}  // namespace

double circuit_duration_ns(const DynamicCircuit& c, const NoiseModel& nm) {
  std::size_t depth = 0;
  time_keys(c, depth);
  return static_cast<double>(depth) * nm.layer_ns;
}

PauliEvents sample_noise_events(const DynamicCircuit& c, const NoiseModel& nm, std::mt19937_64& rng) {
  PauliEvents ev(c.ops.size());
  std::uniform_int_distribution<int> pick3(0, 2), pick15(1, 15);
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const auto& ins = c.ops[i];
    if (ins.op == OpCode::cx && nm.p2 > 0) {
      if (nm.joint_two_qubit) {
        if (uniform01(rng) < nm.p2) {
          // 1..15 in base 4: digit 0 is identity, 1..3 are X, Y, Z.
          const int code = pick15(rng);
          if (code % 4) ev[i].push_back({ins.q0, kPauli[code % 4 - 1]});
          if (code / 4) ev[i].push_back({ins.q1, kPauli[code / 4 - 1]});
        }
      } else {
        for (auto q : {ins.q0, ins.q1})
          if (uniform01(rng) < nm.p2) ev[i].push_back({q, kPauli[pick3(rng)]});
      }
    } else if ((ins.op == OpCode::h || ins.op == OpCode::rz) && nm.p1 > 0) {
      if (uniform01(rng) < nm.p1) ev[i].push_back({ins.q0, kPauli[pick3(rng)]});
    }
  }
  if (nm.t2_ns < std::numeric_limits<double>::infinity() && nm.layer_ns > 0) {
    const double pz = 0.5 * (1.0 - std::exp(-nm.layer_ns / nm.t2_ns));
    std::size_t depth = 0;
    const auto key = time_keys(c, depth);
    std::vector<std::vector<std::size_t>> timeline(c.n_qubits());
    for (std::size_t i = 0; i < c.ops.size(); ++i) {
      timeline[c.ops[i].q0].push_back(i);
      if (c.ops[i].op == OpCode::cx) timeline[c.ops[i].q1].push_back(i);
    }
    for (std::size_t q = 0; q < c.n_qubits(); ++q) {
      const auto& tl = timeline[q];
      std::size_t k = 0;
      for (std::size_t layer = 1; layer <= depth; ++layer) {
        while (k < tl.size() && key[tl[k]] <= static_cast<double>(layer)) ++k;
        if (k == 0) continue;  // still in |0>
        if (uniform01(rng) < pz) ev[tl[k - 1]].push_back({q, 'Z'});
      }
    }
  }
  return ev;
}

Distribution noisy_distribution(const DynamicCircuit& c, const NoiseModel& nm, int trajectories, std::uint64_t seed) {
  validate(nm);
  if (trajectories < 1) throw std::invalid_argument("need at least one trajectory");
  if (nm.noiseless()) trajectories = 1;
  Distribution acc;
  for (int t = 0; t < trajectories; ++t) {
    auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const auto events = sample_noise_events(c, nm, rng);
    auto hook = [&](std::size_t i, const Instruction&, LiveRegister& reg) {
      for (auto [q, p] : events[i]) reg.pauli(q, p);
    };
    auto chooser = [&](std::size_t, double p0) { return uniform01(rng) < p0 ? 0 : 1; };
    const auto d = output_distribution(run_dynamic(c, chooser, hook).system);
    if (acc.empty()) acc.assign(d.size(), 0.0);
    for (std::size_t x = 0; x < d.size(); ++x) acc[x] += d[x];
  }
  for (auto& p : acc) p /= trajectories;
  return acc;
}

SaturationFit fit_saturation(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_saturation: need at least 3 points");
  double tmax = 0;
  for (auto [t, y] : points) {
    if (t < 0) throw std::invalid_argument("fit_saturation: durations must be nonnegative");
    tmax = std::max(tmax, t);
  }
  SaturationFit fit;
  const double y0 = points.front().second;
  const bool flat = std::all_of(points.begin(), points.end(), [&](auto p) { return std::abs(p.second - y0) < 1e-15; });
  if (flat || tmax == 0) {
    fit.delta_inf = std::clamp(y0, 0.0, 1.0);
    fit.degenerate = true;
    double r2 = 0;
    for (auto [t, y] : points) r2 += (y - fit.delta_inf) * (y - fit.delta_inf);
    fit.residual = std::sqrt(r2 / points.size());
    return fit;
  }
  auto sse = [&](double d, double k) {
    double s = 0;
    for (auto [t, y] : points) {
      const double r = y - d * (1 - std::exp(-k * t));
      s += r * r;
    }
    return s;
  };
  // Grid over kappa with the linear optimum for delta_inf.
  double best_d = 0, best_k = 0, best = std::numeric_limits<double>::infinity();
  for (int g = -60; g <= 60; ++g) {
    const double k = std::pow(10.0, g / 20.0) / tmax;
    double fy = 0, ff = 0;
    for (auto [t, y] : points) {
      const double f = 1 - std::exp(-k * t);
      fy += f * y;
      ff += f * f;
    }
    if (ff == 0) continue;
    const double d = fy / ff;
    const double s = sse(d, k);
    if (s < best) {
      best = s;
      best_d = d;
      best_k = k;
    }
  }
  // Damped Gauss-Newton on (delta_inf, kappa).
  double d = best_d, k = best_k, lambda = 1e-3;
  bool converged = false;
  for (int it = 0; it < 200 && !converged; ++it) {
    double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
    for (auto [t, y] : points) {
      const double e = std::exp(-k * t);
      const double f = 1 - e;
      const double r = y - d * f;
      const double jd = f, jk = d * t * e;
      a11 += jd * jd;
      a12 += jd * jk;
      a22 += jk * jk;
      g1 += jd * r;
      g2 += jk * r;
    }
    const double cur = sse(d, k);
    bool improved = false;
    for (int tries = 0; tries < 20 && !improved; ++tries) {
      const double b11 = a11 * (1 + lambda), b22 = a22 * (1 + lambda);
      const double det = b11 * b22 - a12 * a12;
      if (det == 0) break;
      const double dd = (b22 * g1 - a12 * g2) / det, dk = (b11 * g2 - a12 * g1) / det;
      const double nd = d + dd, nk = std::max(0.0, k + dk);
      if (sse(nd, nk) <= cur) {
        improved = true;
        const double step = std::abs(dd) + std::abs(dk) * tmax;
        d = nd;
        k = nk;
        lambda = std::max(lambda / 10, 1e-12);
        converged = step < 1e-14;
      } else {
        lambda *= 10;
      }
    }
    if (!improved) break;
  }
  fit.delta_inf = std::clamp(d, 0.0, 1.0);
  fit.kappa = std::max(0.0, k);
  fit.residual = std::sqrt(sse(fit.delta_inf, fit.kappa) / points.size());
  return fit;
}

std::vector<SweepRow> tv_sweep(const InstanceFamily& family, std::size_t instances, const std::string& param,
                               const std::vector<double>& values, const std::function<NoiseModel(double)>& model,
                               int trajectories, std::uint64_t seed) {
  std::vector<NoisyInstance> inst;
  for (std::size_t i = 0; i < instances; ++i) inst.push_back(family(i));
  std::vector<SweepRow> rows;
  for (std::size_t v = 0; v < values.size(); ++v) {
    const NoiseModel nm = model(values[v]);
    double sum = 0, sum2 = 0, dur = 0;
    for (std::size_t i = 0; i < instances; ++i) {
      const auto noisy = noisy_distribution(inst[i].circuit, nm, trajectories, derive_seed(seed, "tv_sweep", v * 100003 + i));
      const double tv = total_variation(noisy, inst[i].ideal);
      sum += tv;
      sum2 += tv * tv;
      dur += circuit_duration_ns(inst[i].circuit, nm);
    }
    SweepRow r;
    r.param = param;
    r.value = values[v];
    r.mean_tv = sum / instances;
    r.stddev = instances > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / instances) / (instances - 1))) : 0.0;
    r.duration_ns = dur / instances;
    r.trajectories = trajectories;
    r.seed = seed;
    rows.push_back(r);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "param,value,mean_tv,stddev,duration_ns,trajectories,seed\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%d,%llu\n", r.param.c_str(), r.value, r.mean_tv, r.stddev,
                  r.duration_ns, r.trajectories, static_cast<unsigned long long>(r.seed));
    os << buf;
  }
}

}  // namespace mdiqp
