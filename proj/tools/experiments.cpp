#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "mdiqp/rng.hpp"

namespace mdiqp::cli {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::vector<double>> random_rotations(std::size_t layers, std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::vector<std::vector<double>> r(layers, std::vector<double>(n));
  for (auto& l : r)
    for (auto& a : l) a = 2 * std::numbers::pi * uniform01(rng);
  return r;
}

namespace {

double max_abs_diff(const Distribution& p, const Distribution& q) {
  double m = 0;
  for (std::size_t i = 0; i < p.size(); ++i) m = std::max(m, std::abs(p[i] - q[i]));
  return m;
}

Distribution normalized(Distribution d) {
  double s = 0;
  for (double v : d) s += v;
  for (double& v : d) v /= s;
  return d;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

EquivalenceSummary equivalence_oracle(int configs, int max_layers, int max_D, std::uint64_t seed, int threads,
                                      std::size_t exhaustive_slots) {
  if (configs < 1 || max_layers < 1 || max_D < 1) throw std::invalid_argument("equivalence_oracle: counts must be positive");
  EquivalenceSummary out;
  out.cases.resize(static_cast<std::size_t>(configs));
  parallel_for(out.cases.size(), threads, [&](std::size_t i) {
    auto rng = make_rng(derive_seed(seed, "equivalence", i));
    EquivalenceCase ec;
    ec.n = 2 + rng() % 3;
    ec.layers = 1 + rng() % static_cast<std::uint64_t>(max_layers);
    ec.D = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_D));
    ec.grid = ec.n == 4 && i % 2 == 1;
    std::vector<FanoutStaircase> stairs;
    for (std::size_t l = 0; l < ec.layers; ++l)
      stairs.push_back(ec.grid ? build_staircase(system_grid_layout(2, 2), {ec.D, 1, 1}, rng())
                               : build_staircase_all_to_all(ec.n, {ec.D, 1, 1}, rng()));
    const auto rot = random_rotations(ec.layers + 1, ec.n, rng());
    const auto c = measurement_driven_circuit(stairs, rot);
    const auto target = output_distribution(iqp_output_state(effective_iqp(stairs, rot)));
    ec.aux = c.n_aux;
    ec.slots = c.n_slots;

    auto check = [&](const BitVec& m) {
      const auto r = run_dynamic_fixed(c, m);
      if (r.probability <= 0) throw std::runtime_error("equivalence_oracle: zero-probability outcome branch");
      ec.max_error = std::max(ec.max_error, max_abs_diff(normalized(output_distribution(r.system)), target));
      ++ec.branches;
    };
    BitVec m(c.n_slots, 0);
    if (c.n_slots <= exhaustive_slots) {
      ec.exhaustive = true;
      for (std::uint64_t b = 0; b < (std::uint64_t{1} << c.n_slots); ++b) {
        for (std::size_t k = 0; k < c.n_slots; ++k) m[k] = static_cast<std::uint8_t>(b >> k & 1);
        check(m);
      }
    } else {
      // Every branch of one staircase, the others at random outcomes.
      std::size_t offset = 0;
      for (const auto& fs : stairs) {
        const std::size_t k = fs.circuit.n_slots;
        if (k > 20) throw std::invalid_argument("equivalence_oracle: staircase has too many outcome slots");
        for (auto& bit : m) bit = static_cast<std::uint8_t>(rng() & 1);
        for (std::uint64_t b = 0; b < (std::uint64_t{1} << k); ++b) {
          for (std::size_t j = 0; j < k; ++j) m[offset + j] = static_cast<std::uint8_t>(b >> j & 1);
          check(m);
        }
        offset += k;
      }
    }
    out.cases[i] = ec;
  });
  for (const auto& ec : out.cases) out.max_error = std::max(out.max_error, ec.max_error);
  out.pass = out.max_error <= out.tolerance;
  return out;
}

GridPair grid_pair(int width, int height, int layers, int D, std::uint64_t seed) {
  if (layers < 1) throw std::invalid_argument("grid_pair: need at least one layer");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  GridPair out;
  std::vector<FanoutStaircase> stairs;
  for (int l = 0; l < layers; ++l) {
    stairs.push_back(build_staircase(system_grid_layout(width, height), {D, 1, 1}, derive_seed(seed, "md-staircase", l)));
    out.cx_depth = std::max(out.cx_depth, static_cast<int>(depth_and_counts(stairs.back().circuit).depth));
  }
  std::vector<BitMatrix> maps;
  for (int l = 0; l < layers; ++l)
    maps.push_back(apply_cx_gates(
        n, random_nn_cx_network(n, grid_edges(width, height), out.cx_depth, derive_seed(seed, "af-network", l))));
  const auto rot = random_rotations(static_cast<std::size_t>(layers) + 1, n, derive_seed(seed, "angles", 0));
  out.measurement_driven = effective_iqp(stairs, rot);
  out.ancilla_free = effective_iqp(maps, rot);
  return out;
}

std::vector<CollisionRow> anticoncentration(const std::vector<int>& widths, int layers, int D, int instances,
                                            std::uint64_t seed, int threads) {
  if (instances < 1) throw std::invalid_argument("anticoncentration: need at least one instance");
  std::vector<CollisionRow> rows;
  for (int w : widths) {
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(w);
    std::vector<double> md(instances), af(instances);
    std::vector<int> depth(instances);
    parallel_for(static_cast<std::size_t>(instances), threads, [&](std::size_t i) {
      const auto p = grid_pair(w, w, layers, D, derive_seed(seed, "collision-" + std::to_string(w), i));
      md[i] = collision_probability(output_distribution(iqp_output_state(p.measurement_driven))) / haar_collision(n);
      af[i] = collision_probability(output_distribution(iqp_output_state(p.ancilla_free))) / haar_collision(n);
      depth[i] = p.cx_depth;
    });
    CollisionRow r;
    r.n = n;
    r.instances = instances;
    r.cx_depth = *std::max_element(depth.begin(), depth.end());
    r.md_mean = mean_of(md);
    r.af_mean = mean_of(af);
    r.md_sem = stddev_of(md) / std::sqrt(static_cast<double>(instances));
    r.af_sem = stddev_of(af) / std::sqrt(static_cast<double>(instances));
    rows.push_back(r);
  }
  return rows;
}

std::vector<XiRow> xi_comparison(const std::vector<int>& widths, int layers, int D, int instances, std::uint64_t seed,
                                 int threads) {
  if (instances < 1) throw std::invalid_argument("xi_comparison: need at least one instance");
  std::vector<XiRow> rows;
  for (int w : widths) {
    std::vector<double> md(instances), af(instances);
    std::vector<int> depth(instances);
    parallel_for(static_cast<std::size_t>(instances), threads, [&](std::size_t i) {
      const auto p = grid_pair(w, w, layers, D, derive_seed(seed, "xi-" + std::to_string(w), i));
      md[i] = xi_cost(phase_state(p.measurement_driven), w, w);
      af[i] = xi_cost(phase_state(p.ancilla_free), w, w);
      depth[i] = p.cx_depth;
    });
    const auto base = xi_linear_baseline(w, w, instances, derive_seed(seed, "xi-linear", static_cast<std::uint64_t>(w)));
    XiRow r;
    r.width = w;
    r.instances = instances;
    r.cx_depth = *std::max_element(depth.begin(), depth.end());
    r.md = mean_of(md);
    r.af = mean_of(af);
    r.lin = base.mean;
    r.md_ratio = r.md / r.lin;
    r.af_ratio = r.af / r.lin;
    r.baseline = base.definition;
    rows.push_back(r);
  }
  return rows;
}

NoisePair noise_pair(int width, int height, int layers, int D, std::uint64_t seed) {
  if (layers < 1) throw std::invalid_argument("noise_pair: need at least one layer");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<FanoutStaircase> stairs;
  std::vector<CxGateList> networks;
  for (int l = 0; l < layers; ++l) {
    stairs.push_back(build_staircase(system_grid_layout(width, height), {D, 1, 1}, derive_seed(seed, "md-staircase", l)));
    networks.push_back(route_on_grid(synthesize_cx_circuit(stairs.back().system_map), width, height));
  }
  const auto rot = random_rotations(static_cast<std::size_t>(layers) + 1, n, derive_seed(seed, "angles", 0));
  NoisePair p;
  p.measurement_driven = measurement_driven_circuit(stairs, rot);
  p.unitary = unitary_iqp_circuit(n, networks, rot);
  p.ideal = output_distribution(iqp_output_state(effective_iqp(stairs, rot)));
  return p;
}

NoiseStudy noise_study(int width, int height, int layers, int D, const std::string& model,
                       const std::vector<double>& values, double t2_ns, double layer_ns, int instances,
                       int trajectories, std::uint64_t seed, int threads) {
  if (model != "depol" && model != "dephase" && model != "duration")
    throw std::invalid_argument("noise_study: model must be depol, dephase or duration");
  if (instances < 1 || trajectories < 1) throw std::invalid_argument("noise_study: counts must be positive");
  const std::string param = model == "depol" ? "p2" : model == "dephase" ? "t2_ns" : "layer_ns";
  auto model_for = [&](double v) {
    NoiseModel nm;
    nm.t2_ns = t2_ns;
    nm.layer_ns = layer_ns;
    if (model == "depol") nm.p2 = v;
    if (model == "dephase") nm.t2_ns = v;
    if (model == "duration") nm.layer_ns = v;
    validate(nm);
    return nm;
  };
  for (double v : values) model_for(v);

  std::vector<NoisePair> pairs(static_cast<std::size_t>(instances));
  parallel_for(pairs.size(), threads,
               [&](std::size_t i) { pairs[i] = noise_pair(width, height, layers, D, derive_seed(seed, "noise-instance", i)); });
  NoiseStudy out;
  for (const auto& p : pairs) {
    const auto a = depth_and_counts(p.measurement_driven), b = depth_and_counts(p.unitary);
    out.md_cx += static_cast<double>(a.cx) / instances;
    out.unitary_cx += static_cast<double>(b.cx) / instances;
    out.md_depth += static_cast<double>(a.depth) / instances;
    out.unitary_depth += static_cast<double>(b.depth) / instances;
  }
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const auto nm = model_for(values[vi]);
    std::vector<double> md(pairs.size()), un(pairs.size()), dmd(pairs.size()), dun(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
      const auto s = derive_seed(derive_seed(seed, "trajectories", vi), i);
      md[i] = total_variation(noisy_distribution(pairs[i].measurement_driven, nm, trajectories, derive_seed(s, 0)),
                              pairs[i].ideal);
      un[i] = total_variation(noisy_distribution(pairs[i].unitary, nm, trajectories, derive_seed(s, 1)), pairs[i].ideal);
      dmd[i] = circuit_duration_ns(pairs[i].measurement_driven, nm);
      dun[i] = circuit_duration_ns(pairs[i].unitary, nm);
    });
    NoiseRow r;
    r.param = param;
    r.value = values[vi];
    r.trajectories = trajectories;
    r.md_tv = mean_of(md);
    r.md_sd = stddev_of(md);
    r.unitary_tv = mean_of(un);
    r.unitary_sd = stddev_of(un);
    r.md_duration_ns = mean_of(dmd);
    r.unitary_duration_ns = mean_of(dun);
    out.rows.push_back(r);
  }
  return out;
}

double ReservoirBench::mean(const std::string& family, bool knn) const {
  for (std::size_t i = 0; i < families.size(); ++i)
    if (families[i] == family) return knn ? knn_mean[i] : ridge_mean[i];
  throw std::invalid_argument("ReservoirBench: no family " + family);
}

ReservoirBench reservoir_bench(const ReservoirBenchSettings& s, std::uint64_t seed, int threads) {
  const std::size_t n = static_cast<std::size_t>(s.width) * static_cast<std::size_t>(s.height);
  if (n != s.data.n) throw std::invalid_argument("reservoir_bench: width * height must equal the chain length");
  if (s.architectures < 1) throw std::invalid_argument("reservoir_bench: need at least one architecture");
  if (s.total_time <= 0) throw std::invalid_argument("reservoir_bench: total time must be positive");
  for (const auto& f : s.families)
    if (f != "multibody-xy-noff") family_from_string(f);
  // Two sector exponentials per multibody step; local families get the same
  // per-step time so every family evolves for the same total time.
  const double tau = s.total_time / (2.0 * s.data.cycles);
  const auto data = ssh_dataset(s.data, derive_seed(seed, "ssh", 0));
  const auto edges = grid_edges(s.width, s.height);

  const std::size_t jobs = s.families.size() * static_cast<std::size_t>(s.architectures);
  std::vector<std::vector<ReservoirRow>> per_job(jobs);
  parallel_for(jobs, threads, [&](std::size_t j) {
    const auto& fam = s.families[j / s.architectures];
    const int a = static_cast<int>(j % s.architectures);
    ReservoirSpec r;
    if (fam == "multibody-xy" || fam == "multibody-xy-noff") {
      r = measurement_reservoir(s.width, s.height, s.rounds, s.identity_rows, tau, derive_seed(seed, "arch-multibody", a));
      r.feed_forward = fam == "multibody-xy";
    } else {
      r = local_reservoir(family_from_string(fam), n, edges, tau, derive_seed(seed, "arch-" + fam, a));
    }
    const auto t = build_features(r, data, s.data, derive_seed(seed, "features", a));
    for (int c = 1; c <= s.data.cycles; ++c) {
      const auto x = cycle_features(t, c);
      const auto split = derive_seed(seed, "split", a);
      per_job[j].push_back({fam, a, c, train_eval(x, t.labels, s.knn, split), train_eval(x, t.labels, s.ridge, split)});
    }
  });
  ReservoirBench out;
  out.families = s.families;
  out.knn_mean.assign(s.families.size(), 0.0);
  out.ridge_mean.assign(s.families.size(), 0.0);
  for (std::size_t j = 0; j < jobs; ++j) {
    const auto& last = per_job[j].back();
    out.knn_mean[j / s.architectures] += last.knn / s.architectures;
    out.ridge_mean[j / s.architectures] += last.ridge / s.architectures;
    out.rows.insert(out.rows.end(), per_job[j].begin(), per_job[j].end());
  }
  return out;
}

std::vector<GapRow> readout_gaps(std::size_t n, Graph g, const std::vector<double>& epsilons, int seeds,
                                  std::uint64_t seed) {
  std::vector<GapRow> rows;
  for (double eps : epsilons)
    for (int s = 0; s < seeds; ++s) {
      const auto sd = derive_seed(seed, "readout-gap", static_cast<std::uint64_t>(s));
      rows.push_back({sd, eps, theorem2_demo(n, eps, g, sd)});
    }
  return rows;
}

}  // namespace mdiqp::cli
