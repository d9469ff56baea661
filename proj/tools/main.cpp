#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "mdiqp/rng.hpp"

using namespace mdiqp;
using namespace mdiqp::cli;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) throw std::runtime_error("cannot write " + path);
}

std::pair<int, int> parse_grid(const std::string& s) {
  int w = 0, h = 0;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || w < 1 || h < 1 || !in.eof())
    throw ConfigError("grid must look like WxH, got '" + s + "'");
  return {w, h};
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-driven IQP sampling and reservoir toolkit"};
  app.require_subcommand(1);

  // list
  auto* list = app.add_subcommand("list", "List registered experiments");

  // run
  auto* run = app.add_subcommand("run", "Run a registered experiment");
  std::string config_path, experiment, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<std::string> overrides;
  run->add_option("--config", config_path, "Flat key = value configuration file")->check(CLI::ExistingFile);
  run->add_option("--experiment", experiment, "Experiment name (overrides the config)");
  auto* seed_opt = run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--out", out_dir, "Output directory (must not exist or be empty)")->required();
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--set", overrides, "Extra key=value settings");

  // staircase gen
  auto* stair = app.add_subcommand("staircase", "Fan-out staircase tools");
  auto* gen = stair->add_subcommand("gen", "Generate a fan-out staircase circuit");
  stair->require_subcommand(1);
  std::string grid = "4x4", gen_out, arch_out;
  std::size_t all_to_all = 0;
  int D = 1, r1 = 1, r2 = 1, path_iters = 2000;
  std::uint64_t gen_seed = 1;
  gen->add_option("--grid", grid, "System grid WxH");
  gen->add_option("--all-to-all", all_to_all, "All-to-all variant on N system qubits");
  gen->add_option("--D", D, "Ladder rounds")->check(CLI::Range(1, 64));
  gen->add_option("--r1", r1, "Forward repetitions")->check(CLI::Range(1, 16));
  gen->add_option("--r2", r2, "Backward repetitions")->check(CLI::Range(1, 16));
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--path-iters", path_iters, "Rerouting iterations per Hamiltonian path")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", gen_out, "Circuit JSON output ('-' for stdout)")->required();
  gen->add_option("--arch-out", arch_out, "Conjugation matrix JSON output");
  int iqp_layers = 0;
  std::string iqp_out;
  gen->add_option("--iqp-layers", iqp_layers,
                  "Emit a full IQP circuit with this many staircases and random rotation layers (0: bare staircase)")
      ->check(CLI::Range(0, 16));
  gen->add_option("--iqp-out", iqp_out, "Effective IQP JSON output (with --iqp-layers)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Output distribution of a circuit JSON");
  std::string circuit_path, mode = "exact", sim_out, binary_out;
  std::uint64_t shots = 1000, sim_seed = 1;
  sim->add_option("--circuit", circuit_path, "Circuit JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--mode", mode, "exact | sample")->check(CLI::IsMember({"exact", "sample"}));
  sim->add_option("--shots", shots, "Shots for sample mode")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Seed");
  sim->add_option("--out", sim_out, "CSV output ('-' for stdout)");
  sim->add_option("--binary", binary_out, "Raw f64 distribution output (exact mode)");
  std::uint64_t branch_samples = 512;
  sim->add_option("--branch-samples", branch_samples, "Sampled branches when enumeration is too large")
      ->check(CLI::PositiveNumber);

  // noise sweep
  auto* noise = app.add_subcommand("noise", "Noise studies");
  auto* sweep = noise->add_subcommand("sweep", "Total variation sweep, measurement-driven vs compiled unitary");
  noise->require_subcommand(1);
  std::string model = "depol", noise_grid = "3x2", noise_out;
  std::vector<double> values;
  int layers = 2, noise_D = 2, instances = 20, trajectories = 2000;
  double t2_ns = std::numeric_limits<double>::infinity(), layer_ns = 200;
  std::uint64_t noise_seed = 1;
  sweep->add_option("--model", model, "depol | dephase | duration")->check(CLI::IsMember({"depol", "dephase", "duration"}));
  sweep->add_option("--values", values, "Sweep values (p2, T2 in ns, or layer duration in ns)")
      ->required()
      ->delimiter(',');
  sweep->add_option("--grid", noise_grid, "System grid WxH");
  sweep->add_option("--layers", layers, "Staircase layers")->check(CLI::Range(1, 4));
  sweep->add_option("--D", noise_D, "Ladder rounds")->check(CLI::Range(1, 4));
  sweep->add_option("--instances", instances, "Random instances")->check(CLI::PositiveNumber);
  sweep->add_option("--trajectories", trajectories, "Trajectories per instance")->check(CLI::PositiveNumber);
  sweep->add_option("--t2-ns", t2_ns, "T2 for depol / duration sweeps");
  sweep->add_option("--layer-ns", layer_ns, "CX layer duration");
  sweep->add_option("--seed", noise_seed, "Seed");
  sweep->add_option("--out", noise_out, "CSV output ('-' for stdout)");

  // criteria check
  auto* crit = app.add_subcommand("criteria", "Randomness criterion tools");
  auto* check = crit->add_subcommand("check", "Run the randomness criterion on an architecture matrix");
  crit->require_subcommand(1);
  std::string arch_path, report_out, spectrum_out;
  int bins = 50;
  std::uint64_t crit_seed = 1;
  CriterionThresholds th;
  check->add_option("--arch", arch_path, "BitMatrix JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--json", report_out, "Report output ('-' for stdout)");
  check->add_option("--spectrum", spectrum_out, "Spectral histogram CSV");
  check->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
  check->add_option("--seed", crit_seed, "Seed for pair and submatrix sampling");
  check->add_option("--ks-max", th.ks_max, "Kolmogorov-Smirnov threshold");
  check->add_option("--p-min", th.p_min, "Chi-square p-value threshold");
  check->add_option("--rank-min", th.rank_min, "Submatrix rank fraction threshold");

  // reservoir run
  auto* res = app.add_subcommand("reservoir", "Reservoir tools");
  auto* rrun = res->add_subcommand("run", "Features and accuracies for one reservoir");
  res->require_subcommand(1);
  std::string phase_params, family = "multibody-xy", features_out;
  int cycles = 10;
  bool no_ff = false;
  std::uint64_t res_seed = 1;
  rrun->add_option("--phase-params", phase_params, "Flat key = value file with dataset and phase parameters")
      ->check(CLI::ExistingFile);
  rrun->add_option("--family", family, "multibody-xy | tfi | heisenberg | xy");
  rrun->add_option("--cycles", cycles, "Floquet cycles")->check(CLI::Range(1, 1000));
  rrun->add_flag("--no-feed-forward", no_ff, "Drop the Pauli-frame update (multibody-xy)");
  rrun->add_option("--seed", res_seed, "Seed");
  rrun->add_option("--out", features_out, "Feature table CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*list) {
      for (const auto& e : registry()) std::cout << e.name << "\t" << e.description << '\n';
      return 0;
    }

    if (*run) {
      Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
      if (!experiment.empty()) cfg.set("experiment", experiment);
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      RunOptions opt;
      opt.out_dir = out_dir;
      opt.seed = seed;
      opt.seed_given = seed_opt->count() > 0;
      opt.threads = threads;
      return run_experiment(cfg, opt, std::cerr);
    }

    if (*gen) {
      const auto build = [&](std::uint64_t seed) {
        if (all_to_all > 0) return build_staircase_all_to_all(all_to_all, {D, r1, r2}, seed);
        const auto [w, h] = parse_grid(grid);
        return build_staircase(system_grid_layout(w, h), {D, r1, r2}, seed, path_iters);
      };
      const auto fs = build(iqp_layers > 0 ? derive_seed(gen_seed, "staircase", 0) : gen_seed);
      if (iqp_layers > 0) {
        std::vector<FanoutStaircase> stairs{fs};
        for (int l = 1; l < iqp_layers; ++l) stairs.push_back(build(derive_seed(gen_seed, "staircase", l)));
        const auto rot = random_rotations(stairs.size() + 1, fs.circuit.n_system, derive_seed(gen_seed, "angles", 0));
        write_file(gen_out, to_json(measurement_driven_circuit(stairs, rot)) + "\n");
        if (!iqp_out.empty()) write_file(iqp_out, to_json(effective_iqp(stairs, rot)) + "\n");
      } else {
        write_file(gen_out, to_json(fs.circuit) + "\n");
      }
      if (!arch_out.empty()) write_file(arch_out, to_json(fs.conjugation) + "\n");
      const auto counts = depth_and_counts(fs.circuit);
      std::cerr << "system " << fs.circuit.n_system << ", auxiliary " << fs.circuit.n_aux << ", cx " << counts.cx
                << ", cx depth " << counts.depth << ", measurements " << counts.measurements << '\n';
      return 0;
    }

    if (*sim) {
      const auto c = circuit_from_json(read_file(circuit_path));
      const auto branch_distribution = [](const DynamicResult& b) {
        auto p = output_distribution(b.system);
        double norm = 0;
        for (double v : p) norm += v;
        for (double& v : p) v /= norm;
        return p;
      };
      std::ostringstream os;
      if (mode == "exact") {
        Distribution d(std::size_t{1} << c.n_system, 0.0);
        try {
          for (const auto& b : run_dynamic_enumerate(c)) {
            if (b.probability <= 0) continue;
            const auto p = branch_distribution(b);
            for (std::size_t x = 0; x < d.size(); ++x) d[x] += b.probability * p[x];
          }
        } catch (const ResourceError& e) {
          // Born-sampled branches; exact whenever feed-forward makes every branch agree.
          std::cerr << "note: " << e.what() << "; averaging " << branch_samples << " sampled branches\n";
          std::fill(d.begin(), d.end(), 0.0);
          for (std::uint64_t k = 0; k < branch_samples; ++k) {
            const auto p = branch_distribution(run_dynamic_sample(c, derive_seed(sim_seed, "branch", k)));
            for (std::size_t x = 0; x < d.size(); ++x) d[x] += p[x] / static_cast<double>(branch_samples);
          }
        }
        write_distribution_csv(os, d);
        if (!binary_out.empty()) {
          std::ofstream b(binary_out, std::ios::binary);
          write_distribution_binary(b, d);
        }
      } else {
        // One trajectory per shot.
        std::map<std::uint64_t, std::uint64_t> counts;
        for (std::uint64_t k = 0; k < shots; ++k) {
          const auto p = branch_distribution(run_dynamic_sample(c, derive_seed(sim_seed, "shot", k)));
          const auto one = sample(p, 1, derive_seed(sim_seed, "readout", k));
          ++counts[static_cast<std::uint64_t>(std::find(one.begin(), one.end(), 1) - one.begin())];
        }
        os << "bitstring,count\n";
        for (const auto& [x, n] : counts) os << bitstring(x, c.n_system) << ',' << n << '\n';
      }
      write_file(sim_out, os.str());
      return 0;
    }

    if (*sweep) {
      const auto [w, h] = parse_grid(noise_grid);
      if (w * h > 12) throw ConfigError("noise sweeps are limited to 12 system qubits");
      const auto st = noise_study(w, h, layers, noise_D, model, values, t2_ns, layer_ns, instances, trajectories,
                                  noise_seed, 1);
      std::ostringstream csv;
      csv << "param,value,family,mean_tv,stddev,duration_ns,trajectories,seed\n";
      for (const auto& r : st.rows) {
        csv << r.param << ',' << num(r.value) << ",measurement-driven," << num(r.md_tv) << ',' << num(r.md_sd) << ','
            << num(r.md_duration_ns) << ',' << r.trajectories << ',' << noise_seed << '\n';
        csv << r.param << ',' << num(r.value) << ",unitary," << num(r.unitary_tv) << ',' << num(r.unitary_sd) << ','
            << num(r.unitary_duration_ns) << ',' << r.trajectories << ',' << noise_seed << '\n';
      }
      write_file(noise_out, csv.str());
      return 0;
    }

    if (*check) {
      const auto a = bitmatrix_from_json(read_file(arch_path));
      const auto r = criterion1(a, th, crit_seed);
      write_file(report_out.empty() ? "-" : report_out, to_json(r) + "\n");
      if (!spectrum_out.empty()) {
        const auto cov = standardized_covariance(a);
        std::ostringstream os;
        write_spectrum_csv(os, covariance_spectrum(cov), cov.gamma, bins);
        write_file(spectrum_out, os.str());
      }
      std::cerr << "criterion: " << (r.overall ? "PASS" : "FAIL") << '\n';
      return 0;
    }

    if (*rrun) {
      Config pc = phase_params.empty() ? Config{} : Config::load(phase_params);
      DatasetConfig dc;
      dc.n = static_cast<std::size_t>(pc.integer("n", 8));
      dc.levels = static_cast<std::size_t>(pc.integer("levels", 20));
      dc.per_class = static_cast<std::size_t>(pc.integer("per_class", 150));
      dc.perturb_sigma = std::sqrt(pc.num("perturb_variance", 0.03));
      dc.shots = pc.u64("shots", 8192);
      dc.readout_error = pc.num("readout_error", 5e-3);
      dc.cycles = cycles;
      const int width = static_cast<int>(pc.integer("width", 4));
      const int height = static_cast<int>(pc.integer("height", static_cast<std::int64_t>(dc.n) / 4));
      if (static_cast<std::size_t>(width * height) != dc.n) throw ConfigError("width * height must equal n");
      std::vector<SshSpec> phases;
      for (Phase p : {Phase::trivial, Phase::topological, Phase::symmetry_broken}) {
        auto s = phase_parameters(p, dc.n);
        const auto key = to_string(p);
        s.J = pc.num(key + ".J", s.J);
        s.Jp = pc.num(key + ".Jp", s.Jp);
        s.delta = pc.num(key + ".delta", s.delta);
        phases.push_back(s);
      }
      const double total_time = pc.num("total_time", 1.0);
      pc.reject_unused();
      const double tau = total_time / (2.0 * cycles);
      const auto data = ssh_dataset(dc, phases, derive_seed(res_seed, "ssh", 0));
      ReservoirSpec r;
      const auto f = family_from_string(family);
      if (f == Family::multibody) {
        r = measurement_reservoir(width, height, 2, true, tau, derive_seed(res_seed, "arch-multibody", 0));
        r.feed_forward = !no_ff;
      } else {
        r = local_reservoir(f, dc.n, grid_edges(width, height), tau, derive_seed(res_seed, "arch-" + family, 0));
      }
      const auto t = build_features(r, data, dc, derive_seed(res_seed, "features", 0));
      if (!features_out.empty()) {
        std::ostringstream os;
        write_features_csv(os, t);
        write_file(features_out, os.str());
      }
      const auto x = cycle_features(t, cycles);
      ClassifierParams knn, ridge;
      ridge.kind = Classifier::ridge;
      const auto split = derive_seed(res_seed, "split", 0);
      std::cout << "family " << family << (no_ff ? " (no feed-forward)" : "") << ", cycle " << cycles
                << ": knn " << num(train_eval(x, t.labels, knn, split)) << ", ridge "
                << num(train_eval(x, t.labels, ridge, split)) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
