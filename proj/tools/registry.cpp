#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "experiments.hpp"
#include "mdiqp/rng.hpp"

#ifndef MDIQP_GIT_DESCRIBE
#define MDIQP_GIT_DESCRIBE "unknown"
#endif

namespace mdiqp::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string git_describe() { return MDIQP_GIT_DESCRIBE; }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::size_t> to_sizes(const std::vector<std::int64_t>& v, const std::string& key) {
  std::vector<std::size_t> out;
  for (auto x : v) {
    if (x < 1) throw ConfigError("'" + key + "' entries must be positive");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::vector<int> to_ints(const std::vector<std::int64_t>& v, const std::string& key, int lo) {
  std::vector<int> out;
  for (auto x : v) {
    if (x < lo || x > 1 << 20) throw ConfigError("'" + key + "' entries out of range");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

int positive(const Config& c, const std::string& key, std::int64_t fallback, std::int64_t hi = 1 << 24) {
  const auto v = c.integer(key, fallback);
  if (v < 1 || v > hi) throw ConfigError("'" + key + "' must lie in [1, " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

Generator parse_generator(const std::string& s) {
  if (s == "ancilla-free") return Generator::ancilla_free;
  if (s == "measurement-driven") return Generator::measurement_driven;
  throw ConfigError("unknown generator '" + s + "' (ancilla-free | measurement-driven)");
}

Connectivity parse_connectivity(const std::string& s) {
  if (s == "grid") return Connectivity::grid;
  if (s == "all-to-all") return Connectivity::all_to_all;
  throw ConfigError("unknown connectivity '" + s + "' (grid | all-to-all)");
}

CriterionThresholds thresholds(const Config& c) {
  CriterionThresholds th;
  th.ks_max = c.num("ks_max", th.ks_max);
  th.p_min = c.num("p_min", th.p_min);
  th.rank_min = c.num("rank_min", th.rank_min);
  th.rank_trials = positive(c, "rank_trials", th.rank_trials);
  return th;
}

// Experiments -----------------------------------------------------------------

Job criteria_scan(const Config& c) {
  std::vector<Generator> gens;
  for (const auto& g : c.strs("generators", {"measurement-driven", "ancilla-free"})) gens.push_back(parse_generator(g));
  std::vector<Connectivity> conns;
  for (const auto& s : c.strs("connectivities", {"all-to-all", "grid"})) conns.push_back(parse_connectivity(s));
  const auto a2a = to_sizes(c.integers("all_to_all_sizes", {64, 128, 256}), "all_to_all_sizes");
  const auto grid = to_sizes(c.integers("grid_sizes", {36, 64, 100}), "grid_sizes");
  for (auto n : grid) {
    const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (r * r != n) throw ConfigError("grid_sizes must be perfect squares");
  }
  const int seeds = positive(c, "seeds", 10);
  const int max_depth = positive(c, "max_depth", 128, 4096);
  const auto th = thresholds(c);
  return [=](const RunContext& ctx) {
    std::ostringstream csv;
    csv << "generator,connectivity,n,min_depth,cx_depth,pass_fraction\n";
    for (auto g : gens)
      for (auto cn : conns) {
        ctx.step("scan " + to_string(g) + " / " + to_string(cn));
        const auto rows = min_depth_scan(g, cn, cn == Connectivity::grid ? grid : a2a, seeds, max_depth,
                                         derive_seed(ctx.seed, "criteria-scan", static_cast<std::uint64_t>(g) * 2 +
                                                                                    static_cast<std::uint64_t>(cn)),
                                         th);
        for (const auto& r : rows)
          csv << to_string(r.generator) << ',' << to_string(r.connectivity) << ',' << r.n << ',' << r.min_depth << ','
              << r.cx_depth << ',' << num(r.pass_fraction) << '\n';
      }
    return JobResult{{{"criteria_scan.csv", csv.str()}}, {}};
  };
}

Job equivalence(const Config& c) {
  const int configs = positive(c, "configs", 30, 10000);
  const int layers = positive(c, "max_layers", 2, 3);
  const int D = positive(c, "max_D", 2, 3);
  const auto exhaustive = static_cast<std::size_t>(positive(c, "exhaustive_slots", 12, 20));
  return [=](const RunContext& ctx) {
    ctx.step("check " + std::to_string(configs) + " configurations");
    const auto s = equivalence_oracle(configs, layers, D, derive_seed(ctx.seed, "equivalence-oracle", 0), ctx.threads,
                                      exhaustive);
    std::ostringstream csv;
    csv << "config,n,layers,D,grid,aux,slots,branches,exhaustive,max_error\n";
    std::size_t branches = 0;
    for (std::size_t i = 0; i < s.cases.size(); ++i) {
      const auto& e = s.cases[i];
      branches += e.branches;
      csv << i << ',' << e.n << ',' << e.layers << ',' << e.D << ',' << e.grid << ',' << e.aux << ',' << e.slots << ','
          << e.branches << ',' << e.exhaustive << ',' << num(e.max_error) << '\n';
    }
    ordered_json j;
    j["configs"] = configs;
    j["branches"] = branches;
    j["max_error"] = s.max_error;
    j["tolerance"] = s.tolerance;
    j["pass"] = s.pass;
    ctx.step(std::string("equivalence ") + (s.pass ? "PASS" : "FAIL"));
    return JobResult{{{"equivalence.csv", csv.str()}, {"summary.json", j.dump(2) + "\n"}}, {}};
  };
}

Job tv_sweep_job(const Config& c) {
  const auto model = c.str("model", "depol");
  std::vector<double> fallback;
  if (model == "depol") fallback = {1e-3, 3e-3, 1e-2, 3e-2};
  else if (model == "dephase") fallback = {1e4, 3e4, 1e5};
  else if (model == "duration") fallback = {0, 25, 50, 100, 200, 400, 800, 1600, 3200};
  else throw ConfigError("model must be depol, dephase or duration");
  const auto values = c.nums("values", fallback);
  if (values.empty()) throw ConfigError("'values' must not be empty");
  const int width = positive(c, "width", 3, 4), height = positive(c, "height", 2, 4);
  const int layers = positive(c, "layers", 2, 4), D = positive(c, "D", 2, 4);
  const int instances = positive(c, "instances", 20), trajectories = positive(c, "trajectories", 2000);
  const double t2 = c.num("t2_ns", model == "duration" ? 2e4 : std::numeric_limits<double>::infinity());
  const double layer_ns = c.num("layer_ns", 200);
  if (width * height > 12) throw ConfigError("width * height must be at most 12");
  for (double v : values) {
    NoiseModel nm;
    nm.t2_ns = t2;
    nm.layer_ns = layer_ns;
    if (model == "depol") nm.p2 = v;
    if (model == "dephase") nm.t2_ns = v;
    if (model == "duration") nm.layer_ns = v;
    try {
      validate(nm);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid sweep value: ") + e.what());
    }
  }
  return [=](const RunContext& ctx) {
    ctx.step("sweep " + model + " over " + std::to_string(values.size()) + " values");
    const auto st = noise_study(width, height, layers, D, model, values, t2, layer_ns, instances, trajectories,
                                derive_seed(ctx.seed, "tv-sweep", 0), ctx.threads);
    std::ostringstream csv;
    csv << "param,value,family,mean_tv,stddev,duration_ns,trajectories,seed\n";
    for (const auto& r : st.rows) {
      csv << r.param << ',' << num(r.value) << ",measurement-driven," << num(r.md_tv) << ',' << num(r.md_sd) << ','
          << num(r.md_duration_ns) << ',' << r.trajectories << ',' << ctx.seed << '\n';
      csv << r.param << ',' << num(r.value) << ",unitary," << num(r.unitary_tv) << ',' << num(r.unitary_sd) << ','
          << num(r.unitary_duration_ns) << ',' << r.trajectories << ',' << ctx.seed << '\n';
    }
    ordered_json j;
    j["model"] = model;
    j["grid"] = std::to_string(width) + "x" + std::to_string(height);
    j["mean_cx"]["measurement-driven"] = st.md_cx;
    j["mean_cx"]["unitary"] = st.unitary_cx;
    j["mean_cx_depth"]["measurement-driven"] = st.md_depth;
    j["mean_cx_depth"]["unitary"] = st.unitary_depth;
    if (model == "duration" && st.rows.size() >= 3) {
      for (int fam = 0; fam < 2; ++fam) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : st.rows)
          pts.emplace_back(fam ? r.unitary_duration_ns : r.md_duration_ns, fam ? r.unitary_tv : r.md_tv);
        const auto f = fit_saturation(pts);
        j["fit"][fam ? "unitary" : "measurement-driven"] = {{"delta_inf", f.delta_inf},
                                                             {"kappa_per_ns", f.kappa},
                                                             {"rms_residual", f.residual},
                                                             {"degenerate", f.degenerate}};
      }
    }
    std::map<std::string, std::string> notes{
        {"noise_placement", "joint 15-Pauli depolarizing after each cx; Z dephasing per cx layer from a qubit's first operation"},
        {"unitary_baseline", "same effective IQP circuit: Gaussian-elimination CX synthesis routed on the system grid"}};
    return JobResult{{{"tv_sweep.csv", csv.str()}, {"summary.json", j.dump(2) + "\n"}}, notes};
  };
}

Job anticoncentration_job(const Config& c) {
  const auto widths = to_ints(c.integers("widths", {2, 3, 4}), "widths", 2);
  for (int w : widths)
    if (w > 4) throw ConfigError("widths above 4 exceed the state-vector cap");
  const int layers = positive(c, "layers", 2, 4), D = positive(c, "D", 2, 4);
  const int instances = positive(c, "instances", 30);
  return [=](const RunContext& ctx) {
    ctx.step("collision probabilities");
    const auto rows = anticoncentration(widths, layers, D, instances, derive_seed(ctx.seed, "anticoncentration", 0),
                                        ctx.threads);
    std::ostringstream csv;
    csv << "n,cx_depth,instances,md_ratio,md_sem,af_ratio,af_sem\n";
    for (const auto& r : rows)
      csv << r.n << ',' << r.cx_depth << ',' << r.instances << ',' << num(r.md_mean) << ',' << num(r.md_sem) << ','
          << num(r.af_mean) << ',' << num(r.af_sem) << '\n';
    return JobResult{{{"collision.csv", csv.str()}},
                     {{"ancilla_free_baseline", "random nearest-neighbor CX networks with the staircase's CX depth"}}};
  };
}

Job xi_job(const Config& c) {
  const auto widths = to_ints(c.integers("widths", {3, 4}), "widths", 2);
  for (int w : widths)
    if (w > 4) throw ConfigError("widths above 4 exceed the state-vector cap");
  const int layers = positive(c, "layers", 2, 4), D = positive(c, "D", 2, 4);
  const int instances = positive(c, "instances", 20);
  return [=](const RunContext& ctx) {
    ctx.step("entanglement cost");
    const auto rows = xi_comparison(widths, layers, D, instances, derive_seed(ctx.seed, "xi-comparison", 0), ctx.threads);
    std::ostringstream csv;
    csv << "width,cx_depth,instances,xi_md,xi_af,xi_lin,md_ratio,af_ratio\n";
    for (const auto& r : rows)
      csv << r.width << ',' << r.cx_depth << ',' << r.instances << ',' << num(r.md) << ',' << num(r.af) << ','
          << num(r.lin) << ',' << num(r.md_ratio) << ',' << num(r.af_ratio) << '\n';
    std::map<std::string, std::string> notes;
    if (!rows.empty()) notes["xi_lin_baseline"] = rows.front().baseline;
    return JobResult{{{"xi.csv", csv.str()}}, notes};
  };
}

ReservoirBenchSettings reservoir_settings(const Config& c) {
  ReservoirBenchSettings s;
  s.width = positive(c, "width", s.width, 4);
  s.height = positive(c, "height", s.height, 4);
  s.data.n = static_cast<std::size_t>(s.width * s.height);
  if (s.data.n % 2 != 0 || s.data.n > 12) throw ConfigError("width * height must be even and at most 12");
  s.data.levels = static_cast<std::size_t>(positive(c, "levels", 20, 4096));
  s.data.per_class = static_cast<std::size_t>(positive(c, "per_class", 150));
  s.data.cycles = positive(c, "cycles", 10, 1000);
  s.data.shots = static_cast<std::uint64_t>(positive(c, "shots", 8192));
  s.data.readout_error = c.num("readout_error", 5e-3);
  s.data.trajectories = positive(c, "trajectories", 16);
  const double variance = c.num("perturb_variance", 0.03);
  if (variance < 0) throw ConfigError("perturb_variance must be non-negative");
  s.data.perturb_sigma = std::sqrt(variance);
  if (s.data.readout_error < 0 || s.data.readout_error > 1) throw ConfigError("readout_error must lie in [0, 1]");
  s.rounds = positive(c, "D", 2, 8);
  s.identity_rows = c.boolean("identity_rows", true);
  s.total_time = c.num("total_time", 1.0);
  if (s.total_time <= 0) throw ConfigError("total_time must be positive");
  s.architectures = positive(c, "architectures", 10);
  s.families = c.strs("families", s.families);
  for (const auto& f : s.families)
    if (f != "multibody-xy-noff") try {
        family_from_string(f);
      } catch (const std::exception&) {
        throw ConfigError("unknown family '" + f + "'");
      }
  s.knn.k = positive(c, "knn_k", 21);
  s.ridge.ridge_lambda = c.num("ridge_lambda", 1.0);
  s.knn.train_fraction = s.ridge.train_fraction = c.num("train_fraction", 0.7);
  if (s.knn.train_fraction <= 0 || s.knn.train_fraction >= 1) throw ConfigError("train_fraction must lie in (0, 1)");
  return s;
}

Job reservoir_job(const Config& c) {
  const auto s = reservoir_settings(c);
  return [=](const RunContext& ctx) {
    ctx.step("reservoir benchmark over " + std::to_string(s.families.size()) + " families");
    const auto b = reservoir_bench(s, derive_seed(ctx.seed, "reservoir-bench", 0), ctx.threads);
    std::ostringstream csv;
    csv << "family,architecture,cycle,knn_accuracy,ridge_accuracy\n";
    for (const auto& r : b.rows)
      csv << r.family << ',' << r.architecture << ',' << r.cycle << ',' << num(r.knn) << ',' << num(r.ridge) << '\n';
    ordered_json j;
    j["cycle"] = s.data.cycles;
    for (std::size_t i = 0; i < b.families.size(); ++i)
      j["mean_accuracy"][b.families[i]] = {{"knn", b.knn_mean[i]}, {"ridge", b.ridge_mean[i]}};
    std::map<std::string, std::string> notes{
        {"tau", num(s.total_time / (2.0 * s.data.cycles))},
        {"perturbation", "Rz then Rx per qubit, angles N(0, variance)"},
        {"no_feed_forward", "unheralded byproduct string drawn per sector exponential, averaged over trajectories"}};
    return JobResult{{{"accuracy.csv", csv.str()}, {"summary.json", j.dump(2) + "\n"}}, notes};
  };
}

Job readout_gap_job(const Config& c) {
  const auto n = static_cast<std::size_t>(positive(c, "n", 9, 20));
  const auto graph = c.str("graph", "path");
  if (graph != "path" && graph != "grid") throw ConfigError("graph must be path or grid");
  const auto eps = c.nums("epsilons", {0.0, 0.01});
  const int seeds = positive(c, "seeds", 10);
  return [=](const RunContext& ctx) {
    ctx.step("readout gaps");
    const auto rows = readout_gaps(n, graph == "path" ? Graph::path : Graph::grid, eps, seeds,
                                    derive_seed(ctx.seed, "readout-gap", 0));
    std::ostringstream csv;
    csv << "epsilon,seed,triplet,min_distance,gap_measurement_driven,gap_local\n";
    for (const auto& r : rows) {
      csv << num(r.epsilon) << ',' << r.seed << ',';
      for (std::size_t k = 0; k < r.gap.triplet.size(); ++k) csv << (k ? " " : "") << r.gap.triplet[k];
      csv << ',' << r.gap.min_distance << ',' << num(r.gap.gap_measurement_driven) << ',' << num(r.gap.gap_local) << '\n';
    }
    return JobResult{{{"gaps.csv", csv.str()}}, {}};
  };
}

}  // namespace

const std::vector<Experiment>& registry() {
  static const std::vector<Experiment> r{
      {"anticoncentration", "collision probability ratio of measurement-driven vs depth-matched ancilla-free IQP",
       anticoncentration_job},
      {"criteria-scan", "minimal depth passing the randomness criterion per generator, connectivity and size", criteria_scan},
      {"equivalence-oracle", "feed-forward dynamic circuits vs their effective IQP circuits, branch by branch",
       equivalence},
      {"reservoir-bench", "SSH phase classification accuracy per reservoir family and cycle", reservoir_job},
      {"readout-gap", "readout gap of the measurement-driven reservoir vs a local TFI cycle", readout_gap_job},
      {"tv-sweep", "noisy vs ideal total variation for measurement-driven and compiled unitary circuits", tv_sweep_job},
      {"xi-comparison", "summed cut entanglement relative to the linear-depth baseline", xi_job},
  };
  return r;
}

const Experiment* find_experiment(const std::string& name) {
  for (const auto& e : registry())
    if (e.name == name) return &e;
  return nullptr;
}

int run_experiment(const Config& cfg, const RunOptions& opt, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  Job job;
  std::string name;
  std::uint64_t seed = 0;
  try {
    name = cfg.str("experiment", "");
    if (name.empty()) throw ConfigError("no experiment given (use --experiment or an 'experiment' key)");
    const auto* e = find_experiment(name);
    if (!e) throw ConfigError("unknown experiment '" + name + "' (see 'mdiqp list')");
    seed = cfg.u64("seed", 1);
    if (opt.seed_given) seed = opt.seed;
    job = e->prepare(cfg);
    cfg.reject_unused();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
  if (opt.out_dir.empty()) {
    log << "error: --out is required\n";
    return 2;
  }
  const fs::path out(opt.out_dir);
  std::error_code ec;
  if (fs::exists(out, ec) && !(fs::is_directory(out, ec) && fs::is_empty(out, ec))) {
    log << "error: output directory " << out << " exists and is not empty\n";
    return 2;
  }

  std::vector<std::string> steps;
  RunContext ctx;
  ctx.seed = seed;
  ctx.threads = opt.threads;
  ctx.step = [&](const std::string& s) {
    steps.push_back(s);
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "[" << name << " " << num(t) << "s] " << s << '\n';
  };
  JobResult result;
  try {
    result = job(ctx);
  } catch (const std::exception& e) {
    log << "error: step " << steps.size() << " (" << (steps.empty() ? "setup" : steps.back()) << ") failed: " << e.what()
        << '\n';
    return 1;
  }

  ordered_json meta;
  meta["experiment"] = name;
  meta["seed"] = seed;
  meta["git_describe"] = git_describe();
  meta["config"] = cfg.raw();
  meta["notes"] = result.notes;
  result.files.push_back({"metadata.json", meta.dump(2) + "\n"});
  std::string run_log;
  for (std::size_t i = 0; i < steps.size(); ++i) run_log += "step " + std::to_string(i + 1) + ": " + steps[i] + "\n";
  result.files.push_back({"run.log", run_log});
  ordered_json manifest;
  manifest["experiment"] = name;
  manifest["files"] = ordered_json::array();
  for (const auto& f : result.files)
    manifest["files"].push_back({{"name", f.name}, {"bytes", f.content.size()}, {"sha256", sha256_hex(f.content)}});
  result.files.push_back({"manifest.json", manifest.dump(2) + "\n"});

  // Written to a sibling directory and renamed so a failure leaves nothing behind.
  const fs::path tmp = out.string() + ".partial";
  try {
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    for (const auto& f : result.files) {
      std::ofstream o(tmp / f.name, std::ios::binary);
      o << f.content;
      if (!o) throw std::runtime_error("cannot write " + (tmp / f.name).string());
    }
    if (fs::exists(out)) fs::remove(out);
    fs::rename(tmp, out);
  } catch (const std::exception& e) {
    fs::remove_all(tmp, ec);
    log << "error: writing results failed: " << e.what() << '\n';
    return 1;
  }
  log << "wrote " << result.files.size() << " files to " << out.string() << '\n';
  return 0;
}

}  // namespace mdiqp::cli
