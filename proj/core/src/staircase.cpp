#include "mdiqp/staircase.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mdiqp/rng.hpp"

namespace mdiqp {

void DynamicCircuit::append(const DynamicCircuit& other) {
  if (other.n_system != n_system) throw std::invalid_argument("append: system register mismatch");
  n_aux = std::max(n_aux, other.n_aux);
  const std::size_t offset = n_slots;
  for (auto ins : other.ops) {
    if (ins.op == OpCode::measure_x) ins.slot += offset;
    for (auto& f : ins.frame) f += offset;
    ops.push_back(std::move(ins));
  }
  n_slots += other.n_slots;
}

namespace {

// Emits one ladder along `path` (already oriented) into `c`.
void emit_ladder(DynamicCircuit& c, const LadderPath& path, StaircaseParams p, std::mt19937_64& rng,
                 const std::vector<std::vector<std::uint8_t>>* adj, FanoutStaircase& fs) {
  const std::size_t n = path.system.size();
  const std::size_t ns = c.n_system;
  auto sys = [&](std::size_t i) { return path.system[i]; };
  auto aux = [&](std::size_t j) { return ns + path.aux[j]; };
  auto linked = [&](std::size_t i, std::size_t j) { return adj == nullptr || (*adj)[path.system[i]][path.aux[j]]; };

  for (int r = 0; r < p.r1; ++r) {
    for (std::size_t i = 0; i + 1 < n; ++i) c.ops.push_back(Instruction::cx(sys(i), aux(i)));
    for (std::size_t i = 0; i + 1 < n; ++i) c.ops.push_back(Instruction::cx(aux(i), sys(i + 1)));
  }

  // Path indices are 0-based here: aux j sits between system j and j + 1,
  // matching the 1-based windows 0 <= j - i < n/r2 and r1 < k - j < n/r2.
  const double span = static_cast<double>(n) / p.r2;
  auto in_window_8 = [&](std::size_t i, std::size_t j) { return j >= i && static_cast<double>(j - i) < span; };
  auto in_window_11 = [&](std::size_t j, std::size_t k) {
    return k > j && static_cast<long>(k - j) > p.r1 && static_cast<double>(k - j) < span;
  };
  for (int r = 0; r < p.r2; ++r) {
    std::vector<std::uint8_t> aux_used(n, 0), sys_used(n, 0);
    std::vector<std::size_t> acted;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<double>(n - 1) - i < span) ++fs.window_clamps;
      std::vector<std::size_t> cand;
      for (std::size_t j = i; j + 1 < n; ++j) {
        if (!in_window_8(i, j) || aux_used[j] || !linked(i, j)) continue;
        bool has_target = false;
        for (std::size_t k = j + 1; k < n && !has_target; ++k) has_target = in_window_11(j, k) && linked(k, j);
        if (has_target) cand.push_back(j);
      }
      if (cand.empty()) continue;
      const std::size_t j = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
      aux_used[j] = 1;
      acted.push_back(j);
      c.ops.push_back(Instruction::cx(sys(i), aux(j)));
    }
    std::sort(acted.begin(), acted.end());
    for (std::size_t j : acted) {
      std::vector<std::size_t> cand;
      for (std::size_t k = j + 1; k < n; ++k)
        if (in_window_11(j, k) && !sys_used[k] && linked(k, j)) cand.push_back(k);
      if (cand.empty()) {
        ++fs.skipped_partners;
        continue;
      }
      const std::size_t k = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
      sys_used[k] = 1;
      c.ops.push_back(Instruction::cx(aux(j), sys(k)));
    }
  }

  for (std::size_t j = 0; j + 1 < n; ++j) c.ops.push_back(Instruction::measure_x(aux(j), c.n_slots++));
  for (std::size_t j = 0; j + 1 < n; ++j) c.ops.push_back(Instruction::reset_aux(aux(j)));
}

LadderPath reversed(const LadderPath& p) {
  LadderPath r = p;
  std::reverse(r.system.begin(), r.system.end());
  std::reverse(r.aux.begin(), r.aux.end());
  return r;
}

}  // namespace

FanoutStaircase build_staircase_on_paths(std::size_t n_system, std::size_t n_aux, const std::vector<LadderPath>& paths,
                                         StaircaseParams p, std::uint64_t seed,
                                         const std::vector<std::vector<std::uint8_t>>* adjacency) {
  if (n_system < 2) throw std::invalid_argument("build_staircase: the path needs at least 2 system qubits");
  if (n_aux + 1 < n_system) throw std::invalid_argument("build_staircase: need n - 1 auxiliary qubits");
  if (p.D < 1 || p.r1 < 1 || p.r2 < 0) throw std::invalid_argument("build_staircase: need D >= 1, r1 >= 1, r2 >= 0");
  if (paths.size() != static_cast<std::size_t>(p.D)) throw std::invalid_argument("build_staircase: one path per round");
  FanoutStaircase fs;
  fs.circuit.n_system = n_system;
  fs.circuit.n_aux = n_aux;
  auto rng = make_rng(seed);
  for (const auto& path : paths) {
    if (path.system.size() != n_system || path.aux.size() + 1 != n_system)
      throw std::invalid_argument("build_staircase: path must list n system and n - 1 aux qubits");
    emit_ladder(fs.circuit, path, p, rng, adjacency, fs);
    emit_ladder(fs.circuit, reversed(path), p, rng, adjacency, fs);
  }
  fs.system_map = system_map(fs.circuit);
  fs.conjugation = inverse_gf2(fs.system_map).transpose();
  fs.transfers = all_transfer_matrices(fs.circuit);
  return fs;
}

FanoutStaircase build_staircase(const GridLayout& layout, StaircaseParams p, std::uint64_t seed, int path_iterations) {
  std::vector<std::size_t> sys_index(layout.size()), aux_index(layout.size());
  std::size_t ns = 0, na = 0;
  for (std::size_t i = 0; i < layout.size(); ++i)
    (layout.role(i) == Role::system ? sys_index[i] = ns++ : aux_index[i] = na++);
  std::vector<std::vector<std::uint8_t>> adj(ns, std::vector<std::uint8_t>(na, 0));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout.role(i) != Role::system) continue;
    for (auto nb : layout.neighbors(layout.site(i)))
      if (layout.role(nb) == Role::auxiliary) adj[sys_index[i]][aux_index[layout.index(nb)]] = 1;
  }
  std::vector<LadderPath> paths;
  for (int d = 0; d < p.D; ++d) {
    auto sites = random_hamiltonian_path(layout, path_iterations, derive_seed(seed, "path", d));
    if (layout.role(sites.front()) == Role::auxiliary) std::reverse(sites.begin(), sites.end());
    if (layout.role(sites.front()) == Role::auxiliary) sites.erase(sites.begin());
    if (layout.role(sites.back()) == Role::auxiliary) sites.pop_back();
    LadderPath lp;
    for (auto s : sites) {
      const std::size_t i = layout.index(s);
      (layout.role(i) == Role::system ? lp.system.push_back(sys_index[i]) : lp.aux.push_back(aux_index[i]));
    }
    paths.push_back(std::move(lp));
  }
  return build_staircase_on_paths(ns, na, paths, p, derive_seed(seed, "fanout", 0), &adj);
}

FanoutStaircase build_staircase_all_to_all(std::size_t n, StaircaseParams p, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("build_staircase: the path needs at least 2 system qubits");
  auto rng = make_rng(derive_seed(seed, "path", 0));
  std::vector<LadderPath> paths;
  for (int d = 0; d < p.D; ++d) {
    LadderPath lp;
    lp.system.resize(n);
    lp.aux.resize(n - 1);
    std::iota(lp.system.begin(), lp.system.end(), 0);
    std::iota(lp.aux.begin(), lp.aux.end(), 0);
    std::shuffle(lp.system.begin(), lp.system.end(), rng);
    std::shuffle(lp.aux.begin(), lp.aux.end(), rng);
    paths.push_back(std::move(lp));
  }
  return build_staircase_on_paths(n, n - 1, paths, p, derive_seed(seed, "fanout", 0), nullptr);
}

std::size_t count_rounds(const DynamicCircuit& c) {
  std::size_t rounds = 0;
  bool prev = false;
  for (const auto& ins : c.ops) {
    const bool m = ins.op == OpCode::measure_x;
    if (m && !prev) ++rounds;
    prev = m;
  }
  return rounds;
}

namespace {

struct LinearTrace {
  std::vector<BitMatrix> measured;  // per round: input forms of the measured qubits
  std::vector<std::vector<std::size_t>> slots;
};

LinearTrace trace_linear(const DynamicCircuit& c) {
  const std::size_t n = c.n_system;
  BitMatrix wires(c.n_qubits(), n);
  for (std::size_t i = 0; i < n; ++i) wires.set(i, i, true);
  LinearTrace tr;
  std::vector<std::size_t> qubits, slots, all_cols(n);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  auto close_round = [&]() {
    tr.measured.push_back(wires.select(qubits, all_cols));
    tr.slots.push_back(slots);
    qubits.clear();
    slots.clear();
  };
  for (const auto& ins : c.ops) {
    if (ins.op != OpCode::measure_x && !qubits.empty()) close_round();
    switch (ins.op) {
      case OpCode::cx: wires.add_row(ins.q1, ins.q0); break;
      case OpCode::rz: break;
      case OpCode::measure_x:
        if (!c.is_aux(ins.q0)) throw std::invalid_argument("measure_x must target an auxiliary qubit");
        qubits.push_back(ins.q0);
        slots.push_back(ins.slot);
        break;
      case OpCode::reset_aux:
        for (auto& w : wires.row(ins.q0)) w = 0;
        break;
      case OpCode::h: throw std::invalid_argument("transfer matrices need a circuit without Hadamards");
    }
  }
  if (!qubits.empty()) close_round();
  return tr;
}

}  // namespace

BitMatrix system_map(const DynamicCircuit& c) {
  BitMatrix w(c.n_qubits(), c.n_system);
  for (std::size_t i = 0; i < c.n_system; ++i) w.set(i, i, true);
  for (const auto& ins : c.ops) {
    if (ins.op == OpCode::cx) w.add_row(ins.q1, ins.q0);
    else if (ins.op == OpCode::reset_aux) for (auto& x : w.row(ins.q0)) x = 0;
    else if (ins.op == OpCode::h) throw std::invalid_argument("system_map needs a circuit without Hadamards");
  }
  BitMatrix b(c.n_system, c.n_system);
  for (std::size_t i = 0; i < c.n_system; ++i)
    for (std::size_t k = 0; k < b.words_per_row(); ++k) b.row(i)[k] = w.row(i)[k];
  return b;
}

std::vector<TransferMatrix> all_transfer_matrices(const DynamicCircuit& c) {
  // Phase picked up by outcome vector m of a round is (-1)^{m . L x} on the
  // input x; with output y = B x that is the Z string (L B^{-1})^T m.
  auto tr = trace_linear(c);
  const BitMatrix binv = inverse_gf2(system_map(c));
  std::vector<TransferMatrix> out;
  for (std::size_t r = 0; r < tr.measured.size(); ++r)
    out.push_back({mat_mul_gf2(tr.measured[r], binv).transpose(), r, tr.slots[r]});
  return out;
}

TransferMatrix transfer_matrix(const DynamicCircuit& c, std::size_t round) {
  auto all = all_transfer_matrices(c);
  if (round >= all.size()) throw std::out_of_range("transfer_matrix: no such measurement round");
  return all[round];
}

IqpSpec effective_iqp(const std::vector<BitMatrix>& maps, const std::vector<std::vector<double>>& rotations) {
  if (rotations.size() != maps.size() + 1) throw std::invalid_argument("effective_iqp: need L + 1 rotation layers");
  const std::size_t n = rotations.front().size();
  for (const auto& r : rotations)
    if (r.size() != n) throw std::invalid_argument("effective_iqp: rotation layer size mismatch");
  const std::size_t L = maps.size();
  std::vector<BitMatrix> prefix(L + 1);
  prefix[L] = BitMatrix::identity(n);
  for (std::size_t i = L; i-- > 0;) prefix[i] = mat_mul_gf2(inverse_gf2(maps[i]), prefix[i + 1]);
  IqpSpec spec;
  std::size_t kept = 0;
  for (std::size_t i = 0; i <= L; ++i)
    for (std::size_t j = 0; j < n; ++j) kept += !prefix[i].row_is_zero(j);
  spec.A = BitMatrix(kept, n);
  std::size_t r = 0;
  for (std::size_t i = 0; i <= L; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (prefix[i].row_is_zero(j)) {
        spec.global_phase = canonical_angle(spec.global_phase + rotations[i][j]);
        continue;
      }
      for (std::size_t k = 0; k < spec.A.words_per_row(); ++k) spec.A.row(r)[k] = prefix[i].row(j)[k];
      spec.theta.push_back(canonical_angle(rotations[i][j]));
      ++r;
    }
  return spec;
}

IqpSpec effective_iqp(const std::vector<FanoutStaircase>& stairs, const std::vector<std::vector<double>>& rotations) {
  std::vector<BitMatrix> maps;
  for (const auto& s : stairs) maps.push_back(s.system_map);
  return effective_iqp(maps, rotations);
}

double canonical_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r < 0) r += two_pi;
  if (r >= two_pi - 1e-15) r = 0.0;
  return r;
}

std::vector<double> feedforward_update(const std::vector<double>& angles, const BitMatrix& T, const BitVec& m) {
  if (T.rows() != angles.size()) throw std::invalid_argument("feedforward_update: dimension mismatch");
  const BitVec z = mat_vec_gf2(T, m);
  std::vector<double> out(angles.size());
  for (std::size_t j = 0; j < angles.size(); ++j) out[j] = canonical_angle(angles[j] + (z[j] ? std::numbers::pi / 2 : 0.0));
  return out;
}

DynamicCircuit measurement_driven_circuit(const std::vector<FanoutStaircase>& stairs,
                                          const std::vector<std::vector<double>>& rotations) {
  if (rotations.size() != stairs.size() + 1) throw std::invalid_argument("measurement_driven_circuit: need L + 1 rotation layers");
  const std::size_t n = rotations.front().size();
  DynamicCircuit c;
  c.n_system = n;
  for (std::size_t q = 0; q < n; ++q) c.ops.push_back(Instruction::h(q));
  for (std::size_t q = 0; q < n; ++q) c.ops.push_back(Instruction::rz(q, rotations[0][q]));
  for (std::size_t i = 0; i < stairs.size(); ++i) {
    const auto& fs = stairs[i];
    if (fs.circuit.n_system != n) throw std::invalid_argument("measurement_driven_circuit: staircase size mismatch");
    const std::size_t offset = c.n_slots;
    c.append(fs.circuit);
    std::vector<std::vector<std::size_t>> frame(n);
    for (const auto& t : fs.transfers)
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t col = 0; col < t.t.cols(); ++col)
          if (t.t.get(q, col)) frame[q].push_back(t.slots[col] + offset);
    for (std::size_t q = 0; q < n; ++q) c.ops.push_back(Instruction::rz(q, rotations[i + 1][q], frame[q]));
  }
  for (std::size_t q = 0; q < n; ++q) c.ops.push_back(Instruction::h(q));
  return c;
}

DynamicCircuit unitary_iqp_circuit(std::size_t n, const std::vector<CxGateList>& networks,
                                   const std::vector<std::vector<double>>& rotations) {
  if (rotations.size() != networks.size() + 1) throw std::invalid_argument("unitary_iqp_circuit: need L + 1 rotation layers");
  DynamicCircuit c;
  c.n_system = n;
  for (std::size_t q = 0; q < n; ++q) c.ops.push_back(Instruction::h(q));
  for (std::size_t i = 0; i <= networks.size(); ++i) {
    if (i > 0)
      for (const auto& g : networks[i - 1]) c.ops.push_back(Instruction::cx(g.control, g.target));
    for (std::size_t q = 0; q < n; ++q) c.ops.push_back(Instruction::rz(q, rotations[i][q]));
  }
  for (std::size_t q = 0; q < n; ++q) c.ops.push_back(Instruction::h(q));
  return c;
}

CxGateList random_nn_cx_network(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges, int depth,
                                std::uint64_t seed) {
  auto rng = make_rng(seed);
  CxGateList out;
  auto order = edges;
  std::vector<std::uint8_t> busy(n);
  for (int d = 0; d < depth; ++d) {
    std::shuffle(order.begin(), order.end(), rng);
    std::fill(busy.begin(), busy.end(), 0);
    for (auto [a, b] : order) {
      if (busy[a] || busy[b]) continue;
      busy[a] = busy[b] = 1;
      if (rng() & 1) std::swap(a, b);
      out.push_back({a, b});
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> grid_edges(int width, int height) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width) e.push_back({i, i + 1});
      if (y + 1 < height) e.push_back({i, i + width});
    }
  return e;
}

std::vector<std::pair<std::size_t, std::size_t>> complete_edges(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.push_back({i, j});
  return e;
}

CxGateList route_on_grid(const CxGateList& gates, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("route_on_grid: empty grid");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const auto edges = grid_edges(width, height);
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  auto shortest = [&](std::size_t a, std::size_t b) {
    std::vector<std::size_t> prev(n, n), queue{a};
    prev[a] = a;
    for (std::size_t i = 0; i < queue.size() && prev[b] == n; ++i)
      for (auto v : adj[queue[i]])
        if (prev[v] == n) {
          prev[v] = queue[i];
          queue.push_back(v);
        }
    std::vector<std::size_t> path{b};
    while (path.back() != a) path.push_back(prev[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
  };
  CxGateList out;
  for (const auto& g : gates) {
    if (g.control >= n || g.target >= n || g.control == g.target)
      throw std::invalid_argument("route_on_grid: gate outside the grid");
    const auto v = shortest(g.control, g.target);
    const std::size_t d = v.size() - 1;
    if (d == 1) {
      out.push_back(g);
      continue;
    }
    // Prefix sums down the path, undo all but the end, then the same from v1.
    for (std::size_t k = 0; k < d; ++k) out.push_back({v[k], v[k + 1]});
    for (std::size_t k = d - 1; k-- > 0;) out.push_back({v[k], v[k + 1]});
    for (std::size_t k = 1; k < d; ++k) out.push_back({v[k], v[k + 1]});
    for (std::size_t k = d - 1; k-- > 1;) out.push_back({v[k], v[k + 1]});
  }
  return out;
}

std::vector<KlocalTerm> synthesize_klocal(std::size_t r, long long ell, std::size_t k) {
  if (r < 1 || k < 1) throw std::invalid_argument("synthesize_klocal: need r >= 1 and k >= 1");
  if (k >= 63 || ell < 0 || ell >= (1LL << k)) throw std::invalid_argument("synthesize_klocal: need 0 <= ell < 2^k");
  if (r > 30) throw std::invalid_argument("synthesize_klocal: r too large");
  const double theta = static_cast<double>(ell) * std::numbers::pi / std::ldexp(1.0, static_cast<int>(k));
  // Z^{(x)r} = sum_q (-2)^{|q|} x_q with x_q = prod (1 - Z_j)/2; terms with
  // |q| > k carry multiples of 2 pi. Collecting Z_p coefficients gives
  // theta * sum_{t <= k - |p|} (-1)^t C(r - |p|, t).
  auto binom = [](std::size_t a, std::size_t b) {
    double v = 1.0;
    for (std::size_t i = 0; i < b; ++i) v = v * static_cast<double>(a - i) / static_cast<double>(i + 1);
    return b > a ? 0.0 : v;
  };
  std::vector<double> weight_coeff(r + 1, 0.0);
  for (std::size_t w = 1; w <= std::min(r, k); ++w) {
    double s = 0.0;
    for (std::size_t t = 0; t + w <= k && t + w <= r; ++t) s += (t % 2 ? -1.0 : 1.0) * binom(r - w, t);
    weight_coeff[w] = s;
  }
  std::vector<KlocalTerm> out;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << r); ++mask) {
    const auto w = static_cast<std::size_t>(std::popcount(mask));
    if (w > k || weight_coeff[w] == 0.0 || ell == 0) continue;
    KlocalTerm term;
    for (std::size_t j = 0; j < r; ++j)
      if (mask >> j & 1) term.support.push_back(j);
    term.angle = theta * weight_coeff[w];
    out.push_back(std::move(term));
  }
  return out;
}

CircuitCounts depth_and_counts(const DynamicCircuit& c) {
  CircuitCounts out;
  std::vector<std::size_t> front(c.n_qubits(), 0);
  for (const auto& ins : c.ops) {
    if (ins.op == OpCode::cx) {
      const std::size_t layer = std::max(front[ins.q0], front[ins.q1]) + 1;
      front[ins.q0] = front[ins.q1] = layer;
      out.depth = std::max(out.depth, layer);
      ++out.cx;
    } else if (ins.op == OpCode::measure_x) {
      ++out.measurements;
    }
  }
  return out;
}

namespace {
const char* op_name(OpCode op) {
  switch (op) {
    case OpCode::cx: return "cx";
    case OpCode::h: return "h";
    case OpCode::rz: return "rz";
    case OpCode::measure_x: return "measure_x";
    case OpCode::reset_aux: return "reset_aux";
  }
  return "?";
}
OpCode op_from(const std::string& s) {
  if (s == "cx") return OpCode::cx;
  if (s == "h") return OpCode::h;
  if (s == "rz") return OpCode::rz;
  if (s == "measure_x") return OpCode::measure_x;
  if (s == "reset_aux") return OpCode::reset_aux;
  throw std::invalid_argument("unknown opcode: " + s);
}
}  // namespace

std::string to_json(const DynamicCircuit& c) {
  nlohmann::json j;
  j["n_system"] = c.n_system;
  j["n_aux"] = c.n_aux;
  j["n_slots"] = c.n_slots;
  auto& ops = j["ops"] = nlohmann::json::array();
  for (const auto& ins : c.ops) {
    nlohmann::json o;
    o["op"] = op_name(ins.op);
    if (ins.op == OpCode::cx) o["qubits"] = {ins.q0, ins.q1};
    else o["qubits"] = {ins.q0};
    if (ins.op == OpCode::rz) {
      o["angle"] = ins.angle;
      if (!ins.frame.empty()) o["frame"] = ins.frame;
    }
    if (ins.op == OpCode::measure_x) o["slot"] = ins.slot;
    ops.push_back(std::move(o));
  }
  return j.dump();
}

DynamicCircuit circuit_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DynamicCircuit c;
  c.n_system = j.at("n_system").get<std::size_t>();
  c.n_aux = j.at("n_aux").get<std::size_t>();
  c.n_slots = j.at("n_slots").get<std::size_t>();
  for (const auto& o : j.at("ops")) {
    Instruction ins{op_from(o.at("op").get<std::string>()), 0, 0, 0.0, 0, {}};
    const auto qs = o.at("qubits").get<std::vector<std::size_t>>();
    if (qs.empty() || (ins.op == OpCode::cx && qs.size() != 2)) throw std::invalid_argument("bad qubit list");
    ins.q0 = qs[0];
    if (ins.op == OpCode::cx) ins.q1 = qs[1];
    for (auto q : qs)
      if (q >= c.n_qubits()) throw std::invalid_argument("qubit index out of range");
    if (ins.op == OpCode::rz) {
      ins.angle = o.at("angle").get<double>();
      if (o.contains("frame")) ins.frame = o.at("frame").get<std::vector<std::size_t>>();
    }
    if (ins.op == OpCode::measure_x) ins.slot = o.at("slot").get<std::size_t>();
    c.ops.push_back(std::move(ins));
  }
  return c;
}

std::string to_json(const IqpSpec& s) {
  nlohmann::json j;
  auto& rows = j["A"] = nlohmann::json::array();
  for (std::size_t r = 0; r < s.A.rows(); ++r) rows.push_back(s.A.row_string(r));
  j["n"] = s.n();
  j["theta"] = s.theta;
  j["global_phase"] = s.global_phase;
  return j.dump();
}

IqpSpec iqp_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  IqpSpec s;
  const auto rows = j.at("A").get<std::vector<std::string>>();
  s.A = rows.empty() ? BitMatrix(0, j.value("n", std::size_t{0})) : BitMatrix::from_rows(rows);
  s.theta = j.at("theta").get<std::vector<double>>();
  s.global_phase = j.value("global_phase", 0.0);
  if (s.theta.size() != s.A.rows()) throw std::invalid_argument("iqp json: theta length differs from row count");
  return s;
}

}  // namespace mdiqp
