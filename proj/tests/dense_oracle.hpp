#pragma once

// Small independent state-vector oracle for tests. Deliberately naive: it
// shares no code with the simulator under test.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "mdiqp/staircase.hpp"

namespace oracle {

using cplx = std::complex<double>;
using State = std::vector<cplx>;

inline void apply_cx(State& s, std::size_t c, std::size_t t) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if ((i >> c & 1) && !(i >> t & 1)) std::swap(s[i], s[i | (std::size_t{1} << t)]);
}

inline void apply_h(State& s, std::size_t q) {
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!(i >> q & 1)) {
      const std::size_t j = i | (std::size_t{1} << q);
      const cplx a = s[i], b = s[j];
      s[i] = r * (a + b);
      s[j] = r * (a - b);
    }
}

// exp(i a Z)
inline void apply_rz(State& s, std::size_t q, double a) {
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::polar(1.0, (i >> q & 1) ? -a : a);
}

inline void apply_z(State& s, std::size_t q) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i >> q & 1) s[i] = -s[i];
}

// Runs a dynamic circuit on the full register with prescribed outcomes and no
// renormalization, so the squared norm of the result is the branch weight.
inline State run(const mdiqp::DynamicCircuit& c, State s, const std::vector<std::uint8_t>& outcomes) {
  for (const auto& ins : c.ops) {
    switch (ins.op) {
      case mdiqp::OpCode::cx: apply_cx(s, ins.q0, ins.q1); break;
      case mdiqp::OpCode::h: apply_h(s, ins.q0); break;
      case mdiqp::OpCode::rz: {
        int parity = 0;
        for (auto f : ins.frame) parity ^= outcomes[f];
        apply_rz(s, ins.q0, ins.angle + (parity ? M_PI / 2 : 0.0));
        break;
      }
      case mdiqp::OpCode::measure_x: {
        apply_h(s, ins.q0);
        const std::size_t m = outcomes[ins.slot];
        for (std::size_t i = 0; i < s.size(); ++i)
          if ((i >> ins.q0 & 1) != m) s[i] = 0;
        apply_h(s, ins.q0);
        break;
      }
      case mdiqp::OpCode::reset_aux: {
        // The qubit is in |+> or |->; rotate to |0>/|1> and fold onto |0>.
        apply_h(s, ins.q0);
        for (std::size_t i = 0; i < s.size(); ++i)
          if (i >> ins.q0 & 1) {
            s[i & ~(std::size_t{1} << ins.q0)] += s[i];
            s[i] = 0;
          }
        break;
      }
    }
  }
  return s;
}

// Embeds a system state into the full register with auxiliaries in |0>.
inline State embed(const State& sys, std::size_t n_qubits) {
  State s(std::size_t{1} << n_qubits);
  for (std::size_t i = 0; i < sys.size(); ++i) s[i] = sys[i];
  return s;
}

// Drops auxiliaries assumed to be in |0>.
inline State restrict_system(const State& s, std::size_t n_system) {
  return State(s.begin(), s.begin() + (std::ptrdiff_t{1} << n_system));
}

// |<a|b>|^2 / (|a|^2 |b|^2)
inline double fidelity(const State& a, const State& b) {
  cplx ip = 0;
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ip += std::conj(a[i]) * b[i];
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  return std::norm(ip) / (na * nb);
}

inline double norm2(const State& a) {
  double n = 0;
  for (auto v : a) n += std::norm(v);
  return n;
}

}  // namespace oracle
