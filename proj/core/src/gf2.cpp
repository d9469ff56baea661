#include "mdiqp/gf2.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mdiqp {

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), wpr_((cols + 63) / 64), bits_(rows * ((cols + 63) / 64), 0) {}

BitMatrix BitMatrix::identity(std::size_t n) {
  BitMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
  return m;
}

BitMatrix BitMatrix::random(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  BitMatrix m(rows, cols);
  const std::size_t tail = cols & 63;
  const std::uint64_t mask = tail == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    auto w = m.row(r);
    for (auto& x : w) x = rng();
    if (!w.empty()) w.back() &= mask;
  }
  return m;
}

BitMatrix BitMatrix::from_rows(const std::vector<std::string>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  BitMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw std::invalid_argument("ragged bit rows");
    for (std::size_t c = 0; c < cols; ++c) {
      const char ch = rows[r][c];
      if (ch != '0' && ch != '1') throw std::invalid_argument("bit rows must contain only 0/1");
      m.set(r, c, ch == '1');
    }
  }
  return m;
}

void BitMatrix::add_row(std::size_t dst, std::size_t src) {
  std::uint64_t* d = bits_.data() + dst * wpr_;
  const std::uint64_t* s = bits_.data() + src * wpr_;
  for (std::size_t k = 0; k < wpr_; ++k) d[k] ^= s[k];
}

void BitMatrix::swap_rows(std::size_t a, std::size_t b) {
  if (a == b) return;
  std::swap_ranges(bits_.begin() + a * wpr_, bits_.begin() + (a + 1) * wpr_, bits_.begin() + b * wpr_);
}

std::size_t BitMatrix::row_weight(std::size_t r) const {
  std::size_t w = 0;
  for (auto x : row(r)) w += std::popcount(x);
  return w;
}

bool BitMatrix::row_is_zero(std::size_t r) const {
  for (auto x : row(r))
    if (x) return false;
  return true;
}

BitVec BitMatrix::row_bits(std::size_t r) const {
  BitVec v(cols_);
  for (std::size_t c = 0; c < cols_; ++c) v[c] = get(r, c);
  return v;
}

BitVec BitMatrix::col_bits(std::size_t c) const {
  BitVec v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = get(r, c);
  return v;
}

std::string BitMatrix::row_string(std::size_t r) const {
  std::string s(cols_, '0');
  for (std::size_t c = 0; c < cols_; ++c)
    if (get(r, c)) s[c] = '1';
  return s;
}

BitMatrix BitMatrix::transpose() const {
  BitMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto w = row(r);
    for (std::size_t k = 0; k < wpr_; ++k) {
      std::uint64_t x = w[k];
      while (x) {
        const std::size_t c = k * 64 + std::countr_zero(x);
        t.set(c, r, true);
        x &= x - 1;
      }
    }
  }
  return t;
}

BitMatrix BitMatrix::select(const std::vector<std::size_t>& rs, const std::vector<std::size_t>& cs) const {
  BitMatrix out(rs.size(), cs.size());
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = 0; j < cs.size(); ++j)
      if (get(rs[i], cs[j])) out.set(i, j, true);
  return out;
}

namespace {

// Reduces m in place to row echelon form, returns rank.
std::size_t echelon(BitMatrix& m) {
  std::size_t rank = 0;
  for (std::size_t c = 0; c < m.cols() && rank < m.rows(); ++c) {
    std::size_t p = rank;
    while (p < m.rows() && !m.get(p, c)) ++p;
    if (p == m.rows()) continue;
    m.swap_rows(rank, p);
    const std::size_t word = c >> 6;
    const std::uint64_t bit = std::uint64_t{1} << (c & 63);
    for (std::size_t r = rank + 1; r < m.rows(); ++r)
      if (m.row(r)[word] & bit) m.add_row(r, rank);
    ++rank;
  }
  return rank;
}

}  // namespace

std::size_t rank_gf2(const BitMatrix& m) {
  BitMatrix work = m;
  return echelon(work);
}

BitMatrix mat_mul_gf2(const BitMatrix& a, const BitMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("mat_mul_gf2: inner dimensions differ");
  BitMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (!a.get(i, k)) continue;
      auto src = b.row(k);
      for (std::size_t w = 0; w < dst.size(); ++w) dst[w] ^= src[w];
    }
  }
  return out;
}

BitVec mat_vec_gf2(const BitMatrix& m, const BitVec& v) {
  if (m.cols() != v.size()) throw std::invalid_argument("mat_vec_gf2: dimension mismatch");
  BitVec out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::uint8_t acc = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc ^= static_cast<std::uint8_t>(m.get(i, j) & (v[j] & 1));
    out[i] = acc;
  }
  return out;
}

BitMatrix inverse_gf2(const BitMatrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("inverse_gf2: matrix not square");
  BitMatrix a = m;
  BitMatrix inv = BitMatrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && !a.get(p, c)) ++p;
    if (p == n) throw std::domain_error("inverse_gf2: matrix is singular");
    a.swap_rows(c, p);
    inv.swap_rows(c, p);
    for (std::size_t r = 0; r < n; ++r) {
      if (r != c && a.get(r, c)) {
        a.add_row(r, c);
        inv.add_row(r, c);
      }
    }
  }
  return inv;
}

CxGateList synthesize_cx_circuit(const BitMatrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("synthesize_cx_circuit: matrix not square");
  BitMatrix a = m;
  CxGateList ops;  // elimination order; ops reduce m to the identity
  auto row_op = [&](std::size_t dst, std::size_t src) {
    a.add_row(dst, src);
    ops.push_back({src, dst});
  };
  for (std::size_t c = 0; c < n; ++c) {
    if (!a.get(c, c)) {
      std::size_t p = c + 1;
      while (p < n && !a.get(p, c)) ++p;
      if (p == n) throw std::domain_error("synthesize_cx_circuit: matrix is not invertible");
      row_op(c, p);
    }
    for (std::size_t r = c + 1; r < n; ++r)
      if (a.get(r, c)) row_op(r, c);
  }
  for (std::size_t c = n; c-- > 0;)
    for (std::size_t r = 0; r < c; ++r)
      if (a.get(r, c)) row_op(r, c);
  // Each elementary op is an involution, so m is the product in reverse order.
  std::reverse(ops.begin(), ops.end());
  return ops;
}

BitMatrix apply_cx_gates(std::size_t n, const CxGateList& gates) {
  BitMatrix m = BitMatrix::identity(n);
  for (const auto& g : gates) {
    if (g.control == g.target || g.control >= n || g.target >= n) throw std::invalid_argument("bad CX gate");
    m.add_row(g.target, g.control);
  }
  return m;
}

double kolchin_probability(std::size_t n, std::size_t k) {
  if (k > n) throw std::invalid_argument("kolchin_probability: k > n");
  double log_p = -static_cast<double>(k * k) * std::log(2.0);
  for (std::size_t l = 0; l + k < n; ++l) log_p += std::log1p(-std::ldexp(1.0, -static_cast<int>(n - l)));
  // f[v] = sum over nondecreasing length-j sequences in [0, v] of 2^-(sum)
  const std::size_t top = n - k;
  std::vector<double> f(top + 1, 1.0);
  for (std::size_t j = 1; j <= k; ++j) {
    std::vector<double> g(top + 1, 0.0);
    for (std::size_t v = 0; v <= top; ++v) {
      const double prev = v == 0 ? 0.0 : g[v - 1];
      g[v] = prev + std::ldexp(1.0, -static_cast<int>(v)) * f[v];
    }
    f = std::move(g);
  }
  return std::exp(log_p) * f[top];
}

double kolchin_limit(std::size_t k) {
  double log_p = -static_cast<double>(k * k) * std::log(2.0);
  for (std::size_t i = k + 1; i < 1100; ++i) log_p += std::log1p(-std::ldexp(1.0, -static_cast<int>(i)));
  for (std::size_t i = 1; i <= k; ++i) log_p -= std::log1p(-std::ldexp(1.0, -static_cast<int>(i)));
  return std::exp(log_p);
}

std::string to_json(const BitMatrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto& bits = j["bits"] = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) bits.push_back(m.row_string(r));
  return j.dump();
}

BitMatrix bitmatrix_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto strs = j.at("bits").get<std::vector<std::string>>();
  if (strs.size() != rows) throw std::invalid_argument("bit matrix json: row count mismatch");
  if (rows == 0) return BitMatrix(0, cols);
  BitMatrix m = BitMatrix::from_rows(strs);
  if (m.cols() != cols) throw std::invalid_argument("bit matrix json: column count mismatch");
  return m;
}

namespace {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[at + i]} << (8 * i);
  return v;
}
}  // namespace

// Header: rows, cols as little-endian u32. Body: rows * words_per_row
// little-endian u64 words.
std::vector<std::uint8_t> to_binary(const BitMatrix& m) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (auto w : m.row(r))
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
  return out;
}

BitMatrix bitmatrix_from_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw std::invalid_argument("bit matrix binary: short header");
  const std::size_t rows = get_u32(bytes, 0);
  const std::size_t cols = get_u32(bytes, 4);
  BitMatrix m(rows, cols);
  if (bytes.size() != 8 + rows * m.words_per_row() * 8) throw std::invalid_argument("bit matrix binary: size mismatch");
  std::size_t at = 8;
  for (std::size_t r = 0; r < rows; ++r)
    for (auto& w : m.row(r)) {
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[at + i]} << (8 * i);
      w = v;
      at += 8;
    }
  return m;
}

}  // namespace mdiqp
