#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mdiqp {

using BitVec = std::vector<std::uint8_t>;

// Dense binary matrix, rows packed into 64-bit words.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols);

  static BitMatrix identity(std::size_t n);
  static BitMatrix random(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
  static BitMatrix from_rows(const std::vector<std::string>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_row() const { return wpr_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  bool get(std::size_t r, std::size_t c) const {
    return (bits_[r * wpr_ + (c >> 6)] >> (c & 63)) & 1u;
  }
  void set(std::size_t r, std::size_t c, bool v) {
    std::uint64_t& w = bits_[r * wpr_ + (c >> 6)];
    const std::uint64_t m = std::uint64_t{1} << (c & 63);
    w = v ? (w | m) : (w & ~m);
  }
  void flip(std::size_t r, std::size_t c) { bits_[r * wpr_ + (c >> 6)] ^= std::uint64_t{1} << (c & 63); }

  std::span<std::uint64_t> row(std::size_t r) { return {bits_.data() + r * wpr_, wpr_}; }
  std::span<const std::uint64_t> row(std::size_t r) const { return {bits_.data() + r * wpr_, wpr_}; }

  // row dst ^= row src
  void add_row(std::size_t dst, std::size_t src);
  void swap_rows(std::size_t a, std::size_t b);
  std::size_t row_weight(std::size_t r) const;
  bool row_is_zero(std::size_t r) const;
  BitVec row_bits(std::size_t r) const;
  BitVec col_bits(std::size_t c) const;
  std::string row_string(std::size_t r) const;

  BitMatrix transpose() const;
  BitMatrix select(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const;

  friend bool operator==(const BitMatrix& a, const BitMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.bits_ == b.bits_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t wpr_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct CxGate {
  std::size_t control;
  std::size_t target;
  friend bool operator==(const CxGate&, const CxGate&) = default;
};
using CxGateList = std::vector<CxGate>;

std::size_t rank_gf2(const BitMatrix& m);
BitMatrix mat_mul_gf2(const BitMatrix& a, const BitMatrix& b);
BitVec mat_vec_gf2(const BitMatrix& m, const BitVec& v);

// Throws std::domain_error when m is singular.
BitMatrix inverse_gf2(const BitMatrix& m);

// Gates in circuit order: applying them as row operations (row t ^= row c)
// to the identity reproduces m. Throws std::domain_error when m is singular.
CxGateList synthesize_cx_circuit(const BitMatrix& m);
BitMatrix apply_cx_gates(std::size_t n, const CxGateList& gates);

// Probability that a uniform n x n matrix over GF(2) has rank n - k.
double kolchin_probability(std::size_t n, std::size_t k);
// n -> infinity limit of kolchin_probability.
double kolchin_limit(std::size_t k);

std::string to_json(const BitMatrix& m);
BitMatrix bitmatrix_from_json(const std::string& text);
std::vector<std::uint8_t> to_binary(const BitMatrix& m);
BitMatrix bitmatrix_from_binary(std::span<const std::uint8_t> bytes);

}  // namespace mdiqp
