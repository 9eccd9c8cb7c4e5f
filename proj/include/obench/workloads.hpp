#pragma once

// Dense matrices, deterministic workload generation and the three
// offloadable kernels (multiplication, inversion, element-wise natural log).

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "obench/error.hpp"

namespace obench {

class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), 0.0) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw InvalidArgument("matrix data length " +
                            std::to_string(data_.size()) + " != " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  // Bitwise comparison: distinguishes -0.0 from 0.0 and compares NaN payloads.
  friend bool bit_equal(const Matrix& a, const Matrix& b) noexcept {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
    return std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(),
                      [](double x, double y) {
                        return std::bit_cast<std::uint64_t>(x) ==
                               std::bit_cast<std::uint64_t>(y);
                      });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  static std::size_t checked_size(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
      throw InvalidArgument("matrix dimensions must be positive");
    }
    return rows * cols;
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

// Wire identifiers are stable: MUL=1, INV=2, LN=3.
enum class OpKind : std::uint8_t { kMul = 1, kInv = 2, kLn = 3 };

inline constexpr OpKind kAllOps[] = {OpKind::kMul, OpKind::kInv, OpKind::kLn};

inline std::string_view to_string(OpKind op) {
  switch (op) {
    case OpKind::kMul: return "mul";
    case OpKind::kInv: return "inv";
    case OpKind::kLn: return "ln";
  }
  return "?";
}

inline std::optional<OpKind> parse_op(std::string_view name) {
  for (OpKind op : kAllOps) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

// xorshift64* (Vigna 2016): shifts 12/25/27, multiplier 0x2545F4914F6CDD1D.
// The seed is expanded through one SplitMix64 step so that seed 0 and
// neighbouring seeds give unrelated, nonzero states.
class XorShift64Star {
 public:
  explicit XorShift64Star(std::uint64_t seed) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    state_ = z ^ (z >> 31);
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
  }

  std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
  }

  // Uniform in [1, 2): the top 52 bits become the mantissa of 1.0.
  double next_unit_interval_shifted() noexcept {
    return std::bit_cast<double>(0x3FF0000000000000ull | (next() >> 12));
  }

 private:
  std::uint64_t state_;
};

// n x n matrix with entries uniform in [1, 2) drawn row-major from
// XorShift64Star(seed); the diagonal is then increased by n. Entries stay
// positive so every kernel is defined on the same input.
inline Matrix gen_matrix(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw InvalidArgument("gen_matrix: n must be >= 1");
  XorShift64Star rng(seed);
  Matrix m(n, n);
  for (double& x : m.data()) x = rng.next_unit_interval_shifted();
  for (std::size_t i = 0; i < n; ++i) m(i, i) += static_cast<double>(n);
  return m;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " times " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t width = b.cols();
  // i-k-j order: unit stride through b and c.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = c.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a(i, k);
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < width; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

inline constexpr double kPivotThreshold = 1e-12;

// Gauss-Jordan elimination with partial pivoting. The first row holding the
// largest pivot magnitude wins ties.
inline Matrix invert(const Matrix& a) {
  if (!a.square()) throw InvalidArgument("invert: matrix is not square");
  const std::size_t n = a.rows();
  Matrix work = a;
  Matrix inv = Matrix::identity(n);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot_row = k;
    double best = std::abs(work(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double mag = std::abs(work(i, k));
      if (mag > best) {
        best = mag;
        pivot_row = i;
      }
    }
    if (!(best >= kPivotThreshold)) {
      throw SingularMatrix("invert: pivot magnitude below 1e-12 in column " +
                           std::to_string(k));
    }
    if (pivot_row != k) {
      std::swap_ranges(work.row(k).begin(), work.row(k).end(),
                       work.row(pivot_row).begin());
      std::swap_ranges(inv.row(k).begin(), inv.row(k).end(),
                       inv.row(pivot_row).begin());
    }

    const double pivot = work(k, k);
    auto wk = work.row(k);
    auto ik = inv.row(k);
    for (std::size_t j = k; j < n; ++j) wk[j] /= pivot;
    for (std::size_t j = 0; j < n; ++j) ik[j] /= pivot;

    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      const double f = work(i, k);
      if (f == 0.0) continue;
      auto wi = work.row(i);
      auto ii = inv.row(i);
      for (std::size_t j = k; j < n; ++j) wi[j] -= f * wk[j];
      for (std::size_t j = 0; j < n; ++j) ii[j] -= f * ik[j];
    }
  }
  return inv;
}

inline Matrix elementwise_ln(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!(src[i] > 0.0)) {
      throw DomainError("elementwise_ln: element " + std::to_string(i) +
                        " is not positive");
    }
    dst[i] = std::log(src[i]);
  }
  return out;
}

// Runs one kernel. MUL squares its single operand so every op takes the
// same one-matrix request shape.
inline Matrix apply_op(OpKind op, const Matrix& a) {
  switch (op) {
    case OpKind::kMul:
      if (!a.square()) throw InvalidArgument("mul: operand must be square");
      return matmul(a, a);
    case OpKind::kInv: return invert(a);
    case OpKind::kLn: return elementwise_ln(a);
  }
  throw InvalidArgument("unknown op");
}

struct LocalResult {
  Matrix result;
  double seconds;
};

inline LocalResult local_execute(OpKind op, const Matrix& a) {
  const auto start = std::chrono::steady_clock::now();
  Matrix result = apply_op(op, a);
  const auto stop = std::chrono::steady_clock::now();
  return {std::move(result), std::chrono::duration<double>(stop - start).count()};
}

// Max-norm of A*B - I; used to check inverses.
inline double identity_residual(const Matrix& a, const Matrix& b) {
  const Matrix p = matmul(a, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < p.cols(); ++j) {
      worst = std::max(worst, std::abs(p(i, j) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace obench
