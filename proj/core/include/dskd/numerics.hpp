#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dskd {

/// Dense row-major matrix of doubles. The universal numeric carrier for
/// activations, embeddings, weights and correlation matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Builds a matrix from nested row literals; all rows must have equal length.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  /// Element-wise equality of shape and every stored bit pattern-equal value.
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a × b. Each output entry accumulates over the inner dimension in
/// ascending order, so results are bit-reproducible.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ × b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a × bᵀ without materialising the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Euclidean norm of every column.
std::vector<double> column_l2_norms(const Matrix& a);

/// Rows `indices` of `a`, in the given order.
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);

bool all_finite(const Matrix& a) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);

/// SplitMix64 stream with Box-Muller normals. Every normal consumes exactly two
/// raw outputs and only the cosine branch is used, so the whole generator state
/// is one 64-bit word and streams concatenate cleanly.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double normal() noexcept;
  std::vector<double> normal(std::size_t n);
  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Convenience free function matching the stream contract.
std::vector<double> rng_normal(SeededRng& rng, std::size_t n);

/// Derives an independent seed for a named sub-stream (data split, batching, init...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace dskd
