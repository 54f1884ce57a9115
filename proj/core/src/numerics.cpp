#include "dskd/numerics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "simd.hpp"

namespace dskd {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

namespace {

// out[i, :] = Σ_p A(i, p) · B[p, :], p ascending for every entry. Four output rows
// share each load of a B row; the inner loop over columns vectorises without
// reordering any sum. A(i, p) = pa[i * si + p * sp].
DSKD_VECTOR_CLONES
void gemm_rows(const double* pa, std::size_t si, std::size_t sp, const double* pb, double* po,
               std::size_t n, std::size_t k, std::size_t m) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double* o0 = po + i * m;
    double* o1 = o0 + m;
    double* o2 = o1 + m;
    double* o3 = o2 + m;
    for (std::size_t p = 0; p < k; ++p) {
      const double a0 = pa[i * si + p * sp], a1 = pa[(i + 1) * si + p * sp];
      const double a2 = pa[(i + 2) * si + p * sp], a3 = pa[(i + 3) * si + p * sp];
      const double* __restrict brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        const double bv = brow[j];
        o0[j] += a0 * bv;
        o1[j] += a1 * bv;
        o2[j] += a2 * bv;
        o3[j] += a3 * bv;
      }
    }
  }
  for (; i < n; ++i) {
    double* __restrict orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * si + p * sp];
      const double* __restrict brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + a.shape_string() + " * " +
                                b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  gemm_rows(a.data().data(), a.cols(), 1, b.data().data(), out.data().data(), a.rows(), a.cols(),
            b.cols());
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: shape mismatch " + a.shape_string() + "^T * " +
                                b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  gemm_rows(a.data().data(), 1, a.cols(), b.data().data(), out.data().data(), a.cols(), a.rows(),
            b.cols());
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: shape mismatch " + a.shape_string() + " * " +
                                b.shape_string() + "^T");
  }
  // Same per-entry accumulation order as a dot product, but the ikj kernel vectorises.
  return matmul(a, transpose(b));
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

std::vector<double> column_l2_norms(const Matrix& a) {
  std::vector<double> sq(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) sq[c] += row[c] * row[c];
  }
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) {
      throw std::out_of_range("gather_rows: index " + std::to_string(indices[i]) +
                              " out of range for " + a.shape_string());
    }
    const auto src = a.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

bool all_finite(const Matrix& a) noexcept {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("max_abs_diff: shape mismatch " + a.shape_string() + " vs " +
                                b.shape_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

std::uint64_t SeededRng::next_u64() noexcept {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SeededRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> SeededRng::normal(std::size_t n) {
  std::vector<double> out(n);
  for (double& v : out) v = normal();
  return out;
}

std::uint64_t SeededRng::below(std::uint64_t n) noexcept {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

std::vector<double> rng_normal(SeededRng& rng, std::size_t n) { return rng.normal(n); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  SeededRng mix(seed ^ (stream * 0xd1342543de82ef95ULL));
  mix.next_u64();
  return mix.next_u64();
}

}  // namespace dskd
