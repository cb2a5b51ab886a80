#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rishp {

using cdouble = std::complex<double>;

/// Dense complex matrix, row-major. Small by construction (K, M <= 8 here),
/// so everything is value-semantic and allocation is not a concern.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries);
  ComplexMatrix(std::initializer_list<std::initializer_list<cdouble>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const cdouble> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  cdouble& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const cdouble& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<cdouble> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const cdouble> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const cdouble> entries() const noexcept { return data_; }
  std::span<cdouble> entries() noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cdouble> data_;
};

ComplexMatrix hermitian(const ComplexMatrix& a);

/// Throws ShapeError when a.cols() != b.rows().
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cdouble s, const ComplexMatrix& a);

double frobenius_norm(const ComplexMatrix& a);

/// Gram-matrix condition numbers above this are treated as singular.
inline constexpr double kSingularConditionLimit = 1e12;

/// Inverse of a Hermitian positive definite matrix via Cholesky.
/// Throws SingularityError if a pivot is non-positive or the 1-norm
/// condition estimate exceeds kSingularConditionLimit.
ComplexMatrix hpd_inverse(const ComplexMatrix& gram);

namespace detail {
/// In-place core of hpd_inverse on n x n row-major buffers; `scratch` needs n*n + n
/// entries. Returns false instead of throwing. Used by allocation-free hot loops.
bool hpd_inverse_into(std::span<const cdouble> gram, std::size_t n, std::span<cdouble> inv,
                      std::span<cdouble> scratch) noexcept;
}  // namespace detail

/// Right pseudo-inverse A^H (A A^H)^{-1} of a full-row-rank matrix.
/// Throws ShapeError when rows > cols and SingularityError when rank-deficient.
ComplexMatrix right_pinv(const ComplexMatrix& a);

}  // namespace rishp
