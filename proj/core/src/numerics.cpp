#include "rishp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rishp/errors.hpp"

namespace rishp {

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("ComplexMatrix: " + std::to_string(data_.size()) + " entries for a " +
                     std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
  }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cdouble>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ComplexMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const cdouble> diag) {
  ComplexMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

bool ComplexMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](const cdouble& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

ComplexMatrix hermitian(const ComplexMatrix& a) {
  ComplexMatrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = std::conj(a(r, c));
  return out;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cdouble aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("subtract: shape mismatch");
  ComplexMatrix out = a;
  auto dst = out.entries();
  auto src = b.entries();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

ComplexMatrix operator*(cdouble s, const ComplexMatrix& a) {
  ComplexMatrix out = a;
  for (auto& z : out.entries()) z *= s;
  return out;
}

double frobenius_norm(const ComplexMatrix& a) {
  double acc = 0.0;
  for (const auto& z : a.entries()) acc += std::norm(z);
  return std::sqrt(acc);
}


namespace detail {

bool hpd_inverse_into(std::span<const cdouble> gram, std::size_t n, std::span<cdouble> inv,
                      std::span<cdouble> scratch) noexcept {
  cdouble* l = scratch.data();  // lower-triangular Cholesky factor, gram = L L^H
  cdouble* y = scratch.data() + n * n;
  auto at = [n](auto* base, std::size_t r, std::size_t c) -> auto& { return base[r * n + c]; };

  for (std::size_t j = 0; j < n; ++j) {
    double pivot = gram[j * n + j].real();
    for (std::size_t k = 0; k < j; ++k) pivot -= std::norm(at(l, j, k));
    if (!(pivot > 0.0)) return false;
    const double d = std::sqrt(pivot);
    at(l, j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      cdouble s = gram[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= at(l, i, k) * std::conj(at(l, j, k));
      at(l, i, j) = s / d;
    }
    for (std::size_t i = 0; i < j; ++i) at(l, i, j) = 0.0;
  }

  // inv = L^{-H} L^{-1}, one column at a time.
  cdouble* out = inv.data();
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      cdouble s = (i == c) ? 1.0 : 0.0;
      for (std::size_t k = 0; k < i; ++k) s -= at(l, i, k) * y[k];
      y[i] = s / at(l, i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      cdouble s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(at(l, k, ii)) * at(out, k, c);
      at(out, ii, c) = s / at(l, ii, ii);
    }
  }

  double gram_norm = 0.0;
  double inv_norm = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double gc = 0.0;
    double ic = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      gc += std::abs(gram[r * n + c]);
      ic += std::abs(at(out, r, c));
    }
    gram_norm = std::max(gram_norm, gc);
    inv_norm = std::max(inv_norm, ic);
  }
  const double cond = gram_norm * inv_norm;
  return std::isfinite(cond) && cond <= kSingularConditionLimit;
}

}  // namespace detail

ComplexMatrix hpd_inverse(const ComplexMatrix& gram) {
  const std::size_t n = gram.rows();
  if (gram.cols() != n) throw ShapeError("hpd_inverse: matrix is not square");
  ComplexMatrix inv(n, n);
  std::vector<cdouble> scratch(n * n + n);
  if (!detail::hpd_inverse_into(gram.entries(), n, inv.entries(), scratch)) {
    throw SingularityError("hpd_inverse: Gram matrix is singular or ill-conditioned (limit " +
                           std::to_string(kSingularConditionLimit) + ")");
  }
  return inv;
}

ComplexMatrix right_pinv(const ComplexMatrix& a) {
  if (a.rows() > a.cols()) {
    throw ShapeError("right_pinv: needs rows <= cols, got " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()));
  }
  const ComplexMatrix ah = hermitian(a);
  return matmul(ah, hpd_inverse(matmul(a, ah)));
}

}  // namespace rishp
