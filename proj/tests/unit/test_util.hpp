#pragma once

#include <complex>
#include <random>

#include "rishp/channel.hpp"
#include "rishp/numerics.hpp"

namespace rishp::testing {

inline ComplexMatrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (auto& z : m.entries()) z = {nd(gen), nd(gen)};
  return m;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.entries()[i] - b.entries()[i]));
  return d;
}

/// Block-diagonal all-ones G without going through the library.
inline FeederGains ones_feeder(std::size_t n, std::size_t m) {
  const std::size_t ns = n / m;
  ComplexMatrix g(n, m);
  for (std::size_t i = 0; i < n; ++i) g(i, i / ns) = 1.0;
  return {g};
}

}  // namespace rishp::testing
