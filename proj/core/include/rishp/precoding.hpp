#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rishp/channel.hpp"
#include "rishp/numerics.hpp"

namespace rishp {

/// 1-bit RIS configuration: the diagonal of Phi, every entry -1 or +1.
class AnalogBeamformer {
 public:
  AnalogBeamformer() = default;
  /// Throws ConfigError if any entry is not exactly -1 or +1.
  explicit AnalogBeamformer(std::vector<std::int8_t> signs);

  static AnalogBeamformer all(std::size_t n, std::int8_t sign);

  std::size_t size() const noexcept { return signs_.size(); }
  std::int8_t operator[](std::size_t i) const noexcept { return signs_[i]; }
  std::span<const std::int8_t> signs() const noexcept { return signs_; }

  /// Returns a copy with entry i negated.
  AnalogBeamformer flipped(std::size_t i) const;

  friend bool operator==(const AnalogBeamformer&, const AnalogBeamformer&) = default;
  friend auto operator<=>(const AnalogBeamformer&, const AnalogBeamformer&) = default;

 private:
  std::vector<std::int8_t> signs_;
};

/// M x K, column k precodes user k.
struct DigitalPrecoder {
  ComplexMatrix F;
};

/// H_eq = H diag(phi) G, K x M.
ComplexMatrix effective_channel(const ChannelMatrix& ch, const AnalogBeamformer& phi,
                                const FeederGains& g);

/// F = sqrt(rho) P / ||P||_F with P = right_pinv(H_eq). Propagates SingularityError.
DigitalPrecoder zf_precoder(const ComplexMatrix& h_eq, double rho);

/// gamma_k = |h_k^H Phi G f_k|^2 / (sum_{k' != k} |h_k^H Phi G f_k'|^2 + sigma2).
double user_sinr(const ChannelMatrix& ch, const AnalogBeamformer& phi, const FeederGains& g,
                 const DigitalPrecoder& f, double sigma2, std::size_t k);

/// sum_k log2(1 + gamma_k), bits/s/Hz.
double sum_rate_from_sinrs(std::span<const double> sinrs);

double sum_rate(const ChannelMatrix& ch, const AnalogBeamformer& phi, const FeederGains& g,
                const DigitalPrecoder& f, double sigma2);

/// ZF precoding followed by sum_rate; a rank-deficient H_eq scores 0.
double zf_sum_rate(const ChannelMatrix& ch, const AnalogBeamformer& phi, const FeederGains& g,
                   const SystemConfig& cfg);

/// Allocation-free ZF sum-rate scorer for one (H, G) pair. Same arithmetic as
/// zf_sum_rate, restructured for the optimizers' inner loops. Not thread-safe;
/// give each thread its own instance.
class RateEvaluator {
 public:
  RateEvaluator(const ChannelMatrix& ch, const FeederGains& g, const SystemConfig& cfg);

  double operator()(std::span<const std::int8_t> phi);
  double operator()(const AnalogBeamformer& phi) { return (*this)(phi.signs()); }

  /// Sum-rate calls made so far.
  std::uint64_t evaluations() const noexcept { return evaluations_; }

  double sigma2() const noexcept { return sigma2_; }
  void set_sigma2(double sigma2) noexcept { sigma2_ = sigma2; }

 private:
  std::size_t n_, m_, k_, ns_;
  double rho_;
  double sigma2_;
  std::vector<cdouble> hg_;       // K x N, H[k][n] * G[n][block(n)]
  std::vector<cdouble> heq_;      // K x M
  std::vector<cdouble> gram_;     // K x K
  std::vector<cdouble> inv_;      // K x K
  std::vector<cdouble> scratch_;  // K*K + K
  std::vector<cdouble> p_;        // M x K
  std::uint64_t evaluations_ = 0;
};

}  // namespace rishp
