#include "rishp/precoding.hpp"

#include <cmath>
#include <string>

#include "rishp/errors.hpp"

namespace rishp {

AnalogBeamformer::AnalogBeamformer(std::vector<std::int8_t> signs) : signs_(std::move(signs)) {
  for (std::size_t i = 0; i < signs_.size(); ++i) {
    if (signs_[i] != 1 && signs_[i] != -1) {
      throw ConfigError("AnalogBeamformer: entry " + std::to_string(i) + " is " +
                        std::to_string(signs_[i]) + ", expected -1 or +1");
    }
  }
}

AnalogBeamformer AnalogBeamformer::all(std::size_t n, std::int8_t sign) {
  return AnalogBeamformer(std::vector<std::int8_t>(n, sign));
}

AnalogBeamformer AnalogBeamformer::flipped(std::size_t i) const {
  AnalogBeamformer out = *this;
  out.signs_.at(i) = static_cast<std::int8_t>(-out.signs_[i]);
  return out;
}

ComplexMatrix effective_channel(const ChannelMatrix& ch, const AnalogBeamformer& phi,
                                const FeederGains& g) {
  if (ch.H.cols() != phi.size() || g.G.rows() != phi.size()) {
    throw ShapeError("effective_channel: H is " + std::to_string(ch.H.rows()) + "x" +
                     std::to_string(ch.H.cols()) + ", phi has " + std::to_string(phi.size()) +
                     " entries, G has " + std::to_string(g.G.rows()) + " rows");
  }
  std::vector<cdouble> diag(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) diag[i] = static_cast<double>(phi[i]);
  return matmul(matmul(ch.H, ComplexMatrix::diagonal(diag)), g.G);
}

DigitalPrecoder zf_precoder(const ComplexMatrix& h_eq, double rho) {
  ComplexMatrix p = right_pinv(h_eq);
  const double norm = frobenius_norm(p);
  return {cdouble(std::sqrt(rho) / norm) * p};
}

namespace {

// K x K matrix of h_k^H Phi G f_k'.
ComplexMatrix received_gains(const ChannelMatrix& ch, const AnalogBeamformer& phi,
                             const FeederGains& g, const DigitalPrecoder& f) {
  return matmul(effective_channel(ch, phi, g), f.F);
}

double sinr_from_gains(const ComplexMatrix& b, double sigma2, std::size_t k) {
  double interference = 0.0;
  for (std::size_t kp = 0; kp < b.cols(); ++kp)
    if (kp != k) interference += std::norm(b(k, kp));
  return std::norm(b(k, k)) / (interference + sigma2);
}

}  // namespace

double user_sinr(const ChannelMatrix& ch, const AnalogBeamformer& phi, const FeederGains& g,
                 const DigitalPrecoder& f, double sigma2, std::size_t k) {
  const ComplexMatrix b = received_gains(ch, phi, g, f);
  if (k >= b.rows()) throw ShapeError("user_sinr: user index out of range");
  return sinr_from_gains(b, sigma2, k);
}

double sum_rate_from_sinrs(std::span<const double> sinrs) {
  double r = 0.0;
  for (double s : sinrs) r += std::log2(1.0 + s);
  return r;
}

double sum_rate(const ChannelMatrix& ch, const AnalogBeamformer& phi, const FeederGains& g,
                const DigitalPrecoder& f, double sigma2) {
  const ComplexMatrix b = received_gains(ch, phi, g, f);
  std::vector<double> sinrs(b.rows());
  for (std::size_t k = 0; k < b.rows(); ++k) sinrs[k] = sinr_from_gains(b, sigma2, k);
  return sum_rate_from_sinrs(sinrs);
}

double zf_sum_rate(const ChannelMatrix& ch, const AnalogBeamformer& phi, const FeederGains& g,
                   const SystemConfig& cfg) {
  try {
    const DigitalPrecoder f = zf_precoder(effective_channel(ch, phi, g), cfg.rho);
    return sum_rate(ch, phi, g, f, cfg.sigma2);
  } catch (const SingularityError&) {
    return 0.0;
  }
}

RateEvaluator::RateEvaluator(const ChannelMatrix& ch, const FeederGains& g,
                             const SystemConfig& cfg)
    : n_(cfg.N),
      m_(cfg.M),
      k_(cfg.K),
      ns_(cfg.Ns),
      rho_(cfg.rho),
      sigma2_(cfg.sigma2),
      hg_(cfg.K * cfg.N),
      heq_(cfg.K * cfg.M),
      gram_(cfg.K * cfg.K),
      inv_(cfg.K * cfg.K),
      scratch_(cfg.K * cfg.K + cfg.K),
      p_(cfg.M * cfg.K) {
  if (ch.H.rows() != k_ || ch.H.cols() != n_ || g.G.rows() != n_ || g.G.cols() != m_) {
    throw ShapeError("RateEvaluator: H or G does not match the system configuration");
  }
  for (std::size_t k = 0; k < k_; ++k)
    for (std::size_t n = 0; n < n_; ++n) hg_[k * n_ + n] = ch.H(k, n) * g.G(n, n / ns_);
}

double RateEvaluator::operator()(std::span<const std::int8_t> phi) {
  ++evaluations_;

  for (std::size_t k = 0; k < k_; ++k) {
    const cdouble* row = hg_.data() + k * n_;
    for (std::size_t m = 0; m < m_; ++m) {
      cdouble acc = 0.0;
      for (std::size_t i = m * ns_; i < (m + 1) * ns_; ++i) {
        acc += phi[i] > 0 ? row[i] : -row[i];
      }
      heq_[k * m_ + m] = acc;
    }
  }

  for (std::size_t a = 0; a < k_; ++a) {
    for (std::size_t b = 0; b < k_; ++b) {
      cdouble acc = 0.0;
      for (std::size_t m = 0; m < m_; ++m) acc += heq_[a * m_ + m] * std::conj(heq_[b * m_ + m]);
      gram_[a * k_ + b] = acc;
    }
  }
  if (!detail::hpd_inverse_into(gram_, k_, inv_, scratch_)) return 0.0;

  // P = H_eq^H inv, M x K.
  double p_norm2 = 0.0;
  for (std::size_t m = 0; m < m_; ++m) {
    for (std::size_t c = 0; c < k_; ++c) {
      cdouble acc = 0.0;
      for (std::size_t k = 0; k < k_; ++k) acc += std::conj(heq_[k * m_ + m]) * inv_[k * k_ + c];
      p_[m * k_ + c] = acc;
      p_norm2 += std::norm(acc);
    }
  }
  const double scale = std::sqrt(rho_) / std::sqrt(p_norm2);

  double rate = 0.0;
  for (std::size_t k = 0; k < k_; ++k) {
    double signal = 0.0;
    double interference = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      cdouble acc = 0.0;
      for (std::size_t m = 0; m < m_; ++m) acc += heq_[k * m_ + m] * p_[m * k_ + c];
      const double power = std::norm(scale * acc);
      if (c == k) {
        signal = power;
      } else {
        interference += power;
      }
    }
    rate += std::log2(1.0 + signal / (interference + sigma2_));
  }
  return rate;
}

}  // namespace rishp
