#include "rishp/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rishp/errors.hpp"

namespace rishp {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void SystemConfig::validate() const {
  require(N >= 1 && M >= 1 && K >= 1 && Ns >= 1 && Ns1 >= 1 && Ns2 >= 1,
          "SystemConfig: all counts must be >= 1");
  require(M == K, "SystemConfig: M must equal K");
  require(N == M * Ns, "SystemConfig: N must equal M * Ns");
  require(Ns == Ns1 * Ns2, "SystemConfig: Ns must equal Ns1 * Ns2");
  require(rho > 0.0 && std::isfinite(rho), "SystemConfig: rho must be > 0");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "SystemConfig: sigma2 must be > 0");
  require(std::isfinite(d1) && std::isfinite(d2), "SystemConfig: spacings must be finite");
}

SystemConfig SystemConfig::for_users(std::size_t n, std::size_t k) {
  if (k == 0 || n % k != 0) {
    throw ConfigError("SystemConfig: N=" + std::to_string(n) + " is not a multiple of K=" +
                      std::to_string(k));
  }
  SystemConfig cfg;
  cfg.N = n;
  cfg.K = k;
  cfg.M = k;
  cfg.Ns = n / k;
  cfg.Ns1 = cfg.Ns;
  cfg.Ns2 = 1;
  return cfg;
}

double SystemConfig::snr_db() const { return 10.0 * std::log10(rho / sigma2); }

void SystemConfig::set_snr_db(double snr_db) { sigma2 = rho / std::pow(10.0, snr_db / 10.0); }

const char* to_string(ChannelModel m) {
  return m == ChannelModel::kSalehValenzuela ? "sv" : "gpp";
}

ChannelModel channel_model_from_string(const std::string& s) {
  if (s == "sv") return ChannelModel::kSalehValenzuela;
  if (s == "gpp") return ChannelModel::kGpp;
  throw ConfigError("unknown channel model '" + s + "' (expected sv or gpp)");
}

void SVChannelConfig::validate() const {
  require(L >= 1, "SVChannelConfig: L must be >= 1");
  require(gain_variance > 0.0, "SVChannelConfig: gain_variance must be > 0");
}

void GppChannelConfig::validate() const {
  require(K_R >= 0.0, "GppChannelConfig: K_R must be >= 0");
  require(P >= 1 && J >= 1, "GppChannelConfig: P and J must be >= 1");
  require(cluster_powers.size() == P, "GppChannelConfig: need one power per cluster");
  double total = 0.0;
  for (double p : cluster_powers) {
    require(p >= 0.0, "GppChannelConfig: cluster powers must be nonnegative");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, "GppChannelConfig: cluster powers must sum to 1");
  require(angle_spread >= 0.0, "GppChannelConfig: angle_spread must be >= 0");
  require(doppler == 0.0, "GppChannelConfig: only the static t=0 snapshot is supported");
}

ComplexVector array_response(double phi, double theta, const SystemConfig& cfg) {
  const double s1 = 1.0 / std::sqrt(static_cast<double>(cfg.Ns1));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(cfg.Ns2));
  const double kaz = 2.0 * kPi * cfg.d1 * std::sin(phi);
  const double kel = 2.0 * kPi * cfg.d2 * std::sin(theta);
  ComplexVector a(cfg.Ns1 * cfg.Ns2);
  // Kronecker order: the elevation index runs fastest.
  for (std::size_t i = 0; i < cfg.Ns1; ++i) {
    const cdouble az = std::polar(s1, kaz * static_cast<double>(i));
    for (std::size_t j = 0; j < cfg.Ns2; ++j) {
      a[i * cfg.Ns2 + j] = az * std::polar(s2, kel * static_cast<double>(j));
    }
  }
  return a;
}

ComplexVector sv_link_from_paths(std::span<const PathParams> paths, const SystemConfig& cfg) {
  ComplexVector h(cfg.Ns);
  const double scale =
      std::sqrt(static_cast<double>(cfg.N) / static_cast<double>(paths.size()));
  for (const auto& p : paths) {
    const ComplexVector a = array_response(p.phi, p.theta, cfg);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += scale * p.gain * a[i];
  }
  return h;
}

Rng link_rng(const SystemConfig& cfg, std::size_t k, std::size_t m) {
  return Rng(derive_seed(cfg.rng_seed, {tag(StreamTag::kChannel), k, m}));
}

ComplexVector sv_link(const SystemConfig& cfg, const SVChannelConfig& sv, Rng& rng) {
  std::vector<PathParams> paths(sv.L);
  for (auto& p : paths) {
    p.gain = rng.complex_normal(sv.gain_variance);
    p.phi = rng.uniform(-kPi, kPi);
    p.theta = rng.uniform(-kPi, kPi);
  }
  return sv_link_from_paths(paths, cfg);
}

ComplexVector sv_link(std::size_t k, std::size_t m, const SystemConfig& cfg,
                      const SVChannelConfig& sv) {
  Rng rng = link_rng(cfg, k, m);
  return sv_link(cfg, sv, rng);
}

ComplexVector gpp_los(const GppLinkParams& p, const SystemConfig& cfg) {
  ComplexVector h = array_response(p.los_phi, p.los_theta, cfg);
  const cdouble g = std::polar(std::sqrt(static_cast<double>(cfg.Ns)), p.los_phase);
  for (auto& z : h) z *= g;
  return h;
}

ComplexVector gpp_nlos(const GppLinkParams& p, const SystemConfig& cfg,
                       const GppChannelConfig& gpp) {
  ComplexVector h(cfg.Ns);
  const double root_ns = std::sqrt(static_cast<double>(cfg.Ns));
  for (std::size_t c = 0; c < p.clusters.size(); ++c) {
    const auto& rays = p.clusters[c];
    const double amp = std::sqrt(gpp.cluster_powers[c] / static_cast<double>(rays.size()));
    for (const auto& ray : rays) {
      const ComplexVector a = array_response(ray.phi, ray.theta, cfg);
      const cdouble g = std::polar(amp * root_ns, ray.phase);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += g * a[i];
    }
  }
  return h;
}

ComplexVector gpp_link_from_params(const GppLinkParams& p, const SystemConfig& cfg,
                                   const GppChannelConfig& gpp) {
  const double los_w = std::sqrt(gpp.K_R / (gpp.K_R + 1.0));
  const double nlos_w = std::sqrt(1.0 / (gpp.K_R + 1.0));
  const ComplexVector los = gpp_los(p, cfg);
  const ComplexVector nlos = gpp_nlos(p, cfg, gpp);
  ComplexVector h(cfg.Ns);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = los_w * los[i] + nlos_w * nlos[i];
  return h;
}

GppLinkParams draw_gpp_params(Rng& rng, const GppChannelConfig& gpp) {
  GppLinkParams p;
  p.los_phi = rng.uniform(-kPi, kPi);
  p.los_theta = rng.uniform(-kPi, kPi);
  p.los_phase = rng.uniform(-kPi, kPi);
  p.clusters.resize(gpp.P);
  for (auto& rays : p.clusters) {
    const double centre_phi = rng.uniform(-kPi, kPi);
    const double centre_theta = rng.uniform(-kPi, kPi);
    rays.resize(gpp.J);
    for (auto& r : rays) {
      r.phi = centre_phi + gpp.angle_spread * rng.normal();
      r.theta = centre_theta + gpp.angle_spread * rng.normal();
      r.phase = rng.uniform(-kPi, kPi);
    }
  }
  return p;
}

ComplexVector gpp_link(const SystemConfig& cfg, const GppChannelConfig& gpp, Rng& rng) {
  gpp.validate();
  return gpp_link_from_params(draw_gpp_params(rng, gpp), cfg, gpp);
}

ComplexVector gpp_link(std::size_t k, std::size_t m, const SystemConfig& cfg,
                       const GppChannelConfig& gpp) {
  Rng rng = link_rng(cfg, k, m);
  return gpp_link(cfg, gpp, rng);
}

FeederGains feeder_gains(const SystemConfig& cfg, FeederMode mode, Rng& rng) {
  ComplexMatrix g(cfg.N, cfg.M);
  for (std::size_t m = 0; m < cfg.M; ++m) {
    for (std::size_t i = 0; i < cfg.Ns; ++i) {
      g(m * cfg.Ns + i, m) =
          mode == FeederMode::kAllOnes ? cdouble(1.0) : std::polar(1.0, rng.uniform(-kPi, kPi));
    }
  }
  return {std::move(g)};
}

ChannelMatrix assemble_H(const std::vector<std::vector<ComplexVector>>& links) {
  const std::size_t k_users = links.size();
  if (k_users == 0 || links[0].empty()) throw ShapeError("assemble_H: empty link grid");
  const std::size_t m_blocks = links[0].size();
  const std::size_t ns = links[0][0].size();
  ComplexMatrix h(k_users, m_blocks * ns);
  for (std::size_t k = 0; k < k_users; ++k) {
    if (links[k].size() != m_blocks) throw ShapeError("assemble_H: ragged link grid");
    for (std::size_t m = 0; m < m_blocks; ++m) {
      if (links[k][m].size() != ns) throw ShapeError("assemble_H: link length mismatch");
      for (std::size_t i = 0; i < ns; ++i) h(k, m * ns + i) = std::conj(links[k][m][i]);
    }
  }
  return {std::move(h)};
}

ComplexVector link_of(const ChannelMatrix& ch, std::size_t k, std::size_t m, std::size_t ns) {
  ComplexVector h(ns);
  for (std::size_t i = 0; i < ns; ++i) h[i] = std::conj(ch.H(k, m * ns + i));
  return h;
}

namespace {

template <typename LinkFn>
ChannelMatrix generate_channel(const SystemConfig& cfg, LinkFn&& link) {
  cfg.validate();
  std::vector<std::vector<ComplexVector>> links(cfg.K, std::vector<ComplexVector>(cfg.M));
  for (std::size_t k = 0; k < cfg.K; ++k)
    for (std::size_t m = 0; m < cfg.M; ++m) links[k][m] = link(k, m);
  return assemble_H(links);
}

}  // namespace

ChannelMatrix generate_sv_channel(const SystemConfig& cfg, const SVChannelConfig& sv) {
  sv.validate();
  return generate_channel(cfg, [&](std::size_t k, std::size_t m) { return sv_link(k, m, cfg, sv); });
}

ChannelMatrix generate_gpp_channel(const SystemConfig& cfg, const GppChannelConfig& gpp) {
  gpp.validate();
  return generate_channel(cfg,
                          [&](std::size_t k, std::size_t m) { return gpp_link(k, m, cfg, gpp); });
}

}  // namespace rishp
