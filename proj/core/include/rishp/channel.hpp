#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rishp/numerics.hpp"
#include "rishp/random.hpp"

namespace rishp {

/// System dimensions and link budget. N = M * Ns, Ns = Ns1 * Ns2, M = K.
struct SystemConfig {
  std::size_t N = 16;    // RIS elements
  std::size_t M = 2;     // RF chains == sub-surfaces
  std::size_t K = 2;     // users
  std::size_t Ns = 8;    // elements per sub-surface
  std::size_t Ns1 = 8;   // UPA horizontal
  std::size_t Ns2 = 1;   // UPA vertical
  double d1 = 0.5;       // element spacing, wavelengths
  double d2 = 0.5;
  double rho = 1.0;      // transmit power budget (linear)
  double sigma2 = 0.31622776601683794;  // noise power; rho/sigma2 = 5 dB
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  /// Square layout: M = K, Ns = N / K, Ns1 = Ns, Ns2 = 1.
  static SystemConfig for_users(std::size_t n, std::size_t k);

  double snr_db() const;
  void set_snr_db(double snr_db);  // keeps rho, adjusts sigma2
};

enum class ChannelModel : std::uint8_t { kSalehValenzuela = 0, kGpp = 1 };

const char* to_string(ChannelModel m);
ChannelModel channel_model_from_string(const std::string& s);

struct SVChannelConfig {
  std::size_t L = 3;           // paths per (user, sub-surface) link
  double gain_variance = 1.0;  // variance of the complex path gain

  void validate() const;
};

/// Simplified clustered Ricean model: isotropic single-polarized elements, static
/// snapshot, delay taps summed into one narrowband coefficient.
struct GppChannelConfig {
  double K_R = 7.943282347242815;  // Ricean K-factor (9 dB)
  std::size_t P = 4;               // clusters
  std::size_t J = 20;              // rays per cluster
  std::vector<double> cluster_powers{0.4, 0.3, 0.2, 0.1};
  double angle_spread = 0.1;       // rad, std-dev of ray offset around cluster centre
  double doppler = 0.0;            // only 0 supported (t = 0 snapshot)

  void validate() const;
};

/// K x N channel, row k = h_k^H.
struct ChannelMatrix {
  ComplexMatrix H;
};

/// N x M block-diagonal feeder gains; column m is nonzero only on rows of sub-surface m.
struct FeederGains {
  ComplexMatrix G;
};

enum class FeederMode { kAllOnes, kRandomPhase };

using ComplexVector = std::vector<cdouble>;

/// UPA response a_az(phi) (x) a_el(theta), unit l2 norm.
ComplexVector array_response(double phi, double theta, const SystemConfig& cfg);

struct PathParams {
  cdouble gain;
  double phi;
  double theta;
};

/// sqrt(N/L) * sum_l gain_l * a(phi_l, theta_l) for explicitly given paths.
ComplexVector sv_link_from_paths(std::span<const PathParams> paths, const SystemConfig& cfg);

/// Substream for link (k, m) of a realization seeded by cfg.rng_seed.
Rng link_rng(const SystemConfig& cfg, std::size_t k, std::size_t m);

/// Random SV link: L paths, gains CN(0, gain_variance), angles U(-pi, pi).
ComplexVector sv_link(const SystemConfig& cfg, const SVChannelConfig& sv, Rng& rng);

/// Same, drawing from link_rng(cfg, k, m).
ComplexVector sv_link(std::size_t k, std::size_t m, const SystemConfig& cfg,
                      const SVChannelConfig& sv);

struct RayParams {
  double phi;
  double theta;
  double phase;  // per-ray initial phase
};

struct GppLinkParams {
  double los_phi = 0.0;
  double los_theta = 0.0;
  double los_phase = 0.0;                // random global phase of the LOS term
  std::vector<std::vector<RayParams>> clusters;  // P clusters of J rays
};

/// LOS term: unit-modulus steering vector sqrt(Ns) * a with a global phase.
ComplexVector gpp_los(const GppLinkParams& p, const SystemConfig& cfg);

/// NLOS term: sum_p sqrt(P_p / J) sum_j e^{j phase} sqrt(Ns) a(phi, theta).
ComplexVector gpp_nlos(const GppLinkParams& p, const SystemConfig& cfg,
                       const GppChannelConfig& gpp);

/// sqrt(K_R/(K_R+1)) LOS + sqrt(1/(K_R+1)) NLOS for given parameters.
ComplexVector gpp_link_from_params(const GppLinkParams& p, const SystemConfig& cfg,
                                   const GppChannelConfig& gpp);

GppLinkParams draw_gpp_params(Rng& rng, const GppChannelConfig& gpp);

ComplexVector gpp_link(const SystemConfig& cfg, const GppChannelConfig& gpp, Rng& rng);

ComplexVector gpp_link(std::size_t k, std::size_t m, const SystemConfig& cfg,
                       const GppChannelConfig& gpp);

FeederGains feeder_gains(const SystemConfig& cfg, FeederMode mode, Rng& rng);

/// links[k][m] is the Ns-vector h_{k,m}; row k of H is the conjugate of the stacked h_k.
ChannelMatrix assemble_H(const std::vector<std::vector<ComplexVector>>& links);

/// Inverse of assemble_H for one link.
ComplexVector link_of(const ChannelMatrix& ch, std::size_t k, std::size_t m, std::size_t ns);

/// Full realization: all K x M links from the configured model, substreams keyed by (seed, k, m).
ChannelMatrix generate_sv_channel(const SystemConfig& cfg, const SVChannelConfig& sv);
ChannelMatrix generate_gpp_channel(const SystemConfig& cfg, const GppChannelConfig& gpp);

}  // namespace rishp
