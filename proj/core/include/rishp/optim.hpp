#pragma once

#include <cstdint>
#include <vector>

#include "rishp/channel.hpp"
#include "rishp/precoding.hpp"
#include "rishp/random.hpp"

namespace rishp {

/// Cross-entropy search parameters.
struct CeoParams {
  std::size_t iterations = 30;   // I
  std::size_t candidates = 200;  // S
  double elite_ratio = 0.1;
  double smoothing = 0.7;        // alpha
  double p_floor = 0.05;

  void validate() const;
  std::size_t elite_count() const;  // ceil(elite_ratio * S)
};

struct OptimResult {
  AnalogBeamformer phi;
  double rate = 0.0;                // bits/s/Hz
  std::uint64_t evaluations = 0;    // sum-rate calls
  std::vector<double> trace;        // best-so-far rate after each iteration
};

/// Largest N exhaustive_search accepts.
inline constexpr std::size_t kExhaustiveMaxN = 22;

/// Enumerates all 2^N sign vectors; ties go to the lexicographically smallest
/// vector under -1 < +1. Throws RefusalError for N > kExhaustiveMaxN.
OptimResult exhaustive_search(const ChannelMatrix& ch, const FeederGains& g,
                              const SystemConfig& cfg);

/// Cross-entropy optimization over independent Bernoulli signs.
/// Evaluation count is exactly I * S; the returned vector is the best ever sampled.
OptimResult ceo_optimize(const ChannelMatrix& ch, const FeederGains& g, const SystemConfig& cfg,
                         const CeoParams& params, Rng& rng);

/// 1-bit co-phasing: sub-surface m serves user m, phi_n = sign Re(H[m][n] G[n][m]), ties to +1.
OptimResult matched_filter_baseline(const ChannelMatrix& ch, const FeederGains& g,
                                    const SystemConfig& cfg);

AnalogBeamformer random_phi(Rng& rng, std::size_t n);

/// Representative of phi's equivalence class under per-sub-surface sign flips
/// (which leave the ZF sum-rate unchanged): each sub-surface's first element is +1.
AnalogBeamformer canonical_phi(const AnalogBeamformer& phi, std::size_t ns);

}  // namespace rishp
