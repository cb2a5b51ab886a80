#include "rishp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rishp/errors.hpp"

namespace rishp {

void CeoParams::validate() const {
  if (iterations < 1 || candidates < 1) throw ConfigError("CeoParams: I and S must be >= 1");
  if (!(elite_ratio > 0.0 && elite_ratio < 1.0))
    throw ConfigError("CeoParams: elite_ratio must be in (0, 1)");
  if (!(smoothing > 0.0 && smoothing <= 1.0))
    throw ConfigError("CeoParams: smoothing must be in (0, 1]");
  if (!(p_floor > 0.0 && p_floor < 0.5)) throw ConfigError("CeoParams: p_floor must be in (0, 0.5)");
  if (elite_count() < 1 || elite_count() > candidates)
    throw ConfigError("CeoParams: elite set must hold between 1 and S candidates");
}

std::size_t CeoParams::elite_count() const {
  return static_cast<std::size_t>(
      std::ceil(elite_ratio * static_cast<double>(candidates) - 1e-9));
}

namespace {

OptimResult finish(std::vector<std::int8_t> best, const ChannelMatrix& ch, const FeederGains& g,
                   const SystemConfig& cfg, std::uint64_t evaluations, std::vector<double> trace) {
  OptimResult out;
  out.phi = AnalogBeamformer(std::move(best));
  out.rate = zf_sum_rate(ch, out.phi, g, cfg);
  out.evaluations = evaluations;
  out.trace = std::move(trace);
  return out;
}

}  // namespace

OptimResult exhaustive_search(const ChannelMatrix& ch, const FeederGains& g,
                              const SystemConfig& cfg) {
  cfg.validate();
  if (cfg.N > kExhaustiveMaxN) {
    throw RefusalError("exhaustive_search: N=" + std::to_string(cfg.N) + " exceeds the limit of " +
                       std::to_string(kExhaustiveMaxN));
  }
  RateEvaluator eval(ch, g, cfg);
  const std::size_t n = cfg.N;
  const std::uint64_t total = std::uint64_t{1} << n;

  // Index bit (n-1-i) drives element i, so ascending index is ascending
  // lexicographic order with -1 < +1; strict '>' keeps the first maximizer.
  std::vector<std::int8_t> phi(n, -1);
  std::vector<std::int8_t> best = phi;
  double best_rate = -1.0;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    for (std::size_t i = 0; i < n; ++i) phi[i] = ((idx >> (n - 1 - i)) & 1U) ? 1 : -1;
    const double r = eval(phi);
    if (r > best_rate) {
      best_rate = r;
      best = phi;
    }
  }
  return finish(std::move(best), ch, g, cfg, eval.evaluations(), {best_rate});
}

OptimResult ceo_optimize(const ChannelMatrix& ch, const FeederGains& g, const SystemConfig& cfg,
                         const CeoParams& params, Rng& rng) {
  cfg.validate();
  params.validate();
  RateEvaluator eval(ch, g, cfg);
  const std::size_t n = cfg.N;
  const std::size_t s = params.candidates;
  const std::size_t elite = params.elite_count();

  std::vector<double> p(n, 0.5);
  std::vector<std::int8_t> samples(s * n);
  std::vector<double> rates(s);
  std::vector<std::size_t> order(s);
  std::vector<std::int8_t> best(n, 1);
  double best_rate = -1.0;
  std::vector<double> trace;
  trace.reserve(params.iterations);

  for (std::size_t it = 0; it < params.iterations; ++it) {
    for (std::size_t c = 0; c < s; ++c) {
      std::int8_t* x = samples.data() + c * n;
      for (std::size_t i = 0; i < n; ++i) x[i] = rng.bernoulli(p[i]) ? 1 : -1;
    }
    for (std::size_t c = 0; c < s; ++c) {
      rates[c] = eval(std::span<const std::int8_t>(samples.data() + c * n, n));
    }

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rates[a] > rates[b]; });

    if (rates[order[0]] > best_rate) {
      best_rate = rates[order[0]];
      const std::int8_t* x = samples.data() + order[0] * n;
      best.assign(x, x + n);
    }
    trace.push_back(best_rate);

    for (std::size_t i = 0; i < n; ++i) {
      std::size_t plus = 0;
      for (std::size_t e = 0; e < elite; ++e) plus += samples[order[e] * n + i] > 0 ? 1 : 0;
      const double freq = static_cast<double>(plus) / static_cast<double>(elite);
      const double updated = (1.0 - params.smoothing) * p[i] + params.smoothing * freq;
      p[i] = std::clamp(updated, params.p_floor, 1.0 - params.p_floor);
    }
  }
  return finish(std::move(best), ch, g, cfg, eval.evaluations(), std::move(trace));
}

OptimResult matched_filter_baseline(const ChannelMatrix& ch, const FeederGains& g,
                                    const SystemConfig& cfg) {
  cfg.validate();
  std::vector<std::int8_t> phi(cfg.N);
  for (std::size_t m = 0; m < cfg.M; ++m) {
    for (std::size_t i = m * cfg.Ns; i < (m + 1) * cfg.Ns; ++i) {
      // H stores h^*, so H[m][n] * g is h*_{m,n} g_{m,n}.
      phi[i] = (ch.H(m, i) * g.G(i, m)).real() >= 0.0 ? 1 : -1;
    }
  }
  auto out = finish(std::move(phi), ch, g, cfg, 1, {});
  out.trace = {out.rate};
  return out;
}

AnalogBeamformer random_phi(Rng& rng, std::size_t n) {
  std::vector<std::int8_t> phi(n);
  for (auto& x : phi) x = rng.bernoulli(0.5) ? 1 : -1;
  return AnalogBeamformer(std::move(phi));
}

AnalogBeamformer canonical_phi(const AnalogBeamformer& phi, std::size_t ns) {
  if (ns == 0 || phi.size() % ns != 0) throw ShapeError("canonical_phi: N is not a multiple of Ns");
  std::vector<std::int8_t> out(phi.signs().begin(), phi.signs().end());
  for (std::size_t start = 0; start < out.size(); start += ns) {
    if (out[start] < 0) {
      for (std::size_t i = start; i < start + ns; ++i) out[i] = static_cast<std::int8_t>(-out[i]);
    }
  }
  return AnalogBeamformer(std::move(out));
}

}  // namespace rishp
