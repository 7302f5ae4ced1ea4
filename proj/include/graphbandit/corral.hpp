#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "graphbandit/adversary.hpp"
#include "graphbandit/distribution.hpp"
#include "graphbandit/graph.hpp"
#include "graphbandit/minibatch.hpp"
#include "graphbandit/omd.hpp"
#include "graphbandit/rng.hpp"
#include "graphbandit/trace.hpp"

namespace graphbandit {

struct CorralParams {
  double eta = 0.0;        // initial outer learning rate, per base
  double eta_prime = 0.0;  // base step sizes are eta_prime / rho
  double tau = 1.0;        // outer mini-batch length
};

namespace presets {

/// c = 3 sqrt(2) (sqrt(2) + 1).
inline constexpr double kCorralConstant = 3.0 * std::numbers::sqrt2 * (std::numbers::sqrt2 + 1.0);

/// tau = T^(1/3) / |R|^(1/4), eta = |R|^(1/4) / (40 c log T' T^(1/3) log|V|),
/// eta' = T^(-2/3). Both logarithms are floored at ln 2 so that tiny graphs
/// and horizons still get a finite rate.
inline CorralParams corral_default(std::uint64_t horizon, std::size_t revealing, std::size_t vertices) {
  const double t = static_cast<double>(horizon);
  const double r4 = std::pow(static_cast<double>(revealing), 0.25);
  const double tau = std::cbrt(t) / r4;
  const double epochs = t / tau;
  const double log_epochs = std::max(std::log(epochs), std::numbers::ln2);
  const double log_v = std::max(std::log(static_cast<double>(vertices)), std::numbers::ln2);
  return {r4 / (40.0 * kCorralConstant * log_epochs * std::cbrt(t) * log_v), std::pow(t, -2.0 / 3.0), tau};
}

}  // namespace presets

/// Epoch length actually used for a real-valued tau: floor(tau), at least 1.
inline std::size_t corral_epoch_length(double tau) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(tau)));
}

/// Corralling of star-graph learners, one per star of the greedy
/// decomposition. Each outer epoch samples a base, plays its actions for the
/// epoch, feeds every base its importance-weighted losses (zero for the bases
/// not sampled), and updates the outer distribution by log-barrier OMD. A base
/// whose sampling probability drops below 1/rho is restarted with a doubled
/// threshold and a larger outer rate.
///
/// Base k draws from its own generator seeded with derive_seed(seed, k); the
/// outer draws use Rng(seed). The last epoch is truncated at the horizon.
inline RunTrace run_corral(const FeedbackGraph& g, const LossStream& stream, const CorralParams& params,
                           std::uint64_t seed) {
  if (stream.num_actions() != g.size()) throw std::invalid_argument("run_corral: stream and graph sizes differ");
  if (!(params.eta > 0.0) || !(params.eta_prime > 0.0) || !(params.tau >= 1.0))
    throw std::invalid_argument("run_corral: eta, eta' must be positive and tau at least 1");
  const std::uint64_t horizon = stream.horizon();
  if (horizon < 2) throw std::invalid_argument("run_corral: horizon must be at least 2");

  const auto d = greedy_dominating_set(g);
  const std::size_t k = d.revealing.size();
  const std::size_t epoch_len = corral_epoch_length(params.tau);
  const std::uint64_t epochs = (horizon + epoch_len - 1) / epoch_len;
  const double beta = 1.0 / static_cast<double>(epochs);
  const double rate_growth = std::exp(1.0 / std::log(static_cast<double>(horizon)));

  std::vector<std::vector<Vertex>> members(k);
  std::vector<AdaptiveMiniBatch> bases;
  std::vector<Rng> base_rngs;
  bases.reserve(k);
  for (std::size_t b = 0; b < k; ++b) {
    members[b] = d.star_of(d.revealing[b]);
    const MiniBatchParams bp{params.eta_prime / (2.0 * static_cast<double>(k)), std::min(1.0, 1.0 / params.tau),
                             params.tau};
    bases.emplace_back(std::vector<Vertex>(members[b].size(), 0), std::vector<Vertex>{0}, bp, true);
    base_rngs.emplace_back(derive_seed(seed, b));
  }

  std::vector<Vertex> all_bases(k);
  for (std::size_t b = 0; b < k; ++b) all_bases[b] = b;
  std::vector<double> q(k, 1.0 / static_cast<double>(k));
  std::vector<double> p = mix_uniform(q, 0.0, all_bases);
  std::vector<double> rates(k, params.eta);
  std::vector<double> thresholds(k, 2.0 * static_cast<double>(k));

  RunTrace trace;
  trace.actions.reserve(horizon);
  trace.losses.reserve(horizon);
  trace.log.corral.resize(k);
  for (std::size_t b = 0; b < k; ++b) {
    trace.log.corral[b].threshold.push_back(thresholds[b]);
    trace.log.corral[b].rate.push_back(rates[b]);
  }

  Rng outer(seed);
  std::uint64_t t = 0;
  std::vector<Vertex> local(k);
  for (std::uint64_t epoch = 0; epoch < epochs; ++epoch) {
    const std::size_t chosen = sample_index(p, outer.uniform());
    const std::uint64_t len = std::min<std::uint64_t>(epoch_len, horizon - t);
    std::vector<double> estimate(k, 0.0);
    for (std::uint64_t j = 0; j < len; ++j) {
      ++t;
      for (std::size_t b = 0; b < k; ++b) local[b] = bases[b].act(base_rngs[b]);
      const Vertex a = members[chosen][local[chosen]];
      const double loss = stream.loss(t, a);
      trace.record(a, loss);
      for (std::size_t b = 0; b < k; ++b) {
        if (b == chosen) {
          const auto& star = members[b];
          bases[b].observe([&](Vertex i) { return stream.loss(t, star[i]); }, 1.0 / p[chosen]);
        } else {
          bases[b].observe([](Vertex) { return 0.0; }, 0.0);
        }
      }
      estimate[chosen] += loss / p[chosen] / static_cast<double>(len);
    }

    q = log_barrier_omd(q, estimate, rates);
    const auto next_p = mix_uniform(q, beta, all_bases);
    for (std::size_t b = 0; b < k; ++b) {
      if (1.0 / p[b] > thresholds[b]) {
        thresholds[b] = 2.0 / p[b];
        rates[b] *= rate_growth;
        bases[b].restart(params.eta_prime / thresholds[b]);
        ++trace.log.corral[b].restarts;
      }
      trace.log.corral[b].threshold.push_back(thresholds[b]);
      trace.log.corral[b].rate.push_back(rates[b]);
    }
    p = next_p;
    ++trace.log.epochs;
  }
  for (const auto& b : bases) trace.log.clamped_batches += b.clamped_batches();
  return trace;
}

}  // namespace graphbandit
