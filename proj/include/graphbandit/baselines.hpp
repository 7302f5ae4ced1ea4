#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "graphbandit/adversary.hpp"
#include "graphbandit/distribution.hpp"
#include "graphbandit/graph.hpp"
#include "graphbandit/rng.hpp"
#include "graphbandit/trace.hpp"

namespace graphbandit {

enum class BaselineKind { exp3, batched_exp3_set };

struct BaselineParams {
  double eta = 0.0;
  double gamma = 0.0;    // uniform exploration mass
  std::size_t tau = 1;   // batch length, batched_exp3_set only
};

namespace presets {

/// Exponential weights over floor(T/tau) batches of losses bounded by tau:
/// eta = sqrt(2 ln n / (n B)) / tau, no explicit exploration.
inline BaselineParams baseline_default(std::uint64_t horizon, std::size_t actions, std::size_t tau) {
  const double batches = std::max(1.0, std::floor(static_cast<double>(horizon) / static_cast<double>(tau)));
  const double n = static_cast<double>(actions);
  const double eta = std::sqrt(2.0 * std::log(std::max(n, 2.0)) / (n * batches)) / static_cast<double>(tau);
  return {eta, 0.0, tau};
}

}  // namespace presets

/// Exp3 (bandit feedback, a fresh draw every round) or Exp3-SET run on
/// batches of tau rounds. Exp3-SET credits every observed vertex i with its
/// batch loss divided by the probability of observing i, the sum of p over
/// N(i).
inline RunTrace run_baseline(BaselineKind kind, const FeedbackGraph& g, const LossStream& stream,
                             const BaselineParams& params, std::uint64_t seed) {
  const std::size_t n = g.size();
  if (stream.num_actions() != n) throw std::invalid_argument("run_baseline: stream and graph sizes differ");
  if (!(params.eta > 0.0) || !(params.gamma >= 0.0 && params.gamma <= 1.0) || params.tau == 0)
    throw std::invalid_argument("run_baseline: invalid parameters");
  const bool side_info = kind == BaselineKind::batched_exp3_set;
  const std::size_t tau = side_info ? params.tau : 1;

  std::vector<Vertex> everyone(n);
  for (Vertex v = 0; v < n; ++v) everyone[v] = v;
  std::vector<double> log_w(n, 0.0);
  std::vector<double> sums(n);
  Rng rng(seed);
  RunTrace trace;
  const std::uint64_t horizon = stream.horizon();
  for (std::uint64_t t = 1; t <= horizon;) {
    const auto p = mix_uniform(softmax(log_w), params.gamma, everyone);
    const Vertex a = sample_index(p, rng.uniform());
    const std::uint64_t len = std::min<std::uint64_t>(tau, horizon - t + 1);
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::uint64_t j = 0; j < len; ++j, ++t) {
      const double loss = stream.loss(t, a);
      trace.record(a, loss);
      if (side_info) {
        for (Vertex i : g.neighbors(a)) sums[i] += stream.loss(t, i);
      } else {
        sums[a] += loss;
      }
    }
    if (side_info) {
      for (Vertex i : g.neighbors(a)) {
        double observe_prob = 0.0;
        for (Vertex k : g.neighbors(i)) observe_prob += p[k];
        log_w[i] -= params.eta * sums[i] / observe_prob;
      }
    } else {
      log_w[a] -= params.eta * sums[a] / p[a];
    }
    ++trace.log.epochs;
  }
  return trace;
}

}  // namespace graphbandit
