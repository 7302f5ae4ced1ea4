#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "graphbandit/adversary.hpp"
#include "graphbandit/graph.hpp"
#include "graphbandit/minibatch.hpp"
#include "graphbandit/rng.hpp"
#include "graphbandit/trace.hpp"

namespace graphbandit {

/// Policy-regret wrapper around the general mini-batch learner for an
/// m-memory bounded adversary. The horizon is cut into floor(T/m) blocks of m
/// rounds (a trailing remainder is not played). The inner learner treats each
/// block as one round: it picks an action that is held for the whole block.
///
/// If the block repeats the previous block's action, the inner learner sees
/// the block-averaged losses of the action and its neighbors, where a
/// neighbor's loss is the counterfactual loss of holding it, l_t(b, ..., b).
/// After a change of action (including the very first block) it is fed zeros.
///
/// `params` default to the general preset for a horizon of floor(T/m) blocks.
inline RunTrace run_policy_regret(const FeedbackGraph& g, const AdaptiveLossStream& adv, std::size_t memory,
                                  std::uint64_t seed, std::optional<MiniBatchParams> params = std::nullopt) {
  if (memory < 1) throw std::invalid_argument("run_policy_regret: memory must be at least 1");
  if (adv.num_actions() != g.size()) throw std::invalid_argument("run_policy_regret: adversary and graph sizes differ");
  const std::uint64_t blocks = adv.horizon() / memory;
  if (blocks == 0) throw std::invalid_argument("run_policy_regret: horizon shorter than one block");

  auto d = greedy_dominating_set(g);
  const MiniBatchParams p = params.value_or(presets::general_default(blocks, d.revealing.size()));
  detail::require_exploration(p.beta, static_cast<double>(d.revealing.size()) / p.tau, "run_policy_regret");
  AdaptiveMiniBatch inner(std::move(d.owner), std::move(d.revealing), p, true);

  Rng rng(seed);
  RunTrace trace;
  trace.actions.reserve(blocks * memory);
  trace.losses.reserve(blocks * memory);
  std::optional<Vertex> previous;
  const double inv_m = 1.0 / static_cast<double>(memory);
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const Vertex a = inner.act(rng);
    const std::uint64_t first = b * memory + 1;
    for (std::uint64_t j = 0; j < memory; ++j) {
      trace.actions.push_back(a);
      trace.losses.push_back(adv.loss_from_history(first + j, trace.actions));
    }
    if (previous && *previous == a) {
      inner.observe([&](Vertex v) {
        double sum = 0.0;
        for (std::uint64_t j = 0; j < memory; ++j) sum += adv.constant_loss(first + j, v);
        return sum * inv_m;
      });
    } else {
      ++trace.log.zeroed_blocks;
      ++trace.log.inner_switches;
      inner.observe([](Vertex) { return 0.0; });
    }
    previous = a;
  }
  trace.log.epochs = inner.epochs();
  trace.log.clamped_batches = inner.clamped_batches();
  return trace;
}

}  // namespace graphbandit
