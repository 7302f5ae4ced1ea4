#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "graphbandit/graph.hpp"

namespace graphbandit {

/// Bookkeeping of one base learner inside the corralling algorithm.
struct CorralBaseLog {
  std::size_t restarts = 0;
  std::vector<double> threshold;  // rho_{t,i}, one entry per epoch t = 1..T'+1
  std::vector<double> rate;       // eta_{t,i}, same indexing
};

/// Side information a policy reports about its own run.
struct RunLog {
  std::size_t epochs = 0;
  std::size_t clamped_batches = 0;  // batches whose floor(tau_t) was raised to 1
  std::vector<CorralBaseLog> corral;
  std::size_t zeroed_blocks = 0;    // policy-regret wrapper only
  std::size_t inner_switches = 0;   // policy-regret wrapper only
};

/// Per-round record of a run: action a_t and incurred loss l_t(a_t), rounds 1..T
/// stored at index t-1. Round 1 always counts as a switch.
struct RunTrace {
  std::vector<Vertex> actions;
  std::vector<double> losses;
  RunLog log;

  std::uint64_t horizon() const noexcept { return actions.size(); }

  void record(Vertex a, double loss) {
    actions.push_back(a);
    losses.push_back(loss);
  }

  /// Whether a_t differs from a_{t-1}, with a_0 outside the action set.
  bool switched(std::uint64_t t) const {
    if (t == 0 || t > horizon()) throw std::out_of_range("RunTrace::switched: round outside horizon");
    return t == 1 || actions[t - 1] != actions[t - 2];
  }

  std::size_t switch_count() const {
    std::size_t m = 0;
    for (std::uint64_t t = 1; t <= horizon(); ++t) m += switched(t) ? 1 : 0;
    return m;
  }

  double total_loss() const { return std::accumulate(losses.begin(), losses.end(), 0.0); }
};

}  // namespace graphbandit
