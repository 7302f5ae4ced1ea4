#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "graphbandit/graph.hpp"

namespace graphbandit {

/// Normalized exp(log_weights), shifted by the maximum for stability.
inline std::vector<double> softmax(std::span<const double> log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("softmax: empty input");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> out(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) sum += out[i] = std::exp(log_weights[i] - top);
  for (double& x : out) x /= sum;
  return out;
}

/// (1 - beta) q + beta u with u uniform on `support`, renormalized so the
/// entries sum to one up to rounding.
inline std::vector<double> mix_uniform(std::span<const double> q, double beta, std::span<const Vertex> support) {
  if (support.empty()) throw std::invalid_argument("mix_uniform: empty support");
  std::vector<double> p(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) p[i] = (1.0 - beta) * q[i];
  const double share = beta / static_cast<double>(support.size());
  for (Vertex v : support) p.at(v) += share;
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= sum;
  return p;
}

/// Simplex check: entries non-negative (strictly positive if asked) and summing
/// to one within `tol`.
inline bool is_distribution(std::span<const double> p, double tol = 1e-9, bool strictly_positive = false) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || (strictly_positive && !(x > 0.0))) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

}  // namespace graphbandit
