#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphbandit/adversary.hpp"
#include "graphbandit/distribution.hpp"
#include "graphbandit/graph.hpp"
#include "graphbandit/rng.hpp"
#include "graphbandit/trace.hpp"

namespace graphbandit {

struct MiniBatchParams {
  double eta = 0.0;   // exponential-weights step size
  double beta = 0.0;  // exploration mass placed on the revealing vertices
  double tau = 1.0;   // maximum mini-batch length
};

namespace presets {

/// eta = T^(-2/3), tau = T^(2/3), beta = T^(-1/3).
inline MiniBatchParams star_default(std::uint64_t horizon) {
  const double t = static_cast<double>(horizon);
  return {std::pow(t, -2.0 / 3.0), std::min(1.0, std::pow(t, -1.0 / 3.0)), std::pow(t, 2.0 / 3.0)};
}

/// eta = 1/(|R|^(1/3) T^(2/3)), tau = |R|^(2/3) T^(1/3), beta = |R|^(1/3) / T^(1/3).
inline MiniBatchParams general_default(std::uint64_t horizon, std::size_t revealing) {
  const double t = static_cast<double>(horizon);
  const double r = static_cast<double>(revealing);
  return {1.0 / (std::cbrt(r) * std::pow(t, 2.0 / 3.0)), std::min(1.0, std::cbrt(r / t)),
          std::pow(r, 2.0 / 3.0) * std::cbrt(t)};
}

}  // namespace presets

/// Importance-weighted estimate for one epoch. `batch_sums[i]` holds the
/// losses of i summed over the rounds of the epoch; it only matters for the
/// vertices owned by the played action. Vertex i is credited
/// batch_sums[i] / p(owner(i)) when the played action is owner(i), else 0.
inline std::vector<double> batch_estimate(Vertex played, std::span<const Vertex> owner, std::span<const double> p,
                                          std::span<const double> batch_sums) {
  std::vector<double> est(owner.size(), 0.0);
  for (Vertex i = 0; i < owner.size(); ++i)
    if (owner[i] == played) est[i] = batch_sums[i] / p[played];
  return est;
}

/// Exponential weights with adaptive mini-batches over a star decomposition.
///
/// Each epoch mixes the weights with uniform exploration on the revealing
/// set R, draws an action i and holds it for floor(p(owner(i)) tau) rounds.
/// With switch restriction, a draw outside R that follows an action outside R
/// keeps the previous action (the batch length still comes from the drawn
/// action's owner). Only rounds played on a revealing vertex feed the
/// estimator, and each such round only informs the vertices of that star.
///
/// One revealing vertex owning everything gives the star-graph learner; the
/// greedy decomposition of a graph gives the general learner. The learner is
/// driven one round at a time: act(), then observe() with that round's losses.
class AdaptiveMiniBatch {
 public:
  AdaptiveMiniBatch(std::vector<Vertex> owner, std::vector<Vertex> revealing, MiniBatchParams params,
                    bool restrict_switches)
      : owner_(std::move(owner)), revealing_(std::move(revealing)), params_(params), restrict_(restrict_switches),
        is_revealing_(owner_.size(), false), log_w_(owner_.size(), 0.0), batch_sums_(owner_.size(), 0.0) {
    if (owner_.empty() || revealing_.empty()) throw std::invalid_argument("AdaptiveMiniBatch: empty action set");
    for (Vertex r : revealing_) is_revealing_.at(r) = true;
    for (Vertex o : owner_)
      if (o >= owner_.size() || !is_revealing_[o]) throw std::invalid_argument("AdaptiveMiniBatch: bad owner map");
    if (!(params_.eta > 0.0) || !(params_.tau > 0.0) || !(params_.beta >= 0.0 && params_.beta <= 1.0))
      throw std::invalid_argument("AdaptiveMiniBatch: invalid parameters");
  }

  std::size_t num_actions() const noexcept { return owner_.size(); }
  std::span<const Vertex> owner() const noexcept { return owner_; }
  std::span<const Vertex> revealing() const noexcept { return revealing_; }
  bool revealing(Vertex v) const { return is_revealing_.at(v); }
  const MiniBatchParams& params() const noexcept { return params_; }

  /// Action for the next round. Opens a new epoch when the current batch is spent.
  Vertex act(Rng& rng) {
    if (awaiting_observe_) throw std::logic_error("AdaptiveMiniBatch: act() called twice without observe()");
    if (!epoch_open_) open_epoch(rng);
    awaiting_observe_ = true;
    return action_;
  }

  /// Feeds the round's losses. `loss(i)` is queried only for vertices the
  /// current action reveals through its star. Every value is multiplied by
  /// `scale` before entering the estimator.
  template <class LossFn>
  void observe(LossFn&& loss, double scale = 1.0) {
    if (!awaiting_observe_) throw std::logic_error("AdaptiveMiniBatch: observe() without act()");
    awaiting_observe_ = false;
    if (is_revealing_[action_] && scale != 0.0) {
      for (Vertex i = 0; i < owner_.size(); ++i)
        if (owner_[i] == action_) batch_sums_[i] += scale * loss(i);
    }
    if (++played_in_batch_ == batch_length_) close_epoch();
  }

  /// Forgets everything learned: uniform weights, fresh clock, new step size.
  void restart(double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("AdaptiveMiniBatch::restart: eta must be positive");
    params_.eta = eta;
    std::fill(log_w_.begin(), log_w_.end(), 0.0);
    epoch_open_ = false;
    awaiting_observe_ = false;
    previous_.reset();
  }

  /// q_t, the exponential weights before exploration mixing.
  std::vector<double> weights() const { return softmax(log_w_); }
  /// p_t of the open (or most recent) epoch.
  const std::vector<double>& sampling() const noexcept { return p_; }
  Vertex current_action() const noexcept { return action_; }
  std::size_t batch_length() const noexcept { return batch_length_; }
  std::size_t epochs() const noexcept { return epochs_; }
  std::size_t clamped_batches() const noexcept { return clamped_; }

 private:
  void open_epoch(Rng& rng) {
    p_ = mix_uniform(weights(), params_.beta, revealing_);
    const Vertex drawn = sample_index(p_, rng.uniform());
    const double tau_t = p_[owner_[drawn]] * params_.tau;
    Vertex a = drawn;
    if (restrict_ && previous_ && !is_revealing_[*previous_] && !is_revealing_[a]) a = *previous_;
    // floor() of a product that is exactly an integer in real arithmetic can
    // land one ulp below it; the tiny slack keeps such batches at full length.
    auto len = static_cast<std::size_t>(std::floor(tau_t + 1e-9));
    if (len < 1) {
      len = 1;
      ++clamped_;
    }
    action_ = a;
    previous_ = a;
    batch_length_ = len;
    played_in_batch_ = 0;
    std::fill(batch_sums_.begin(), batch_sums_.end(), 0.0);
    epoch_open_ = true;
    ++epochs_;
  }

  void close_epoch() {
    const auto est = batch_estimate(action_, owner_, p_, batch_sums_);
    for (std::size_t i = 0; i < log_w_.size(); ++i) log_w_[i] -= params_.eta * est[i];
    epoch_open_ = false;
  }

  std::vector<Vertex> owner_;
  std::vector<Vertex> revealing_;
  MiniBatchParams params_;
  bool restrict_;
  std::vector<bool> is_revealing_;
  std::vector<double> log_w_;
  std::vector<double> p_;
  std::vector<double> batch_sums_;
  std::optional<Vertex> previous_;
  Vertex action_ = 0;
  std::size_t batch_length_ = 0;
  std::size_t played_in_batch_ = 0;
  std::size_t epochs_ = 0;
  std::size_t clamped_ = 0;
  bool epoch_open_ = false;
  bool awaiting_observe_ = false;
};

/// Revealing center of a star graph (lowest index when several qualify), or
/// nothing when g is not a star.
inline std::optional<Vertex> star_center(const FeedbackGraph& g) {
  for (Vertex c = 0; c < g.size(); ++c) {
    if (g.degree(c) != g.size()) continue;
    bool leaves_ok = true;
    for (Vertex v = 0; v < g.size() && leaves_ok; ++v)
      if (v != c && g.degree(v) > 2) leaves_ok = false;
    if (leaves_ok) return c;
  }
  return std::nullopt;
}

namespace detail {

inline void require_exploration(double beta, double needed, const char* who) {
  if (beta + 1e-12 * needed < needed) {
    throw std::invalid_argument(std::string(who) + ": exploration beta=" + std::to_string(beta) +
                                " is below the required " + std::to_string(needed));
  }
}

inline RunTrace drive(AdaptiveMiniBatch& learner, const LossStream& stream, std::uint64_t seed) {
  Rng rng(seed);
  RunTrace trace;
  trace.actions.reserve(stream.horizon());
  trace.losses.reserve(stream.horizon());
  for (std::uint64_t t = 1; t <= stream.horizon(); ++t) {
    const Vertex a = learner.act(rng);
    trace.record(a, stream.loss(t, a));
    learner.observe([&](Vertex i) { return stream.loss(t, i); });
  }
  trace.log.epochs = learner.epochs();
  trace.log.clamped_batches = learner.clamped_batches();
  return trace;
}

}  // namespace detail

/// Adaptive mini-batch learner on a star graph. With `restrict_switches`
/// false, moves between two leaves are allowed.
inline RunTrace run_star(const FeedbackGraph& g, const LossStream& stream, const MiniBatchParams& params,
                         bool restrict_switches, std::uint64_t seed) {
  const auto center = star_center(g);
  if (!center) throw GraphError("run_star: feedback graph is not a star");
  if (stream.num_actions() != g.size()) throw std::invalid_argument("run_star: stream and graph sizes differ");
  detail::require_exploration(params.beta, 1.0 / params.tau, "run_star");
  AdaptiveMiniBatch learner(std::vector<Vertex>(g.size(), *center), {*center}, params, restrict_switches);
  return detail::drive(learner, stream, seed);
}

/// Adaptive mini-batch learner on an arbitrary graph, over its greedy star
/// decomposition.
inline RunTrace run_general(const FeedbackGraph& g, const LossStream& stream, const MiniBatchParams& params,
                            std::uint64_t seed) {
  if (stream.num_actions() != g.size()) throw std::invalid_argument("run_general: stream and graph sizes differ");
  auto d = greedy_dominating_set(g);
  detail::require_exploration(params.beta, static_cast<double>(d.revealing.size()) / params.tau, "run_general");
  AdaptiveMiniBatch learner(std::move(d.owner), std::move(d.revealing), params, true);
  return detail::drive(learner, stream, seed);
}

}  // namespace graphbandit
