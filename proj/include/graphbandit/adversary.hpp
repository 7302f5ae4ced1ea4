#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphbandit/graph.hpp"
#include "graphbandit/rng.hpp"

namespace graphbandit {

// -- Multi-scale random walk --------------------------------------------------

/// Largest i such that 2^i divides t.
inline std::uint64_t delta(std::uint64_t t) {
  if (t == 0) throw std::invalid_argument("delta: rounds start at 1");
  return static_cast<std::uint64_t>(std::countr_zero(t));
}

/// Multi-scale parent: t - 2^delta(t), i.e. t with its lowest set bit cleared.
inline std::uint64_t parent(std::uint64_t t) {
  if (t == 0) throw std::invalid_argument("parent: rounds start at 1");
  return t - (std::uint64_t{1} << delta(t));
}

struct WalkGeometry {
  std::uint64_t depth = 0;  // max_t |ancestors(t)|, the root 0 included
  std::uint64_t width = 0;  // max_t |{s : parent(s) < t <= s}|
};

/// Depth and width of an arbitrary parent function over rounds 1..T.
/// Every round s contributes to the cut of each t in (parent(s), s]; the cut
/// sizes are accumulated with a difference array and scanned for the maximum.
inline WalkGeometry walk_depth_width(const std::function<std::uint64_t(std::uint64_t)>& parent_fn,
                                     std::uint64_t horizon) {
  if (horizon == 0) throw std::invalid_argument("walk_depth_width: horizon must be positive");
  std::vector<std::uint64_t> depth(horizon + 1, 0);
  std::vector<std::int64_t> diff(horizon + 2, 0);
  WalkGeometry g;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const std::uint64_t p = parent_fn(t);
    if (p >= t) {
      throw std::invalid_argument("walk_depth_width: parent(" + std::to_string(t) + ")=" + std::to_string(p) +
                                  " is not earlier than the round");
    }
    depth[t] = depth[p] + 1;
    g.depth = std::max(g.depth, depth[t]);
    diff[p + 1] += 1;
    diff[t + 1] -= 1;
  }
  std::int64_t running = 0;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    running += diff[t];
    g.width = std::max(g.width, static_cast<std::uint64_t>(running));
  }
  return g;
}

/// W_0 = 0 and W_t = W_parent(t) + xi_t with xi_t ~ N(0, sigma^2).
struct MultiScaleWalk {
  std::uint64_t horizon = 0;
  double sigma = 0.0;
  std::vector<double> values;  // values[t] = W_t, t in [0, horizon]
  std::vector<double> noise;   // noise[t] = xi_t, noise[0] = 0

  double at(std::uint64_t t) const { return values.at(t); }
};

/// Samples the walk, one Gaussian per round in round order.
inline MultiScaleWalk sample_walk(std::uint64_t horizon, double sigma, Rng& rng) {
  if (horizon == 0) throw std::invalid_argument("sample_walk: horizon must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sample_walk: sigma must be non-negative");
  MultiScaleWalk w;
  w.horizon = horizon;
  w.sigma = sigma;
  w.values.assign(horizon + 1, 0.0);
  w.noise.assign(horizon + 1, 0.0);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    w.noise[t] = sigma * rng.normal();
    w.values[t] = w.values[parent(t)] + w.noise[t];
  }
  return w;
}

inline MultiScaleWalk sample_walk(std::uint64_t horizon, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  return sample_walk(horizon, sigma, rng);
}

inline double clip(double x) { return std::min(std::max(x, 0.0), 1.0); }

// -- Oblivious loss streams ---------------------------------------------------

struct StreamInfo {
  std::string construction;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double sigma = 0.0;
  std::optional<Vertex> best_action;  // hidden best action, when the construction has one
  std::vector<Vertex> walk_actions;   // actions whose losses follow the walk
  std::map<std::string, std::string> notes;
};

/// Oblivious loss oracle over rounds 1..horizon and actions 0..num_actions-1.
/// The evaluator is pure: the same (t, i) always yields the same loss.
class LossStream {
 public:
  using Evaluator = std::function<double(std::uint64_t, Vertex)>;

  LossStream(std::uint64_t horizon, std::size_t num_actions, Evaluator evaluator, StreamInfo info = {})
      : horizon_(horizon), num_actions_(num_actions), evaluator_(std::move(evaluator)), info_(std::move(info)) {
    if (horizon_ == 0 || num_actions_ == 0) throw std::invalid_argument("LossStream: empty stream");
  }

  std::uint64_t horizon() const noexcept { return horizon_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  const StreamInfo& info() const noexcept { return info_; }

  double loss(std::uint64_t t, Vertex i) const {
    if (t == 0 || t > horizon_) throw std::out_of_range("LossStream: round " + std::to_string(t) + " outside horizon");
    if (i >= num_actions_) throw std::out_of_range("LossStream: action " + std::to_string(i) + " out of range");
    return evaluator_(t, i);
  }

 private:
  std::uint64_t horizon_;
  std::size_t num_actions_;
  Evaluator evaluator_;
  StreamInfo info_;
};

/// Stream backed by an explicit table, rows indexed by round - 1.
inline LossStream table_stream(std::vector<std::vector<double>> rows, StreamInfo info = {}) {
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("table_stream: empty table");
  const std::size_t n = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != n) throw std::invalid_argument("table_stream: ragged table");
    for (double x : r)
      if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("table_stream: loss outside [0,1]");
  }
  if (info.construction.empty()) info.construction = "table";
  const auto horizon = static_cast<std::uint64_t>(rows.size());
  auto table = std::make_shared<const std::vector<std::vector<double>>>(std::move(rows));
  return LossStream(
      horizon, n, [table](std::uint64_t t, Vertex i) { return (*table)[t - 1][i]; }, std::move(info));
}

/// I.i.d. uniform losses, with action `favored` shifted down by `gap` (then clipped).
inline LossStream uniform_stream(std::uint64_t horizon, std::size_t num_actions, std::uint64_t seed,
                                 std::optional<Vertex> favored = std::nullopt, double gap = 0.0) {
  if (favored && *favored >= num_actions) throw std::invalid_argument("uniform_stream: favored action out of range");
  Rng rng(seed);
  std::vector<std::vector<double>> rows(horizon, std::vector<double>(num_actions));
  for (auto& r : rows)
    for (std::size_t i = 0; i < num_actions; ++i) {
      r[i] = rng.uniform();
      if (favored && *favored == i) r[i] = clip(r[i] - gap);
    }
  StreamInfo info;
  info.construction = "uniform";
  info.seed = seed;
  info.epsilon = gap;
  info.best_action = favored;
  return table_stream(std::move(rows), std::move(info));
}

namespace detail {

/// Losses driven by a shared walk: action i gets clip(W_t + 1/2 - shift[i]),
/// or a constant 1 when shift[i] is NaN.
inline LossStream walk_stream(std::shared_ptr<const MultiScaleWalk> walk, std::vector<double> shift,
                              StreamInfo info) {
  const std::uint64_t horizon = walk->horizon;
  const std::size_t n = shift.size();
  auto shifts = std::make_shared<const std::vector<double>>(std::move(shift));
  return LossStream(
      horizon, n,
      [walk, shifts](std::uint64_t t, Vertex i) {
        const double s = (*shifts)[i];
        return std::isnan(s) ? 1.0 : clip(walk->values[t] + 0.5 - s);
      },
      std::move(info));
}

inline double log_horizon(std::uint64_t horizon) {
  if (horizon < 2) throw std::invalid_argument("lower-bound constructions need a horizon of at least 2");
  return std::log(static_cast<double>(horizon));
}

}  // namespace detail

/// Gap constant of the hard instances: c = 42^(-1/3).
inline double hard_instance_constant() { return 1.0 / std::cbrt(42.0); }

/// Gap for the two-action instance on non-complete graphs: c * T^(-1/3) / ln T.
inline double noncomplete_epsilon(std::uint64_t horizon) {
  const double t = static_cast<double>(horizon);
  return hard_instance_constant() * std::pow(t, -1.0 / 3.0) / detail::log_horizon(horizon);
}

/// Gap for k walk-driven actions: c * (k/T)^(1/3) / ln T.
inline double multi_action_epsilon(std::size_t k, std::uint64_t horizon) {
  const double t = static_cast<double>(horizon);
  return hard_instance_constant() * std::cbrt(static_cast<double>(k) / t) / detail::log_horizon(horizon);
}

inline double walk_sigma(std::uint64_t horizon) { return 1.0 / detail::log_horizon(horizon); }

/// Hard instance for any non-complete graph. The lexicographically first
/// non-adjacent pair (v1, v2) carries walk losses, one of them better by
/// epsilon; every other action has loss 1.
inline LossStream noncomplete_lower_bound(const FeedbackGraph& g, std::uint64_t horizon, std::uint64_t seed) {
  std::optional<Edge> pair;
  for (Vertex u = 0; u < g.size() && !pair; ++u)
    for (Vertex v = u + 1; v < g.size(); ++v)
      if (!g.adjacent(u, v)) {
        pair = Edge{u, v};
        break;
      }
  if (!pair) throw GraphError("noncomplete_lower_bound: graph is complete, no non-adjacent pair exists");

  const double eps = noncomplete_epsilon(horizon);
  const double sigma = walk_sigma(horizon);
  Rng rng(seed);
  const Vertex best = rng.uniform() < 0.5 ? pair->first : pair->second;
  auto walk = std::make_shared<const MultiScaleWalk>(sample_walk(horizon, sigma, rng));

  std::vector<double> shift(g.size(), std::numeric_limits<double>::quiet_NaN());
  shift[pair->first] = 0.0;
  shift[pair->second] = 0.0;
  shift[best] = eps;

  StreamInfo info;
  info.construction = "noncomplete";
  info.seed = seed;
  info.epsilon = eps;
  info.sigma = sigma;
  info.best_action = best;
  info.walk_actions = {pair->first, pair->second};
  for (Vertex w = 0; w < g.size(); ++w)
    if (g.adjacent(w, pair->first) && g.adjacent(w, pair->second)) {
      info.notes["shared_neighbor"] = std::to_string(w);
      break;
    }
  return detail::walk_stream(std::move(walk), std::move(shift), std::move(info));
}

/// Hard instance for a disjoint union of stars. One active leaf is drawn per
/// star (an isolated vertex is its own active candidate), the best action is
/// drawn among the actives, and everything else has loss 1.
inline LossStream star_union_lower_bound(const FeedbackGraph& g, const StarDecomposition& d, std::uint64_t horizon,
                                         std::uint64_t seed) {
  if (auto err = validate_decomposition(g, d); !err.empty()) throw GraphError("star_union_lower_bound: " + err);
  for (const auto& [u, v] : g.edges()) {
    if (d.owner[u] != d.owner[v]) {
      throw GraphError("star_union_lower_bound: edge (" + std::to_string(u) + "," + std::to_string(v) +
                       ") crosses two stars");
    }
    if (!d.is_revealing(u) && !d.is_revealing(v)) {
      throw GraphError("star_union_lower_bound: edge (" + std::to_string(u) + "," + std::to_string(v) +
                       ") joins two leaves");
    }
  }

  Rng rng(seed);
  std::vector<Vertex> actives;
  for (Vertex r : d.revealing) {
    const auto members = d.star_of(r);
    if (members.size() == 1) {
      actives.push_back(r);  // isolated vertex
      continue;
    }
    actives.push_back(members[1 + rng.index(members.size() - 1)]);
  }
  const Vertex best = actives[rng.index(actives.size())];
  const double eps = multi_action_epsilon(actives.size(), horizon);
  const double sigma = walk_sigma(horizon);
  auto walk = std::make_shared<const MultiScaleWalk>(sample_walk(horizon, sigma, rng));

  std::vector<double> shift(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (Vertex a : actives) shift[a] = 0.0;
  shift[best] = eps;

  StreamInfo info;
  info.construction = "star_union";
  info.seed = seed;
  info.epsilon = eps;
  info.sigma = sigma;
  info.best_action = best;
  info.walk_actions = actives;
  info.notes["singleton_stars"] = "isolated vertices are active candidates";
  return detail::walk_stream(std::move(walk), std::move(shift), std::move(info));
}

/// Feedback graphs that change every round. I = {0..alpha-1} carries walk
/// losses, R = {alpha..2alpha-1} is a clique with loss 1, and at round t the
/// vertex revealing(t) of R is joined to all of I.
class EvolvingGraphStream {
 public:
  EvolvingGraphStream(std::size_t alpha, LossStream stream, std::vector<Vertex> revealing)
      : alpha_(alpha), stream_(std::move(stream)), revealing_(std::move(revealing)) {}

  std::size_t alpha() const noexcept { return alpha_; }
  std::size_t num_actions() const noexcept { return 2 * alpha_; }
  const LossStream& stream() const noexcept { return stream_; }

  /// Revealing vertex r_t for round t in [1, T].
  Vertex revealing(std::uint64_t t) const { return revealing_.at(t - 1); }

  FeedbackGraph graph_at(std::uint64_t t) const {
    auto e = static_edges();
    const Vertex r = revealing(t);
    for (Vertex i = 0; i < alpha_; ++i) e.emplace_back(r, i);
    return FeedbackGraph::build(num_actions(), e);
  }

  /// Part of the graph present in every round: the clique on R, I isolated.
  FeedbackGraph static_graph() const { return FeedbackGraph::build(num_actions(), static_edges()); }

  /// Vertices whose losses are revealed when `played` is chosen at round t.
  std::vector<Vertex> observed(std::uint64_t t, Vertex played) const {
    if (played >= num_actions()) throw std::out_of_range("EvolvingGraphStream: action out of range");
    if (played < alpha_) return {played};
    std::vector<Vertex> out;
    if (played == revealing(t))
      for (Vertex i = 0; i < alpha_; ++i) out.push_back(i);
    for (Vertex r = alpha_; r < num_actions(); ++r) out.push_back(r);
    return out;
  }

 private:
  std::vector<Edge> static_edges() const {
    std::vector<Edge> e;
    for (Vertex u = alpha_; u < num_actions(); ++u)
      for (Vertex v = u + 1; v < num_actions(); ++v) e.emplace_back(u, v);
    return e;
  }

  std::size_t alpha_;
  LossStream stream_;
  std::vector<Vertex> revealing_;
};

inline EvolvingGraphStream evolving_graph_stream(std::size_t alpha, std::uint64_t horizon, std::uint64_t seed) {
  if (alpha < 2) throw std::invalid_argument("evolving_graph_stream: alpha must be at least 2");
  const std::size_t n = 2 * alpha;
  Rng rng(seed);
  const Vertex best = rng.index(alpha);
  const double eps = multi_action_epsilon(alpha, horizon);
  const double sigma = walk_sigma(horizon);
  auto walk = std::make_shared<const MultiScaleWalk>(sample_walk(horizon, sigma, rng));
  std::vector<Vertex> revealing(horizon);
  for (auto& r : revealing) r = alpha + rng.index(alpha);

  std::vector<double> shift(n, std::numeric_limits<double>::quiet_NaN());
  for (Vertex i = 0; i < alpha; ++i) shift[i] = 0.0;
  shift[best] = eps;

  StreamInfo info;
  info.construction = "evolving";
  info.seed = seed;
  info.epsilon = eps;
  info.sigma = sigma;
  info.best_action = best;
  for (Vertex i = 0; i < alpha; ++i) info.walk_actions.push_back(i);
  auto stream = detail::walk_stream(std::move(walk), std::move(shift), std::move(info));
  return EvolvingGraphStream(alpha, std::move(stream), std::move(revealing));
}

// -- Memory-bounded adaptive adversaries --------------------------------------

/// Loss that depends on the round and on the player's most recent actions.
/// The window passed to the evaluator holds min(t, m) actions, oldest first,
/// ending with the action of round t.
class AdaptiveLossStream {
 public:
  using Evaluator = std::function<double(std::uint64_t, std::span<const Vertex>)>;

  AdaptiveLossStream(std::size_t memory, std::size_t num_actions, std::uint64_t horizon, Evaluator evaluator,
                     std::string name = {}, std::optional<Vertex> best = std::nullopt)
      : memory_(memory), num_actions_(num_actions), horizon_(horizon), evaluator_(std::move(evaluator)),
        name_(std::move(name)), best_(best) {
    if (memory_ == 0) throw std::invalid_argument("AdaptiveLossStream: memory must be at least 1");
    if (num_actions_ == 0 || horizon_ == 0) throw std::invalid_argument("AdaptiveLossStream: empty stream");
  }

  std::size_t memory() const noexcept { return memory_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::uint64_t horizon() const noexcept { return horizon_; }
  const std::string& name() const noexcept { return name_; }
  std::optional<Vertex> best_action() const noexcept { return best_; }

  double loss(std::uint64_t t, std::span<const Vertex> window) const {
    if (t == 0 || t > horizon_) throw std::out_of_range("AdaptiveLossStream: round outside horizon");
    if (window.empty() || window.size() > memory_ || window.size() > t)
      throw std::invalid_argument("AdaptiveLossStream: window length must be min(t, m)");
    for (Vertex a : window)
      if (a >= num_actions_) throw std::out_of_range("AdaptiveLossStream: action out of range");
    return evaluator_(t, window);
  }

  /// Loss of the constant sequence (a, ..., a) at round t.
  double constant_loss(std::uint64_t t, Vertex a) const {
    const std::vector<Vertex> window(std::min<std::uint64_t>(t, memory_), a);
    return loss(t, window);
  }

  /// Loss at round t given the full action history (history[s-1] = a_s).
  double loss_from_history(std::uint64_t t, std::span<const Vertex> history) const {
    const std::size_t len = std::min<std::uint64_t>(t, memory_);
    return loss(t, history.subspan(t - len, len));
  }

 private:
  std::size_t memory_;
  std::size_t num_actions_;
  std::uint64_t horizon_;
  Evaluator evaluator_;
  std::string name_;
  std::optional<Vertex> best_;
};

struct MemoryAdversarySpec {
  enum class Kind { switch_penalty, delayed_gap };
  Kind kind = Kind::switch_penalty;
  std::size_t memory = 1;
  double epsilon = 0.1;              // delayed_gap only
  std::optional<Vertex> best;        // delayed_gap: defaults to the last action
  std::vector<double> base_losses;   // switch_penalty: defaults to 1/4..3/4 spread
};

namespace detail {
inline bool window_constant(std::span<const Vertex> w) {
  return std::adjacent_find(w.begin(), w.end(), std::not_equal_to<>()) == w.end();
}
}  // namespace detail

/// switch_penalty: loss 1 whenever the window contains a switch, otherwise the
/// base loss of the current action.
/// delayed_gap: every action costs 1/2, except the best action which costs
/// 1/2 - epsilon once it has been held for the whole window.
inline AdaptiveLossStream memory_adversary(const MemoryAdversarySpec& spec, std::size_t num_actions,
                                           std::uint64_t horizon) {
  if (spec.memory == 0) throw std::invalid_argument("memory_adversary: memory must be at least 1");
  if (num_actions == 0) throw std::invalid_argument("memory_adversary: no actions");
  if (spec.kind == MemoryAdversarySpec::Kind::switch_penalty) {
    std::vector<double> base = spec.base_losses;
    if (base.empty()) {
      base.resize(num_actions, 0.5);
      if (num_actions > 1)
        for (std::size_t i = 0; i < num_actions; ++i)
          base[i] = 0.25 + 0.5 * static_cast<double>(i) / static_cast<double>(num_actions - 1);
    }
    if (base.size() != num_actions) throw std::invalid_argument("memory_adversary: base loss count mismatch");
    for (double b : base)
      if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("memory_adversary: base loss outside [0,1]");
    const auto best = static_cast<Vertex>(std::min_element(base.begin(), base.end()) - base.begin());
    return AdaptiveLossStream(
        spec.memory, num_actions, horizon,
        [base](std::uint64_t, std::span<const Vertex> w) {
          return detail::window_constant(w) ? base[w.back()] : 1.0;
        },
        "switch_penalty", best);
  }
  const Vertex best = spec.best.value_or(num_actions - 1);
  if (best >= num_actions) throw std::invalid_argument("memory_adversary: best action out of range");
  if (!(spec.epsilon >= 0.0 && spec.epsilon <= 0.5)) throw std::invalid_argument("memory_adversary: epsilon outside [0,1/2]");
  const double eps = spec.epsilon;
  return AdaptiveLossStream(
      spec.memory, num_actions, horizon,
      [best, eps](std::uint64_t, std::span<const Vertex> w) {
        return (w.back() == best && detail::window_constant(w)) ? 0.5 - eps : 0.5;
      },
      "delayed_gap", best);
}

}  // namespace graphbandit
