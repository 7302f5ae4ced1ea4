#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graphbandit/adversary.hpp"
#include "graphbandit/trace.hpp"

namespace graphbandit {

inline constexpr std::size_t kMaxCurveCheckpoints = 1024;

struct CurvePoint {
  std::uint64_t t = 0;
  double regret = 0.0;
};

/// Regret of one trace. total_regret = trace_loss + switches - benchmark_losses[best_action].
struct RegretReport {
  double trace_loss = 0.0;
  std::vector<double> benchmark_losses;
  std::size_t switches = 0;
  double total_regret = 0.0;
  Vertex best_action = 0;
  std::vector<CurvePoint> curve;  // cumulative regret against best_action, at most kMaxCurveCheckpoints points
};

namespace detail {

/// Rounds ceil(k T / n) for k = 1..n, or every round when T <= n. Always ends at T.
inline std::vector<std::uint64_t> checkpoints(std::uint64_t horizon, std::size_t max_points = kMaxCurveCheckpoints) {
  std::vector<std::uint64_t> out;
  if (horizon <= max_points) {
    for (std::uint64_t t = 1; t <= horizon; ++t) out.push_back(t);
    return out;
  }
  for (std::uint64_t k = 1; k <= max_points; ++k) {
    const std::uint64_t t = (k * horizon + max_points - 1) / max_points;
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  return out;
}

inline RegretReport finish_report(const RunTrace& trace, std::vector<std::vector<double>> benchmark_per_round,
                                  std::optional<Vertex> benchmark, bool charge_switches) {
  RegretReport r;
  const std::size_t n = benchmark_per_round.size();
  r.benchmark_losses.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (double l : benchmark_per_round[a]) r.benchmark_losses[a] += l;
  if (benchmark) {
    if (*benchmark >= n) throw std::invalid_argument("regret: benchmark action out of range");
    r.best_action = *benchmark;
  } else {
    for (Vertex a = 1; a < n; ++a)
      if (r.benchmark_losses[a] < r.benchmark_losses[r.best_action]) r.best_action = a;
  }
  r.trace_loss = trace.total_loss();
  r.switches = trace.switch_count();
  r.total_regret = r.trace_loss - r.benchmark_losses[r.best_action];
  if (charge_switches) r.total_regret += static_cast<double>(r.switches);

  const auto& best = benchmark_per_round[r.best_action];
  const auto marks = checkpoints(trace.horizon());
  double running = 0.0;
  std::size_t next = 0;
  for (std::uint64_t t = 1; t <= trace.horizon() && next < marks.size(); ++t) {
    running += trace.losses[t - 1] - best[t - 1] + (charge_switches && trace.switched(t) ? 1.0 : 0.0);
    if (marks[next] == t) r.curve.push_back({t, running}), ++next;
  }
  return r;
}

}  // namespace detail

/// Regret with unit switching costs against a fixed action. Without a
/// `benchmark`, the best fixed action in hindsight (lowest index on ties).
inline RegretReport regret_with_switching(const RunTrace& trace, const LossStream& stream,
                                          std::optional<Vertex> benchmark = std::nullopt) {
  if (trace.horizon() != stream.horizon())
    throw std::invalid_argument("regret_with_switching: trace has " + std::to_string(trace.horizon()) +
                                " rounds, stream has " + std::to_string(stream.horizon()));
  std::vector<std::vector<double>> per_round(stream.num_actions(), std::vector<double>(stream.horizon()));
  for (Vertex a = 0; a < stream.num_actions(); ++a)
    for (std::uint64_t t = 1; t <= stream.horizon(); ++t) per_round[a][t - 1] = stream.loss(t, a);
  return detail::finish_report(trace, std::move(per_round), benchmark, true);
}

/// Policy regret against constant action sequences. The trace's own losses
/// are recomputed from its action history; a constant benchmark a pays
/// l_t(a, ..., a) in every round. Rounds beyond the trace are not counted.
/// Switches are reported in the report but not added to the regret.
inline RegretReport policy_regret(const RunTrace& trace, const AdaptiveLossStream& adv,
                                  std::optional<Vertex> benchmark = std::nullopt) {
  if (adv.memory() > trace.horizon())
    throw std::invalid_argument("policy_regret: memory exceeds the trace length");
  if (trace.horizon() > adv.horizon()) throw std::invalid_argument("policy_regret: trace longer than the adversary");
  RunTrace recomputed;
  recomputed.actions = trace.actions;
  recomputed.losses.resize(trace.horizon());
  for (std::uint64_t t = 1; t <= trace.horizon(); ++t)
    recomputed.losses[t - 1] = adv.loss_from_history(t, trace.actions);
  std::vector<std::vector<double>> per_round(adv.num_actions(), std::vector<double>(trace.horizon()));
  for (Vertex a = 0; a < adv.num_actions(); ++a)
    for (std::uint64_t t = 1; t <= trace.horizon(); ++t) per_round[a][t - 1] = adv.constant_loss(t, a);
  return detail::finish_report(recomputed, std::move(per_round), benchmark, false);
}

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
};

/// Least squares fit of log(regret) = intercept + slope log(T).
inline ExponentFit fit_exponent(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_exponent: need at least 3 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [t, r] : points) {
    if (!(t > 0.0) || !(r > 0.0)) throw std::invalid_argument("fit_exponent: horizons and regrets must be positive");
    mx += std::log(t);
    my += std::log(r);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [t, r] : points) {
    const double dx = std::log(t) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(r) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_exponent: horizons must not all be equal");
  ExponentFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (const auto& [t, r] : points) {
    const double e = std::log(r) - (f.intercept + f.slope * std::log(t));
    sse += e * e;
  }
  f.std_error = std::sqrt(sse / (n - 2.0) / sxx);
  return f;
}

inline void to_json(nlohmann::json& j, const RegretReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve) curve.push_back({p.t, p.regret});
  j = {{"total_regret", r.total_regret},
       {"switches", r.switches},
       {"best_action", r.best_action},
       {"curve_checkpoints", std::move(curve)}};
}

}  // namespace graphbandit
