#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "graphbandit.hpp"

using namespace graphbandit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

constexpr double kAcceptanceDelayedGap = 0.1;

void report(const char* id, const char* title, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s (%s) [%.2fs]\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

const FeedbackGraph& switching_cost_graph() {
  static const FeedbackGraph g = FeedbackGraph::build(3, {{0, 2}, {1, 2}});
  return g;
}

Outcome ac1() {
  const double ps[] = {0.1, 0.3, 0.5};
  std::size_t worst_n = 0;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t n = 4 + i % 11;
    const auto g = generate::erdos_renyi(n, ps[i % 3], derive_seed(2024, i));
    const auto d = greedy_dominating_set(g);
    if (auto err = validate_decomposition(g, d); !err.empty()) return {false, fmt("graph %zu: %s", i, err.c_str())};
    if (!dominates(g, d.revealing)) return {false, fmt("graph %zu: greedy set does not dominate", i)};
    const auto s = exact_stats(g);
    const double bound = (2.0 + std::log(static_cast<double>(g.max_degree()))) * static_cast<double>(s.gamma);
    const double ratio = static_cast<double>(d.revealing.size()) / bound;
    if (ratio > worst_ratio) worst_ratio = ratio, worst_n = n;
    if (static_cast<double>(d.revealing.size()) > bound)
      return {false, fmt("graph %zu: |R|=%zu exceeds bound %.3f", i, d.revealing.size(), bound)};
  }
  return {true, fmt("200 graphs, max |R|/bound = %.3f (n=%zu)", worst_ratio, worst_n)};
}

Outcome ac2() {
  std::string detail;
  for (int e : {8, 10, 12, 14}) {
    const std::uint64_t t = std::uint64_t{1} << e;
    const auto geo = walk_depth_width([](std::uint64_t s) { return parent(s); }, t);
    const auto limit = static_cast<std::uint64_t>(e) + 1;
    detail += fmt("T=2^%d depth=%llu width=%llu; ", e, static_cast<unsigned long long>(geo.depth),
                  static_cast<unsigned long long>(geo.width));
    if (geo.depth > limit || geo.width > limit) return {false, detail + "limit exceeded"};
  }
  return {true, detail + "limit floor(log2 T)+1"};
}

Outcome ac3() {
  Rng rng(3);
  double worst = 0.0;
  auto random_p = [&](std::size_t n) {
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& x : p) s += (x = 0.01 + rng.uniform());
    for (auto& x : p) x /= s;
    return p;
  };
  for (int inst = 0; inst < 200; ++inst) {
    const bool star = inst < 100;
    const std::size_t n = 3 + rng.index(8);
    std::vector<Vertex> owner(n);
    if (star) {
      std::fill(owner.begin(), owner.end(), 0);
    } else {
      const auto g = generate::erdos_renyi(n, 0.3, rng.index(1u << 30));
      owner = greedy_dominating_set(g).owner;
    }
    const auto p = random_p(n);
    std::vector<double> sums(n);
    for (auto& x : sums) x = rng.uniform() * 20.0;
    std::vector<double> expectation(n, 0.0);
    for (Vertex a = 0; a < n; ++a) {
      const auto est = batch_estimate(a, owner, p, sums);
      for (Vertex i = 0; i < n; ++i) expectation[i] += p[a] * est[i];
    }
    for (Vertex i = 0; i < n; ++i) worst = std::max(worst, std::abs(expectation[i] - sums[i]));
  }
  return {worst <= 1e-9, fmt("100 star + 100 general instances, max |E[est] - sum| = %.2e", worst)};
}

Outcome ac4() {
  Rng rng(4);
  double worst_sum = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t k = 2 + rng.index(9);
    std::vector<double> q(k), loss(k), eta(k);
    double s = 0.0;
    for (auto& x : q) s += (x = 0.001 + rng.uniform());
    for (auto& x : q) x /= s;
    for (auto& x : loss) x = rng.uniform() * 10.0;
    for (auto& x : eta) x = 0.01 + rng.uniform();
    const auto out = log_barrier_omd(q, loss, eta);
    double total = 0.0;
    for (double x : out) {
      if (!(x > 0.0)) return {false, fmt("instance %d: non-positive entry", inst)};
      total += x;
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  if (worst_sum > 1e-9) return {false, fmt("sum error %.2e", worst_sum)};

  const std::vector<double> q0 = {0.2, 0.3, 0.5};
  const auto same = log_barrier_omd(q0, std::vector<double>{0.7, 0.7, 0.7}, std::vector<double>{1.0, 2.0, 3.0});
  for (std::size_t i = 0; i < 3; ++i)
    if (std::abs(same[i] - q0[i]) > 1e-12) return {false, "equal losses changed the distribution"};

  // Two arms: 1/(A1 - e1 l) + 1/(A2 - e2 l) = 1 with A_i = 1/q_i + e_i loss_i is a quadratic in l.
  double worst_pair = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const double q1 = 0.05 + 0.9 * rng.uniform();
    const std::vector<double> q = {q1, 1.0 - q1};
    const std::vector<double> loss = {rng.uniform(), rng.uniform()};
    const std::vector<double> eta = {0.1 + rng.uniform(), 0.1 + rng.uniform()};
    const double a1 = 1.0 / q[0] + eta[0] * loss[0], a2 = 1.0 / q[1] + eta[1] * loss[1];
    const double qa = eta[0] * eta[1];
    const double qb = eta[0] + eta[1] - a1 * eta[1] - a2 * eta[0];
    const double qc = a1 * a2 - a1 - a2;
    const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
    const double lo = std::min(loss[0], loss[1]), hi = std::max(loss[0], loss[1]);
    double lambda = std::nan("");
    for (double r : {(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)})
      if (r >= lo - 1e-12 && r <= hi + 1e-12 && a1 - eta[0] * r > 0.0 && a2 - eta[1] * r > 0.0) lambda = r;
    if (std::isnan(lambda)) return {false, fmt("pair instance %d: no admissible quadratic root", inst)};
    const auto out = log_barrier_omd(q, loss, eta);
    const double expect0 = 1.0 / (a1 - eta[0] * lambda);
    worst_pair = std::max(worst_pair, std::abs(out[0] - expect0));
  }
  const auto half = log_barrier_omd(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0},
                                    std::vector<double>{1.0, 1.0});
  const double lambda = (3.0 - std::sqrt(5.0)) / 2.0;
  const double d_half = std::abs(half[0] - 1.0 / (3.0 - lambda));
  const bool ok = worst_pair <= 1e-8 && d_half <= 1e-8 && half[1] > 0.5 && half[0] < 0.5;
  return {ok, fmt("1000 instances sum err %.1e; equal losses fixed; 2-arm max dev %.1e, hand case dev %.1e", worst_sum,
                  worst_pair, d_half)};
}

Outcome ac5() {
  const std::uint64_t T = 4096;
  const auto star = generate::star(9);
  const auto sp = presets::star_default(T);
  std::vector<double> s1, s2;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto stream = star_union_lower_bound(star, greedy_dominating_set(star), T, seed);
    s1.push_back(static_cast<double>(run_star(star, stream, sp, true, derive_seed(seed, 0)).switch_count()));
  }
  const double bound1 = 2.0 * static_cast<double>(T) / sp.tau * 1.1;

  const auto u = generate::union_of_stars({4, 1, 1, 1});
  const auto d = greedy_dominating_set(u);
  const auto gp = presets::general_default(T, d.revealing.size());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto stream = star_union_lower_bound(u, d, T, seed);
    s2.push_back(static_cast<double>(run_general(u, stream, gp, derive_seed(seed, 0)).switch_count()));
  }
  const double bound2 = 2.0 * static_cast<double>(T * d.revealing.size()) / gp.tau * 1.1;
  const bool ok = mean(s1) <= bound1 && mean(s2) <= bound2;
  return {ok, fmt("star(9): mean switches %.1f, limit %.1f; union_of_stars: mean switches %.1f, limit %.1f", mean(s1),
                  bound1, mean(s2), bound2)};
}

Outcome ac6() {
  const auto& g = switching_cost_graph();
  const std::size_t r = greedy_dominating_set(g).revealing.size();
  std::vector<std::pair<double, double>> points;
  std::string detail;
  for (int e = 10; e <= 14; ++e) {
    const std::uint64_t T = std::uint64_t{1} << e;
    std::vector<double> regrets;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      const std::uint64_t seed = derive_seed(600 + e, rep);
      const auto stream = noncomplete_lower_bound(g, T, seed);
      const auto trace = run_general(g, stream, presets::general_default(T, r), derive_seed(seed, 0));
      regrets.push_back(regret_with_switching(trace, stream, stream.info().best_action).total_regret);
    }
    points.emplace_back(static_cast<double>(T), mean(regrets));
    detail += fmt("T=2^%d R=%.1f; ", e, mean(regrets));
  }
  const auto fit = fit_exponent(points);
  return {fit.slope >= 0.55 && fit.slope <= 0.85, detail + fmt("slope %.3f +- %.3f", fit.slope, fit.std_error)};
}

Outcome ac7() {
  const std::uint64_t T = 1024;
  const auto star = generate::star(9);
  const auto stream = uniform_stream(T, star.size(), 77, Vertex{3}, 0.1);
  const auto params = presets::star_default(T);
  std::vector<double> restricted, unrestricted, diff;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const double a = run_star(star, stream, params, true, seed).total_loss();
    const double b = run_star(star, stream, params, false, seed).total_loss();
    restricted.push_back(a);
    unrestricted.push_back(b);
    diff.push_back(a - b);
  }
  const double d = mean(diff);
  const double se = std_error(diff);
  return {std::abs(d) <= 3.0 * se,
          fmt("mean loss %.3f vs %.3f, paired difference %.3f, 3 SE = %.3f", mean(restricted), mean(unrestricted), d,
              3.0 * se)};
}

// Bookkeeping must hold on every run; the aggressive outer rate makes restarts actually happen.
Outcome ac8() {
  const std::uint64_t T = 1 << 14;
  const auto u = generate::union_of_stars({4, 1, 1, 1});
  const auto d = greedy_dominating_set(u);
  const auto preset = presets::corral_default(T, d.revealing.size(), u.size());
  const CorralParams aggressive{1.0, preset.eta_prime, preset.tau};
  std::size_t total_restarts = 0, max_restarts = 0, limit = 0;
  for (const CorralParams& params : {preset, aggressive}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto stream = star_union_lower_bound(u, d, T, seed);
      const auto trace = run_corral(u, stream, params, seed);
      const std::size_t len = corral_epoch_length(params.tau);
      const std::uint64_t epochs = (T + len - 1) / len;
      limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(epochs)))) + 1;
      for (const auto& base : trace.log.corral) {
        total_restarts += base.restarts;
        max_restarts = std::max(max_restarts, base.restarts);
        if (base.restarts > limit)
          return {false, fmt("seed %llu: %zu restarts > %zu", (unsigned long long)seed, base.restarts, limit)};
        std::size_t doublings = 0;
        for (std::size_t t = 1; t < base.threshold.size(); ++t) {
          if (base.threshold[t] < base.threshold[t - 1]) return {false, "threshold decreased"};
          if (base.rate[t] < base.rate[t - 1]) return {false, "rate decreased"};
          if (base.threshold[t] != base.threshold[t - 1]) {
            if (base.threshold[t] < 2.0 * base.threshold[t - 1]) return {false, "threshold grew without doubling"};
            ++doublings;
          }
        }
        if (doublings != base.restarts) return {false, "threshold changes do not match restarts"};
      }
    }
  }

  const auto star = generate::star(8);
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto stream = star_union_lower_bound(star, greedy_dominating_set(star), 4096, seed);
    const auto cp = presets::corral_default(4096, 1, star.size());
    const auto corral = run_corral(star, stream, cp, seed);
    const MiniBatchParams base{cp.eta_prime / 2.0, 1.0 / cp.tau, cp.tau};
    const auto alone = run_star(star, stream, base, true, derive_seed(seed, 0));
    if (corral.actions != alone.actions || corral.losses != alone.losses)
      return {false, fmt("|R|=1 trace differs from the lone base at seed %llu", (unsigned long long)seed)};
    ++compared;
  }
  return {true, fmt("max restarts %zu (limit %zu, %zu total over 20 runs); thresholds monotone and doubling; "
                    "%zu single-base traces identical",
                    max_restarts, limit, total_restarts, compared)};
}

Outcome ac9() {
  const std::size_t m = 2;
  const auto star = generate::star(7);
  std::vector<std::pair<double, double>> points;
  std::string detail;
  for (int e = 10; e <= 14; ++e) {
    const std::uint64_t T = std::uint64_t{1} << e;
    MemoryAdversarySpec spec;
    spec.kind = MemoryAdversarySpec::Kind::delayed_gap;
    spec.memory = m;
    spec.epsilon = kAcceptanceDelayedGap;
    const auto adv = memory_adversary(spec, star.size(), T);
    std::vector<double> regrets;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      const auto trace = run_policy_regret(star, adv, m, derive_seed(900 + e, rep));
      if (trace.log.zeroed_blocks > trace.log.inner_switches) return {false, "zeroed blocks exceed inner switches"};
      regrets.push_back(policy_regret(trace, adv, adv.best_action()).total_regret);
    }
    points.emplace_back(static_cast<double>(T), mean(regrets));
    detail += fmt("T=2^%d R=%.1f; ", e, mean(regrets));
  }
  const auto fit = fit_exponent(points);
  return {fit.slope >= 0.55 && fit.slope <= 0.9, detail + fmt("slope %.3f +- %.3f", fit.slope, fit.std_error)};
}

Outcome ac10() {
  const std::uint64_t T = 10000;
  std::string detail;
  for (std::size_t alpha = 2; alpha <= 6; ++alpha) {
    const auto ev = evolving_graph_stream(alpha, T, derive_seed(1000, alpha));
    std::map<Vertex, FeedbackGraph> checked;
    for (std::uint64_t t = 1; t <= T; ++t) {
      const Vertex r = ev.revealing(t);
      if (r < alpha || r >= 2 * alpha) return {false, fmt("alpha=%zu: revealing vertex outside R", alpha)};
      const auto g = ev.graph_at(t);
      auto it = checked.find(r);
      if (it == checked.end()) {
        const auto s = exact_stats(g);
        if (s.gamma != 1 || s.alpha != alpha + 1)
          return {false, fmt("alpha=%zu round %llu: gamma=%zu alpha(G_t)=%zu", alpha, (unsigned long long)t, s.gamma,
                             s.alpha)};
        checked.emplace(r, g);
      } else if (!(it->second == g)) {
        return {false, "graphs with the same revealing vertex differ"};
      }
    }
  }
  detail += "gamma(G_t)=1 and alpha(G_t)=alpha+1 on every round for alpha=2..6; ";

  const std::size_t alpha = 6;
  const auto ev = evolving_graph_stream(alpha, T, 4242);
  std::vector<std::size_t> counts(2 * alpha, 0);
  for (std::uint64_t t = 1; t <= T; ++t) ++counts[ev.revealing(t)];
  const double p = 1.0 / static_cast<double>(alpha);
  const double sigma = std::sqrt(static_cast<double>(T) * p * (1.0 - p));
  double worst = 0.0;
  for (Vertex r = alpha; r < 2 * alpha; ++r)
    worst = std::max(worst, std::abs(static_cast<double>(counts[r]) - static_cast<double>(T) * p) / sigma);
  detail += fmt("alpha=6 revealing counts max |z| = %.2f over %llu rounds", worst, (unsigned long long)T);
  return {worst <= 3.0, detail};
}

}  // namespace

int main() {
  report("AC-1", "greedy dominating set within (2 + ln Delta) gamma", ac1);
  report("AC-2", "multi-scale walk depth and width logarithmic", ac2);
  report("AC-3", "mini-batch estimators unbiased", ac3);
  report("AC-4", "log-barrier OMD step", ac4);
  report("AC-5", "switch budgets of the star and general learners", ac5);
  report("AC-6", "general learner regret exponent on the two-leaf instance", ac6);
  report("AC-7", "restricted and unrestricted star learners agree in expectation", ac7);
  report("AC-8", "corral restart bookkeeping and single-base equivalence", ac8);
  report("AC-9", "policy-regret exponent against delayed_gap", ac9);
  report("AC-10", "evolving-graph stream statistics", ac10);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
