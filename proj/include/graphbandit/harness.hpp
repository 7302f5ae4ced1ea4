#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graphbandit/adversary.hpp"
#include "graphbandit/baselines.hpp"
#include "graphbandit/corral.hpp"
#include "graphbandit/graph.hpp"
#include "graphbandit/metrics.hpp"
#include "graphbandit/minibatch.hpp"
#include "graphbandit/policy_regret.hpp"
#include "graphbandit/rng.hpp"
#include "graphbandit/trace.hpp"

namespace graphbandit {

using nlohmann::json;

/// Invalid experiment configuration. The message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutputEnvVar = "GRAPHBANDIT_OUT";

struct GraphSpec {
  std::string generator = "star";  // star, complete, bandit, union_of_stars, erdos_renyi, edges, edge_list
  std::size_t n = 0;               // leaves for star, vertex count otherwise
  std::vector<std::size_t> sizes;  // union_of_stars leaf counts
  double p = 0.0;                  // erdos_renyi
  std::uint64_t seed = 0;          // erdos_renyi
  std::vector<Edge> edges;         // edges
  std::string path;                // edge_list
};

struct AdversarySpec {
  std::string construction = "noncomplete";  // noncomplete, star_union, evolving, uniform, switch_penalty, delayed_gap
  std::size_t alpha = 2;                     // evolving
  std::optional<Vertex> favored;             // uniform
  double gap = 0.0;                          // uniform
  std::size_t memory = 1;                    // switch_penalty, delayed_gap
  double epsilon = 0.1;                      // delayed_gap
  std::optional<Vertex> best;                // delayed_gap
  std::vector<double> base_losses;           // switch_penalty

  bool adaptive() const { return construction == "switch_penalty" || construction == "delayed_gap"; }
};

struct AlgorithmSpec {
  std::string name = "general";  // star, star_unrestricted, general, corral, policy_regret, exp3, batched_exp3_set
  std::string preset;            // empty: the algorithm's default preset, ignored when params are explicit
  std::optional<json> params;    // explicit parameters, replacing the preset
};

struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> horizons;
  std::size_t repetitions = 1;
  std::optional<GraphSpec> graph;  // absent only for the evolving construction
  AdversarySpec adversary;
  AlgorithmSpec algorithm;
  std::size_t jobs = 0;  // 0: one worker per hardware thread
  std::string out = "graphbandit_out";
  bool record_wallclock = false;
};

struct RunRecord {
  std::uint64_t horizon = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  RegretReport report;
  RunLog log;
  double wallclock_ms = 0.0;
};

struct HorizonSummary {
  std::uint64_t horizon = 0;
  std::size_t repetitions = 0;
  double mean_regret = 0.0;
  double stderr_regret = 0.0;
  double mean_switches = 0.0;
  double regret_of_mean = 0.0;
  json params;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<RunRecord> runs;  // ordered by (horizon, rep)
  std::vector<HorizonSummary> summaries;
  std::optional<ExponentFit> exponent;
  std::string exponent_note;  // why the exponent is missing, when it is
};

inline std::string preset_for(const AlgorithmSpec& a) {
  if (!a.preset.empty()) return a.preset;
  if (a.name == "star" || a.name == "star_unrestricted") return "star-default";
  if (a.name == "general" || a.name == "policy_regret") return "general-default";
  if (a.name == "corral") return "corral-default";
  return "baseline-default";
}

// -- JSON <-> config ----------------------------------------------------------

namespace detail {

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError("field '" + where + "." + key + "': unknown field");
  }
}

template <class T>
T get_field(const json& j, const std::string& where, const char* key) {
  const std::string name = where.empty() ? std::string(key) : where + "." + key;
  if (!j.contains(key)) throw ConfigError("field '" + name + "': missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("field '" + name + "': " + e.what());
  }
}

template <class T>
T get_field(const json& j, const std::string& where, const char* key, T fallback) {
  return j.contains(key) ? get_field<T>(j, where, key) : fallback;
}

inline GraphSpec parse_graph(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "graph", {"generator", "n", "leaves", "sizes", "p", "seed", "edges", "path"});
  GraphSpec g;
  g.generator = get_field<std::string>(j, "graph", "generator");
  if (g.generator == "star") {
    g.n = get_field<std::size_t>(j, "graph", "leaves");
  } else if (g.generator == "complete" || g.generator == "bandit") {
    g.n = get_field<std::size_t>(j, "graph", "n");
  } else if (g.generator == "union_of_stars") {
    g.sizes = get_field<std::vector<std::size_t>>(j, "graph", "sizes");
  } else if (g.generator == "erdos_renyi") {
    g.n = get_field<std::size_t>(j, "graph", "n");
    g.p = get_field<double>(j, "graph", "p");
    g.seed = get_field<std::uint64_t>(j, "graph", "seed", 0);
    if (!(g.p >= 0.0 && g.p <= 1.0)) throw ConfigError("field 'graph.p': must lie in [0, 1]");
  } else if (g.generator == "edges") {
    g.n = get_field<std::size_t>(j, "graph", "n");
    for (const auto& e : get_field<std::vector<std::vector<std::size_t>>>(j, "graph", "edges")) {
      if (e.size() != 2) throw ConfigError("field 'graph.edges': every edge needs exactly two endpoints");
      g.edges.emplace_back(e[0], e[1]);
    }
  } else if (g.generator == "edge_list") {
    std::filesystem::path p = get_field<std::string>(j, "graph", "path");
    if (p.is_relative()) p = base_dir / p;
    g.path = p.string();
  } else {
    throw ConfigError("field 'graph.generator': unknown generator '" + g.generator + "'");
  }
  return g;
}

inline AdversarySpec parse_adversary(const json& j) {
  reject_unknown(j, "adversary",
                 {"construction", "alpha", "favored", "gap", "memory", "epsilon", "best", "base_losses"});
  AdversarySpec a;
  a.construction = get_field<std::string>(j, "adversary", "construction");
  static const char* const kKnown[] = {"noncomplete", "star_union", "evolving", "uniform", "switch_penalty",
                                       "delayed_gap"};
  if (std::find(std::begin(kKnown), std::end(kKnown), a.construction) == std::end(kKnown))
    throw ConfigError("field 'adversary.construction': unknown construction '" + a.construction + "'");
  a.alpha = get_field<std::size_t>(j, "adversary", "alpha", a.alpha);
  if (j.contains("favored")) a.favored = get_field<Vertex>(j, "adversary", "favored");
  a.gap = get_field<double>(j, "adversary", "gap", a.gap);
  a.memory = get_field<std::size_t>(j, "adversary", "memory", a.memory);
  a.epsilon = get_field<double>(j, "adversary", "epsilon", a.epsilon);
  if (j.contains("best")) a.best = get_field<Vertex>(j, "adversary", "best");
  a.base_losses = get_field<std::vector<double>>(j, "adversary", "base_losses", {});
  if (a.construction == "evolving" && a.alpha < 2) throw ConfigError("field 'adversary.alpha': must be at least 2");
  if (a.adaptive() && a.memory < 1) throw ConfigError("field 'adversary.memory': must be at least 1");
  if (!(a.gap >= 0.0 && a.gap <= 1.0)) throw ConfigError("field 'adversary.gap': must lie in [0, 1]");
  if (!(a.epsilon >= 0.0 && a.epsilon <= 0.5)) throw ConfigError("field 'adversary.epsilon': must lie in [0, 1/2]");
  return a;
}

inline AlgorithmSpec parse_algorithm(const json& j) {
  reject_unknown(j, "algorithm", {"name", "preset", "params"});
  AlgorithmSpec a;
  a.name = get_field<std::string>(j, "algorithm", "name");
  static const char* const kKnown[] = {"star", "star_unrestricted", "general", "corral", "policy_regret", "exp3",
                                       "batched_exp3_set"};
  if (std::find(std::begin(kKnown), std::end(kKnown), a.name) == std::end(kKnown))
    throw ConfigError("field 'algorithm.name': unknown algorithm '" + a.name + "'");
  a.preset = get_field<std::string>(j, "algorithm", "preset", "");
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("field 'algorithm.params': expected an object");
    a.params = j["params"];
  }
  const std::string preset = preset_for(a);
  const bool star_like = a.name == "star" || a.name == "star_unrestricted";
  const bool general_like = a.name == "general" || a.name == "policy_regret";
  const bool baseline = a.name == "exp3" || a.name == "batched_exp3_set";
  const bool ok = (star_like && preset == "star-default") || (general_like && preset == "general-default") ||
                  (a.name == "corral" && preset == "corral-default") || (baseline && preset == "baseline-default") ||
                  (a.name == "general" && preset == "star-default");
  if (!ok) throw ConfigError("field 'algorithm.preset': preset '" + preset + "' does not apply to " + a.name);
  return a;
}

}  // namespace detail

/// Parses and validates a config document. Relative edge-list paths resolve
/// against `base_dir`.
inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
  detail::reject_unknown(j, "config",
                         {"master_seed", "horizons", "repetitions", "graph", "adversary", "algorithm", "jobs", "out",
                          "record_wallclock"});
  ExperimentConfig c;
  c.master_seed = detail::get_field<std::uint64_t>(j, "", "master_seed", 0);
  c.horizons = detail::get_field<std::vector<std::uint64_t>>(j, "", "horizons");
  if (c.horizons.empty()) throw ConfigError("field 'horizons': at least one horizon required");
  for (std::size_t i = 0; i < c.horizons.size(); ++i) {
    if (c.horizons[i] < 2) throw ConfigError("field 'horizons': every horizon must be at least 2");
    if (i > 0 && c.horizons[i] <= c.horizons[i - 1])
      throw ConfigError("field 'horizons': must be strictly increasing");
  }
  c.repetitions = detail::get_field<std::size_t>(j, "", "repetitions", 1);
  if (c.repetitions < 1) throw ConfigError("field 'repetitions': must be at least 1");
  if (j.contains("graph")) c.graph = detail::parse_graph(j["graph"], base_dir);
  if (!j.contains("adversary")) throw ConfigError("field 'adversary': missing");
  c.adversary = detail::parse_adversary(j["adversary"]);
  if (!j.contains("algorithm")) throw ConfigError("field 'algorithm': missing");
  c.algorithm = detail::parse_algorithm(j["algorithm"]);
  c.jobs = detail::get_field<std::size_t>(j, "", "jobs", 0);
  c.out = detail::get_field<std::string>(j, "", "out", c.out);
  c.record_wallclock = detail::get_field<bool>(j, "", "record_wallclock", false);
  return c;
}

/// Reads a config file. Syntax errors report the line and column.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

inline json to_json(const GraphSpec& g) {
  json j = {{"generator", g.generator}};
  if (g.generator == "star") j["leaves"] = g.n;
  if (g.generator == "complete" || g.generator == "bandit" || g.generator == "edges") j["n"] = g.n;
  if (g.generator == "union_of_stars") j["sizes"] = g.sizes;
  if (g.generator == "erdos_renyi") {
    j["n"] = g.n;
    j["p"] = g.p;
    j["seed"] = g.seed;
  }
  if (g.generator == "edges") {
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back({u, v});
    j["edges"] = std::move(edges);
  }
  if (g.generator == "edge_list") j["path"] = g.path;
  return j;
}

inline json to_json(const AdversarySpec& a) {
  json j = {{"construction", a.construction}};
  if (a.construction == "evolving") j["alpha"] = a.alpha;
  if (a.construction == "uniform") {
    j["favored"] = a.favored ? json(*a.favored) : json(nullptr);
    j["gap"] = a.gap;
  }
  if (a.adaptive()) j["memory"] = a.memory;
  if (a.construction == "delayed_gap") {
    j["epsilon"] = a.epsilon;
    j["best"] = a.best ? json(*a.best) : json(nullptr);
  }
  if (a.construction == "switch_penalty") j["base_losses"] = a.base_losses;
  return j;
}

inline json to_json(const ExperimentConfig& c) {
  json algorithm = {{"name", c.algorithm.name}, {"preset", c.algorithm.params ? json(nullptr) : json(preset_for(c.algorithm))}};
  if (c.algorithm.params) algorithm["params"] = *c.algorithm.params;
  return {{"master_seed", c.master_seed},
          {"horizons", c.horizons},
          {"repetitions", c.repetitions},
          {"graph", c.graph ? to_json(*c.graph) : json(nullptr)},
          {"adversary", to_json(c.adversary)},
          {"algorithm", std::move(algorithm)},
          {"jobs", c.jobs},
          {"out", c.out},
          {"record_wallclock", c.record_wallclock}};
}

// -- Instances ----------------------------------------------------------------

inline FeedbackGraph make_graph(const GraphSpec& g) {
  if (g.generator == "star") return generate::star(g.n);
  if (g.generator == "complete") return generate::complete(g.n);
  if (g.generator == "bandit") return generate::bandit(g.n);
  if (g.generator == "union_of_stars") return generate::union_of_stars(g.sizes);
  if (g.generator == "erdos_renyi") return generate::erdos_renyi(g.n, g.p, g.seed);
  if (g.generator == "edges") return FeedbackGraph::build(g.n, g.edges);
  std::ifstream in(g.path);
  if (!in) throw ConfigError("field 'graph.path': cannot open '" + g.path + "'");
  return read_edge_list(in);
}

/// Feedback graph handed to the learner. The evolving construction supplies
/// its own time-invariant part.
inline FeedbackGraph learner_graph(const ExperimentConfig& c) {
  if (c.adversary.construction == "evolving") {
    if (c.graph) throw ConfigError("field 'graph': the evolving construction defines its own graph; omit it");
    return evolving_graph_stream(c.adversary.alpha, 2, 0).static_graph();
  }
  if (!c.graph) throw ConfigError("field 'graph': missing");
  return make_graph(*c.graph);
}

/// Oblivious stream for one run, with the benchmark action it fixes (if any).
inline std::pair<LossStream, std::optional<Vertex>> make_stream(const AdversarySpec& a, const FeedbackGraph& g,
                                                               std::uint64_t horizon, std::uint64_t seed) {
  std::optional<LossStream> s;
  if (a.construction == "noncomplete") s = noncomplete_lower_bound(g, horizon, seed);
  if (a.construction == "star_union") s = star_union_lower_bound(g, greedy_dominating_set(g), horizon, seed);
  if (a.construction == "evolving") s = evolving_graph_stream(a.alpha, horizon, seed).stream();
  if (a.construction == "uniform") s = uniform_stream(horizon, g.size(), seed, a.favored, a.gap);
  if (!s) throw ConfigError("adversary '" + a.construction + "' is not an oblivious stream");
  auto best = s->info().best_action;
  return {std::move(*s), best};
}

inline AdaptiveLossStream make_adaptive(const AdversarySpec& a, const FeedbackGraph& g, std::uint64_t horizon) {
  MemoryAdversarySpec m;
  m.kind = a.construction == "delayed_gap" ? MemoryAdversarySpec::Kind::delayed_gap
                                           : MemoryAdversarySpec::Kind::switch_penalty;
  m.memory = a.memory;
  m.epsilon = a.epsilon;
  m.best = a.best;
  m.base_losses = a.base_losses;
  return memory_adversary(m, g.size(), horizon);
}

// -- Parameters ---------------------------------------------------------------

namespace detail {

inline double param(const json& p, const char* key) {
  if (!p.contains(key)) throw ConfigError(std::string("field 'algorithm.params.") + key + "': missing");
  if (!p[key].is_number()) throw ConfigError(std::string("field 'algorithm.params.") + key + "': expected a number");
  return p[key].get<double>();
}

inline void only_keys(const json& p, std::initializer_list<const char*> keys) {
  reject_unknown(p, "algorithm.params", keys);
}

}  // namespace detail

/// Parameters of the configured algorithm at horizon T, as a JSON object.
/// Explicit parameters are checked and echoed; presets are evaluated.
inline json resolve_params(const ExperimentConfig& c, const FeedbackGraph& g, std::uint64_t horizon) {
  const auto& a = c.algorithm;
  const std::size_t r = greedy_dominating_set(g).revealing.size();
  if (a.name == "star" || a.name == "star_unrestricted" || a.name == "general" || a.name == "policy_regret") {
    MiniBatchParams p;
    if (a.params) {
      detail::only_keys(*a.params, {"eta", "beta", "tau"});
      p = {detail::param(*a.params, "eta"), detail::param(*a.params, "beta"), detail::param(*a.params, "tau")};
    } else {
      std::uint64_t t = horizon;
      if (a.name == "policy_regret") t = std::max<std::uint64_t>(1, horizon / c.adversary.memory);
      p = preset_for(a) == "star-default" ? presets::star_default(t) : presets::general_default(t, r);
    }
    return {{"eta", p.eta}, {"beta", p.beta}, {"tau", p.tau}};
  }
  if (a.name == "corral") {
    CorralParams p;
    if (a.params) {
      detail::only_keys(*a.params, {"eta", "eta_prime", "tau"});
      p = {detail::param(*a.params, "eta"), detail::param(*a.params, "eta_prime"), detail::param(*a.params, "tau")};
    } else {
      p = presets::corral_default(horizon, r, g.size());
    }
    return {{"eta", p.eta}, {"eta_prime", p.eta_prime}, {"tau", p.tau}};
  }
  BaselineParams p;
  if (a.params) {
    detail::only_keys(*a.params, {"eta", "gamma", "tau"});
    p.eta = detail::param(*a.params, "eta");
    p.gamma = a.params->contains("gamma") ? detail::param(*a.params, "gamma") : 0.0;
    const double tau = a.params->contains("tau") ? detail::param(*a.params, "tau") : 1.0;
    if (!(tau >= 1.0) || tau != std::floor(tau)) throw ConfigError("field 'algorithm.params.tau': must be an integer >= 1");
    p.tau = static_cast<std::size_t>(tau);
  } else {
    const std::size_t tau =
        a.name == "exp3" ? 1 : std::max<std::size_t>(1, static_cast<std::size_t>(std::cbrt(static_cast<double>(horizon))));
    p = presets::baseline_default(horizon, g.size(), tau);
  }
  if (a.name == "exp3") p.tau = 1;
  return {{"eta", p.eta}, {"gamma", p.gamma}, {"tau", p.tau}};
}

/// Checks that the algorithm, graph, adversary and parameters fit together at
/// every horizon, without running anything.
inline void validate(const ExperimentConfig& c) {
  const FeedbackGraph g = learner_graph(c);
  const auto& name = c.algorithm.name;
  const bool policy = name == "policy_regret";
  if (policy != c.adversary.adaptive())
    throw ConfigError(policy ? "algorithm 'policy_regret' needs a memory adversary (switch_penalty or delayed_gap)"
                             : "adversary '" + c.adversary.construction + "' only works with algorithm 'policy_regret'");
  if ((name == "star" || name == "star_unrestricted") && !star_center(g))
    throw ConfigError("algorithm '" + name + "' needs a star graph");
  const std::size_t r = greedy_dominating_set(g).revealing.size();
  for (std::uint64_t t : c.horizons) {
    const json p = resolve_params(c, g, t);
    const std::string at = " at T=" + std::to_string(t);
    if (name == "corral") {
      if (!(p["eta"].get<double>() > 0.0) || !(p["eta_prime"].get<double>() > 0.0) || !(p["tau"].get<double>() >= 1.0))
        throw ConfigError("corral parameters need eta, eta_prime > 0 and tau >= 1" + at);
    } else if (name == "exp3" || name == "batched_exp3_set") {
      if (!(p["eta"].get<double>() > 0.0) || !(p["gamma"].get<double>() >= 0.0 && p["gamma"].get<double>() <= 1.0))
        throw ConfigError("baseline parameters need eta > 0 and gamma in [0, 1]" + at);
    } else {
      const double eta = p["eta"], beta = p["beta"], tau = p["tau"];
      const double needed = (name == "star" || name == "star_unrestricted" ? 1.0 : static_cast<double>(r)) / tau;
      if (!(eta > 0.0) || !(tau > 0.0) || !(beta <= 1.0)) throw ConfigError("mini-batch parameters out of range" + at);
      try {
        detail::require_exploration(beta, needed, name.c_str());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what() + at);
      }
    }
    if (policy) {
      if (t / c.adversary.memory == 0) throw ConfigError("horizon shorter than one block of memory length" + at);
    } else {
      (void)make_stream(c.adversary, g, t, 0);
    }
  }
}

// -- Execution ----------------------------------------------------------------

/// Seed of repetition `rep` at horizon index `h`.
inline std::uint64_t run_seed(const ExperimentConfig& c, std::size_t h, std::size_t rep) {
  return derive_seed(c.master_seed, h * c.repetitions + rep);
}

/// One run: the adversary is seeded with `seed`, the learner with derive_seed(seed, 0).
inline std::pair<RunTrace, RegretReport> execute_run(const ExperimentConfig& c, const FeedbackGraph& g,
                                                     std::uint64_t horizon, std::uint64_t seed) {
  const json p = resolve_params(c, g, horizon);
  const std::uint64_t policy_seed = derive_seed(seed, 0);
  const auto& name = c.algorithm.name;
  if (name == "policy_regret") {
    const auto adv = make_adaptive(c.adversary, g, horizon);
    auto trace = run_policy_regret(g, adv, c.adversary.memory, policy_seed,
                                   MiniBatchParams{p["eta"], p["beta"], p["tau"]});
    auto report = policy_regret(trace, adv, adv.best_action());
    return {std::move(trace), std::move(report)};
  }
  auto [stream, best] = make_stream(c.adversary, g, horizon, seed);
  RunTrace trace;
  if (name == "star" || name == "star_unrestricted") {
    trace = run_star(g, stream, MiniBatchParams{p["eta"], p["beta"], p["tau"]}, name == "star", policy_seed);
  } else if (name == "general") {
    trace = run_general(g, stream, MiniBatchParams{p["eta"], p["beta"], p["tau"]}, policy_seed);
  } else if (name == "corral") {
    trace = run_corral(g, stream, CorralParams{p["eta"], p["eta_prime"], p["tau"]}, policy_seed);
  } else {
    const auto kind = name == "exp3" ? BaselineKind::exp3 : BaselineKind::batched_exp3_set;
    trace = run_baseline(kind, g, stream, BaselineParams{p["eta"], p["gamma"], p["tau"].get<std::size_t>()},
                         policy_seed);
  }
  auto report = regret_with_switching(trace, stream, best);
  return {std::move(trace), std::move(report)};
}

/// Runs f(i) for i in [0, count) on `jobs` threads. The first exception is rethrown.
template <class F>
void parallel_for(std::size_t count, std::size_t jobs, F&& f) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            f(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

inline std::vector<HorizonSummary> summarize(const ExperimentConfig& c, const FeedbackGraph& g,
                                             const std::vector<RunRecord>& runs) {
  std::vector<HorizonSummary> out;
  for (std::size_t h = 0; h < c.horizons.size(); ++h) {
    HorizonSummary s;
    s.horizon = c.horizons[h];
    s.repetitions = c.repetitions;
    s.params = resolve_params(c, g, s.horizon);
    const double n = static_cast<double>(c.repetitions);
    std::vector<double> mean_bench;
    double mean_paid = 0.0;
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
      const auto& r = runs[h * c.repetitions + rep].report;
      s.mean_regret += r.total_regret / n;
      s.mean_switches += static_cast<double>(r.switches) / n;
      mean_paid += (r.trace_loss + static_cast<double>(r.switches)) / n;
      mean_bench.resize(r.benchmark_losses.size(), 0.0);
      for (std::size_t a = 0; a < mean_bench.size(); ++a) mean_bench[a] += r.benchmark_losses[a] / n;
    }
    if (c.repetitions > 1) {
      double ss = 0.0;
      for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const double d = runs[h * c.repetitions + rep].report.total_regret - s.mean_regret;
        ss += d * d;
      }
      s.stderr_regret = std::sqrt(ss / (n - 1.0) / n);
    }
    s.regret_of_mean = mean_paid - *std::min_element(mean_bench.begin(), mean_bench.end());
    out.push_back(std::move(s));
  }
  return out;
}

/// Runs every (horizon, repetition) pair and aggregates. Nothing is written.
inline SweepResult run_sweep(const ExperimentConfig& c) {
  validate(c);
  const FeedbackGraph g = learner_graph(c);
  SweepResult result;
  result.config = c;
  const std::size_t count = c.horizons.size() * c.repetitions;
  result.runs.resize(count);
  parallel_for(count, c.jobs, [&](std::size_t i) {
    const std::size_t h = i / c.repetitions;
    const std::size_t rep = i % c.repetitions;
    RunRecord& rec = result.runs[i];
    rec.horizon = c.horizons[h];
    rec.rep = rep;
    rec.seed = run_seed(c, h, rep);
    const auto start = std::chrono::steady_clock::now();
    auto [trace, report] = execute_run(c, g, rec.horizon, rec.seed);
    if (c.record_wallclock)
      rec.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rec.report = std::move(report);
    rec.log = std::move(trace.log);
  });
  result.summaries = summarize(c, g, result.runs);
  if (c.horizons.size() < 3) {
    result.exponent_note = "fewer than 3 horizons";
  } else {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : result.summaries) pts.emplace_back(static_cast<double>(s.horizon), s.mean_regret);
    if (std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.second > 0.0; }))
      result.exponent = fit_exponent(pts);
    else
      result.exponent_note = "non-positive mean regret at some horizon";
  }
  return result;
}

// -- Output -------------------------------------------------------------------

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string runs_csv(const SweepResult& r) {
  std::ostringstream out;
  out << "horizon,rep,seed,total_regret,switches,best_action,wallclock_ms\n";
  for (const auto& run : r.runs) {
    out << run.horizon << ',' << run.rep << ',' << run.seed << ',' << format_number(run.report.total_regret) << ','
        << run.report.switches << ',' << run.report.best_action << ',' << format_number(run.wallclock_ms) << '\n';
  }
  return out.str();
}

inline json summary_json(const SweepResult& r) {
  json horizons = json::array();
  for (const auto& s : r.summaries) {
    horizons.push_back({{"horizon", s.horizon},
                        {"repetitions", s.repetitions},
                        {"params", s.params},
                        {"mean_regret", s.mean_regret},
                        {"stderr_regret", s.stderr_regret},
                        {"mean_switches", s.mean_switches},
                        {"regret_of_mean", s.regret_of_mean}});
  }
  json j = {{"config", to_json(r.config)}, {"horizons", std::move(horizons)}};
  if (r.exponent) {
    j["exponent"] = {{"slope", r.exponent->slope},
                     {"intercept", r.exponent->intercept},
                     {"stderr", r.exponent->std_error}};
  } else {
    j["exponent"] = nullptr;
    j["exponent_note"] = r.exponent_note;
  }
  return j;
}

/// Output directory: `override_dir` if given, else $GRAPHBANDIT_OUT, else the config's.
inline std::filesystem::path output_dir(const ExperimentConfig& c, const std::optional<std::string>& override_dir = {}) {
  if (override_dir && !override_dir->empty()) return *override_dir;
  if (const char* env = std::getenv(kOutputEnvVar); env && *env) return env;
  return c.out;
}

/// Writes each (name, contents) pair into `dir`. Files go to temporaries
/// first, so a failure leaves no half-written outputs behind.
inline void write_outputs(const std::filesystem::path& dir,
                          const std::vector<std::pair<std::string, std::string>>& files) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> temps;
  try {
    for (const auto& [name, contents] : files) {
      auto tmp = dir / (name + ".tmp");
      std::ofstream out(tmp, std::ios::binary);
      out << contents;
      out.close();
      temps.push_back(tmp);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
  } catch (...) {
    for (const auto& t : temps) std::filesystem::remove(t);
    throw;
  }
  for (std::size_t i = 0; i < files.size(); ++i) std::filesystem::rename(temps[i], dir / files[i].first);
}

/// Runs the sweep and writes summary.json and runs.csv.
inline SweepResult run_experiment(const ExperimentConfig& c, const std::optional<std::string>& override_dir = {}) {
  SweepResult r = run_sweep(c);
  write_outputs(output_dir(c, override_dir), {{"summary.json", summary_json(r).dump(2) + "\n"}, {"runs.csv", runs_csv(r)}});
  return r;
}

}  // namespace graphbandit
