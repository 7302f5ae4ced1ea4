#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphbandit.hpp"

namespace fs = std::filesystem;
using namespace graphbandit;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
};

ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
  ExperimentConfig c = load_config(path);
  if (o.seed) c.master_seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.out) c.out = *o.out;
  return c;
}

int cmd_sweep(const std::string& path, const Overrides& o) {
  const ExperimentConfig c = load_with_overrides(path, o);
  const auto dir = output_dir(c, o.out);
  const SweepResult r = run_experiment(c, o.out);
  for (const auto& s : r.summaries)
    std::printf("T=%llu mean_regret=%.6g stderr=%.3g mean_switches=%.6g\n", static_cast<unsigned long long>(s.horizon),
                s.mean_regret, s.stderr_regret, s.mean_switches);
  if (r.exponent) std::printf("exponent=%.6f stderr=%.3g\n", r.exponent->slope, r.exponent->std_error);
  std::printf("wrote %s and %s\n", (dir / "summary.json").string().c_str(), (dir / "runs.csv").string().c_str());
  return 0;
}

int cmd_run(const std::string& path, const Overrides& o) {
  const ExperimentConfig c = load_with_overrides(path, o);
  validate(c);
  const FeedbackGraph g = learner_graph(c);
  const std::uint64_t horizon = c.horizons.front();
  const std::uint64_t seed = run_seed(c, 0, 0);
  const auto [trace, report] = execute_run(c, g, horizon, seed);

  std::ostringstream csv;
  csv << "t,action,loss,switched\n";
  for (std::uint64_t t = 1; t <= trace.horizon(); ++t)
    csv << t << ',' << trace.actions[t - 1] << ',' << format_number(trace.losses[t - 1]) << ','
        << (trace.switched(t) ? 1 : 0) << '\n';
  json j = report;
  j["horizon"] = horizon;
  j["seed"] = seed;
  j["trace_loss"] = report.trace_loss;
  j["benchmark_losses"] = report.benchmark_losses;
  j["params"] = resolve_params(c, g, horizon);
  j["epochs"] = trace.log.epochs;
  j["clamped_batches"] = trace.log.clamped_batches;
  if (c.algorithm.name == "policy_regret") {
    j["zeroed_blocks"] = trace.log.zeroed_blocks;
    j["inner_switches"] = trace.log.inner_switches;
  }
  if (c.algorithm.name == "corral") {
    json bases = json::array();
    for (const auto& b : trace.log.corral) bases.push_back({{"restarts", b.restarts}});
    j["corral_bases"] = std::move(bases);
  }
  j["config"] = to_json(c);
  const auto dir = output_dir(c, o.out);
  write_outputs(dir, {{"trace.csv", csv.str()}, {"report.json", j.dump(2) + "\n"}});
  std::printf("T=%llu total_regret=%.6g switches=%zu best_action=%zu\n", static_cast<unsigned long long>(horizon),
              report.total_regret, report.switches, report.best_action);
  std::printf("wrote %s and %s\n", (dir / "trace.csv").string().c_str(), (dir / "report.json").string().c_str());
  return 0;
}

int cmd_graph_info(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list '" + path + "'");
  const FeedbackGraph g = read_edge_list(in);
  const auto d = greedy_dominating_set(g);
  std::printf("n=%zu\n", g.size());
  std::printf("edges=%zu\n", g.edges().size());
  std::printf("max_degree=%zu\n", g.max_degree());
  std::printf("greedy_R=%zu\n", d.revealing.size());
  std::printf("revealing=");
  for (std::size_t i = 0; i < d.revealing.size(); ++i) std::printf("%s%zu", i ? "," : "", d.revealing[i]);
  std::printf("\n");
  if (g.size() <= kExactStatsMaxVertices) {
    const auto s = exact_stats(g);
    std::printf("gamma=%zu\n", s.gamma);
    std::printf("alpha=%zu\n", s.alpha);
    std::printf("phi=%llu/%llu (%.6f)\n", static_cast<unsigned long long>(s.phi.num),
                static_cast<unsigned long long>(s.phi.den), s.phi.value());
  } else {
    std::printf("exact statistics skipped: n > %zu\n", kExactStatsMaxVertices);
  }
  return 0;
}

int cmd_make_adversary(const std::string& path, const Overrides& o) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open adversary spec '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  detail::reject_unknown(j, "spec", {"horizon", "seed", "graph", "adversary", "out"});
  const auto horizon = detail::get_field<std::uint64_t>(j, "", "horizon");
  if (horizon < 2) throw ConfigError("field 'horizon': must be at least 2");
  std::uint64_t seed = detail::get_field<std::uint64_t>(j, "", "seed", 0);
  if (o.seed) seed = *o.seed;
  if (!j.contains("adversary")) throw ConfigError("field 'adversary': missing");
  const AdversarySpec a = detail::parse_adversary(j["adversary"]);
  if (a.adaptive()) throw ConfigError("field 'adversary.construction': '" + a.construction +
                                      "' reacts to the player's actions and has no fixed loss table");
  const fs::path base = fs::path(path).parent_path().empty() ? fs::path(".") : fs::path(path).parent_path();
  std::optional<EvolvingGraphStream> evolving;
  std::optional<LossStream> stream;
  std::optional<FeedbackGraph> graph;
  if (a.construction == "evolving") {
    if (j.contains("graph")) throw ConfigError("field 'graph': the evolving construction defines its own graph; omit it");
    evolving = evolving_graph_stream(a.alpha, horizon, seed);
    stream = evolving->stream();
  } else {
    if (!j.contains("graph")) throw ConfigError("field 'graph': missing");
    graph = make_graph(detail::parse_graph(j["graph"], base));
    stream = make_stream(a, *graph, horizon, seed).first;
  }

  std::ostringstream csv;
  csv << "t,action,loss\n";
  for (std::uint64_t t = 1; t <= horizon; ++t)
    for (Vertex i = 0; i < stream->num_actions(); ++i)
      csv << t << ',' << i << ',' << format_number(stream->loss(t, i)) << '\n';

  const auto& info = stream->info();
  json meta = {{"construction", info.construction},
               {"horizon", horizon},
               {"num_actions", stream->num_actions()},
               {"seed", seed},
               {"epsilon", info.epsilon},
               {"sigma", info.sigma},
               {"best_action", info.best_action ? json(*info.best_action) : json(nullptr)},
               {"walk_actions", info.walk_actions},
               {"notes", info.notes},
               {"adversary", to_json(a)}};
  if (evolving) {
    std::vector<Vertex> revealing(horizon);
    for (std::uint64_t t = 1; t <= horizon; ++t) revealing[t - 1] = evolving->revealing(t);
    meta["revealing"] = std::move(revealing);
  }
  if (graph) meta["graph"] = to_json(detail::parse_graph(j["graph"], base));

  fs::path dir = j.contains("out") ? fs::path(detail::get_field<std::string>(j, "", "out")) : fs::path(".");
  if (const char* env = std::getenv(kOutputEnvVar); env && *env) dir = env;
  if (o.out) dir = *o.out;
  write_outputs(dir, {{"losses.csv", csv.str()}, {"losses.meta.json", meta.dump(2) + "\n"}});
  std::printf("wrote %s and %s\n", (dir / "losses.csv").string().c_str(), (dir / "losses.meta.json").string().c_str());
  return 0;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

int cmd_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  auto column = [&](std::initializer_list<const char*> names) -> std::size_t {
    for (const char* name : names) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    }
    throw std::runtime_error(path + ": header needs a '" + std::string(*names.begin()) + "' column");
  };
  const std::size_t h_col = column({"horizon", "T"});
  const std::size_t r_col = column({"total_regret", "regret", "mean_regret"});
  std::map<double, std::pair<double, std::size_t>> by_horizon;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields");
    double h = 0.0, r = 0.0;
    try {
      h = std::stod(cells[h_col]);
      r = std::stod(cells[r_col]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": non-numeric horizon or regret");
    }
    auto& [sum, count] = by_horizon[h];
    sum += r;
    ++count;
  }
  std::vector<std::pair<double, double>> points;
  for (const auto& [h, acc] : by_horizon) points.emplace_back(h, acc.first / static_cast<double>(acc.second));
  const auto fit = fit_exponent(points);
  for (const auto& [h, r] : points) std::printf("T=%.10g mean_regret=%.10g\n", h, r);
  std::printf("slope=%.6f\nintercept=%.6f\nstderr=%.6g\n", fit.slope, fit.intercept, fit.std_error);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandits with feedback graphs and switching costs: experiments and tools"};
  app.require_subcommand(1);
  Overrides o;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  std::string out;
  app.add_option("--seed", seed, "Master seed, overriding the config");
  app.add_option("--jobs", jobs, "Worker threads (0: one per hardware thread)");
  app.add_option("--out", out, "Output directory (overrides $GRAPHBANDIT_OUT and the config)");

  std::string file;
  auto* run = app.add_subcommand("run", "Single run at the first horizon; writes trace.csv and report.json");
  run->add_option("config", file, "Experiment config (JSON)")->required();
  auto* sweep = app.add_subcommand("sweep", "All horizons and repetitions; writes summary.json and runs.csv");
  sweep->add_option("config", file, "Experiment config (JSON)")->required();
  auto* info = app.add_subcommand("graph-info", "Size, degree, greedy dominating set and exact statistics of a graph");
  info->add_option("edge_list", file, "Edge-list file")->required();
  auto* make = app.add_subcommand("make-adversary", "Write a loss table (losses.csv) and its metadata");
  make->add_option("spec", file, "Adversary spec (JSON)")->required();
  auto* fit = app.add_subcommand("fit", "Fit the regret growth exponent from runs.csv");
  fit->add_option("runs_csv", file, "CSV with horizon and total_regret columns")->required();
  for (auto* sub : {run, sweep, make}) {
    sub->add_option("--seed", seed, "Master seed, overriding the config");
    sub->add_option("--jobs", jobs, "Worker threads");
    sub->add_option("--out", out, "Output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const auto given = [&](const char* name) {
    if (app.count(name) > 0) return true;
    for (auto* sub : {run, sweep, make})
      if (sub->parsed() && sub->count(name) > 0) return true;
    return false;
  };
  if (given("--seed")) o.seed = seed;
  if (given("--jobs")) o.jobs = jobs;
  if (given("--out")) o.out = out;

  try {
    if (*run) return cmd_run(file, o);
    if (*sweep) return cmd_sweep(file, o);
    if (*info) return cmd_graph_info(file);
    if (*make) return cmd_make_adversary(file, o);
    return cmd_fit(file);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
