// trustdecay: command-line front end for the experiment harness.
//
// Exit codes: 0 ok, 2 bad configuration, 3 numerical failure, 1 anything else.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "trustdecay/error.hpp"
#include "trustdecay/harness/config.hpp"
#include "trustdecay/harness/csv.hpp"
#include "trustdecay/harness/experiment.hpp"

namespace td = trustdecay;

namespace {

struct CommonArgs {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonArgs& args, bool config_required) {
  auto* opt = sub->add_option("--config", args.config, "key=value configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--out", args.out, "output directory")->capture_default_str();
  sub->add_option("--seed", args.seed, "root seed (overrides the config's seed key)");
}

td::Config load(const CommonArgs& args) {
  td::Config cfg = args.config.empty() ? td::Config{} : td::Config::load(args.config);
  if (args.seed) cfg.set("seed", std::to_string(*args.seed));
  return cfg;
}

void warn_unused(const td::Config& cfg) {
  for (const auto& key : cfg.unused_keys()) {
    std::cerr << "warning: unused config key '" << key << "'\n";
  }
}

void save_resolved(const td::Config& cfg, const std::filesystem::path& out) {
  td::write_file(out / "config_resolved.txt", cfg.serialize());
}

void print_reports(const td::ExperimentResult& r) {
  for (const auto& rep : r.reports) {
    std::printf("%-14s regret=%.6g S_T=%.6g V_T=%.6g\n", rep.label.c_str(), rep.cumulative_regret,
                rep.S_T, rep.V_T);
  }
}

int cmd_simulate(const CommonArgs& args) {
  const td::Config cfg = load(args);
  auto exp = td::experiment_from_config(cfg);
  exp.output_dir = args.out;
  warn_unused(cfg);
  const auto result = td::run_experiment(exp);
  save_resolved(td::experiment_to_config(exp), args.out);
  print_reports(result);
  return 0;
}

int cmd_demo(const CommonArgs& args, std::size_t segment_length) {
  const td::Config user = load(args);
  const std::uint64_t seed = user.get_u64("seed", 0);
  td::Config cfg = td::experiment_to_config(td::demo_two_expert(segment_length, seed));
  for (const auto& [k, v] : user.entries()) cfg.set(k, v);
  auto exp = td::experiment_from_config(cfg);
  exp.output_dir = args.out;
  warn_unused(cfg);
  const auto result = td::run_experiment(exp);
  save_resolved(td::experiment_to_config(exp), args.out);
  print_reports(result);
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const td::Config cfg = load(args);
  const auto exp = td::experiment_from_config(cfg);
  const auto spec = td::sweep_from_config(cfg);
  warn_unused(cfg);
  const auto rows = td::sweep(exp, spec);
  std::ostringstream csv;
  td::write_sweep_csv(csv, rows);
  td::write_file(std::filesystem::path(args.out) / "sweep.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_fragility(const CommonArgs& args) {
  const td::Config cfg = load(args);
  const auto study = td::fragility_study_from_config(cfg);
  warn_unused(cfg);
  const auto r = td::run_fragility_study(study, args.out);
  for (const auto& [eps, f] : r.fragility) std::printf("epsilon=%-10g fragility=%.6g\n", eps, f);
  for (const auto& [delta, bw] : r.bandwidth) {
    std::printf("delta=%-10g bandwidth=%s\n", delta, bw.to_string().c_str());
  }
  return 0;
}

int cmd_fi_search(const CommonArgs& args) {
  const td::Config cfg = load(args);
  const auto search = td::fi_search_from_config(cfg);
  warn_unused(cfg);
  for (const auto& [label, r] : td::run_fi_search(search, args.out)) {
    std::printf("%-14s FI=%.6g intensity=%.6g budget=%.6g%s%s\n", label.c_str(), r.index,
                r.intensity, r.budget, r.diagnostic.empty() ? "" : " note: ", r.diagnostic.c_str());
  }
  return 0;
}

int cmd_distributed(const CommonArgs& args) {
  const td::Config cfg = load(args);
  const auto study = td::distributed_from_config(cfg);
  warn_unused(cfg);
  const auto r = td::run_distributed(study, args.out);
  std::printf("agents=%zu mean_agent_regret=%.6g final_consensus_error=%.6g\n", r.agents.size(),
              r.mean_agent_regret, r.consensus.empty() ? 0.0 : r.consensus.back());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-decay online learning experiments"};
  app.require_subcommand(1);

  CommonArgs sim_args, sweep_args, frag_args, fi_args, dist_args, demo_args;
  std::size_t demo_L = 200;
  auto* sim = app.add_subcommand("simulate", "run every learner on one seeded environment");
  add_common(sim, sim_args, true);
  auto* sw = app.add_subcommand("sweep", "grid over one parameter, averaged over seeds");
  add_common(sw, sweep_args, true);
  auto* frag = app.add_subcommand("fragility", "KL fragility curve and belief bandwidth");
  add_common(frag, frag_args, true);
  auto* fi = app.add_subcommand("fi-search", "fragility index of each learner");
  add_common(fi, fi_args, true);
  auto* dist = app.add_subcommand("distributed", "gossip TD-MD over a topology");
  add_common(dist, dist_args, true);
  auto* demo = app.add_subcommand("demo", "two-expert switching demo (config optional)");
  add_common(demo, demo_args, false);
  demo->add_option("--segment-length", demo_L, "rounds between switches")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_args);
    if (*sw) return cmd_sweep(sweep_args);
    if (*frag) return cmd_fragility(frag_args);
    if (*fi) return cmd_fi_search(fi_args);
    if (*dist) return cmd_distributed(dist_args);
    if (*demo) return cmd_demo(demo_args, demo_L);
  } catch (const td::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const td::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
