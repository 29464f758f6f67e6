#pragma once

// Seeded orchestration of the canned studies behind the CLI.
//
// Seed tree, rooted at the experiment seed s:
//   environment      split_seed(s, "environment", 0)
//   learner i        split_seed(s, "learner", i)
//   sweep replicate  s for replicate 0, split_seed(s, "sweep", r) after
//   agent shard i    split_seed(environment seed, "agent", i)

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trustdecay/distributed.hpp"
#include "trustdecay/drift.hpp"
#include "trustdecay/environments.hpp"
#include "trustdecay/harness/config.hpp"
#include "trustdecay/learners.hpp"
#include "trustdecay/metrics.hpp"

namespace trustdecay {

struct LearnerEntry {
  std::string label;
  LearnerConfig config;
};

struct MetricsRequest {
  std::vector<std::size_t> outlier_ks;
  std::size_t tail_window = 0;
  bool calibration = false;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  std::vector<LearnerEntry> learners;
  MetricsRequest metrics;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  // Throws ConfigError with the offending key path.
  void validate() const;
  EnvironmentSpec seeded_environment() const;
  std::uint64_t learner_seed(std::size_t index) const;
};

EnvironmentSpec environment_from_config(const Config& cfg);
void environment_to_config(const EnvironmentSpec& spec, Config& cfg);
LearnerConfig learner_from_config(const Config& cfg, const std::string& label);
void learner_to_config(const LearnerConfig& config, const std::string& label, Config& cfg);
std::vector<LearnerEntry> learners_from_config(const Config& cfg);

ExperimentConfig experiment_from_config(const Config& cfg);
Config experiment_to_config(const ExperimentConfig& config);

struct ExperimentResult {
  Trace trace;
  std::vector<RunRecord> runs;
  std::vector<RegretReport> reports;
  std::optional<CalibrationFit> calibration;
};

// Every learner plays the same trace. When output_dir is set writes
// trace.csv, run_<label>.csv and report_<label>.json (plus
// calibration.json when requested).
ExperimentResult run_experiment(const ExperimentConfig& config);

// Two experts, K = 10 switches every `segment_length` rounds,
// T = (K + 1) * segment_length, stress window H = 5. Learners: EG and
// fixed-share (alpha = 1/T) at eta = sqrt(ln 2 / T), and TD-MD at the same
// eta with constant tilt 6 / eta inside the stress window.
ExperimentConfig demo_two_expert(std::size_t segment_length = 200, std::uint64_t seed = 0);

struct SweepSpec {
  std::string parameter;  // lambda, eta, T or intensity
  std::vector<double> grid;
  std::size_t seeds = 1;
};

struct SweepRow {
  double value = 0.0;
  std::string label;
  double mean_regret = 0.0;
  double stddev_regret = 0.0;
  std::size_t seeds = 0;
};

SweepSpec sweep_from_config(const Config& cfg);
// Returns a copy of `config` with the swept parameter set to `value`.
ExperimentConfig apply_sweep_parameter(ExperimentConfig config, const std::string& parameter,
                                       double value);
std::vector<SweepRow> sweep(const ExperimentConfig& config, const SweepSpec& spec);
// value,learner,mean_regret,stddev_regret,seeds
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct FragilityStudy {
  FiniteDistribution distribution;
  SimplexPoint decision = SimplexPoint::uniform(2);
  std::vector<double> epsilons;
  std::vector<double> deltas;
  double tol = 1e-6;
};

struct FragilityStudyResult {
  std::vector<std::pair<double, double>> fragility;
  std::vector<std::pair<double, Bandwidth>> bandwidth;
};

FragilityStudy fragility_study_from_config(const Config& cfg);
// Writes fragility.csv and bandwidth.csv when `out` is nonempty.
FragilityStudyResult run_fragility_study(const FragilityStudy& study,
                                         const std::filesystem::path& out);

struct FiSearch {
  std::vector<LearnerEntry> learners;
  std::size_t T = 4096;
  double alpha = 3.0;
  std::size_t stress_window = 5;
  double max_intensity = 0.0;  // 0 selects T / 8
  double tol = 0.5;
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
};

FiSearch fi_search_from_config(const Config& cfg);
RegretFunction learner_regret(const LearnerConfig& config);
// Writes fi_probes.csv and fi_summary.json when `out` is nonempty.
std::vector<std::pair<std::string, FragilityIndexResult>> run_fi_search(
    const FiSearch& search, const std::filesystem::path& out);

struct DistributedStudy {
  EnvironmentSpec environment;
  LearnerConfig learner;
  TopologySpec topology;
  std::uint64_t seed = 0;
};

DistributedStudy distributed_from_config(const Config& cfg);
// One trace per agent: the environment with seed split_seed(env_seed, "agent", i).
std::vector<Trace> agent_shards(const EnvironmentSpec& environment, std::size_t n);
// Writes consensus.csv and distributed_summary.json when `out` is nonempty.
GossipResult run_distributed(const DistributedStudy& study, const std::filesystem::path& out);

}  // namespace trustdecay
