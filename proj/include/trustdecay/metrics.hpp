#pragma once

// Regret accounting and distributional robustness measurements.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "trustdecay/environments.hpp"
#include "trustdecay/geometry.hpp"

namespace trustdecay {

struct RoundRecord {
  SimplexPoint x = SimplexPoint::uniform(2);
  double incurred_loss = 0.0;
  double instant_regret = 0.0;
  double lambda = 0.0;
  double epsilon_hat = 0.0;
};

struct RunRecord {
  std::string label;
  EnvironmentSpec environment;
  std::vector<RoundRecord> rounds;

  double cumulative_regret() const;
};

struct RegretReport {
  std::string label;
  double cumulative_regret = 0.0;
  double S_T = 0.0;
  double V_T = 0.0;
  double comparator_path = 0.0;
  std::vector<double> per_switch_tails;
  std::map<std::size_t, double> outlier_regret_k;

  nlohmann::ordered_json to_json() const;
};

struct ReportOptions {
  std::vector<std::size_t> outlier_ks;
  // 0: a switch's tail runs to the round before the next switch (or T).
  // H > 0: the tail is the H rounds starting at the switch.
  std::size_t tail_window = 0;
};

RegretReport dynamic_regret(const RunRecord& run, const Trace& trace,
                            const ReportOptions& options = {});

// Regret with the k largest instant regrets removed.
double regret_excluding(std::span<const double> instant_regrets, std::size_t k);
std::vector<double> per_switch_tails(std::span<const double> instant_regrets,
                                     const Trace& trace, std::size_t tail_window);
double comparator_path_length(const Trace& trace);
// sum ||sigma_t - sigma_{t-1}||_inf^2
double stress_variation(const Trace& trace);

// Outcome law D over m outcomes and a loss table with one column per
// decision candidate (rows: outcomes).
struct FiniteDistribution {
  SimplexPoint probabilities = SimplexPoint::uniform(2);
  Eigen::MatrixXd loss_table;

  FiniteDistribution() = default;
  FiniteDistribution(SimplexPoint probabilities, Eigen::MatrixXd loss_table);

  std::size_t support_size() const { return probabilities.dim(); }
  std::size_t candidates() const { return static_cast<std::size_t>(loss_table.cols()); }
  // Per-outcome loss of a mixed decision (linear in x).
  std::vector<double> decision_loss(const SimplexPoint& x) const;
  std::vector<double> decision_loss(std::size_t candidate) const;
};

struct TiltResult {
  double value = 0.0;
  SimplexPoint tilted = SimplexPoint::uniform(2);
  double eta_star = 0.0;  // +inf when the ball reaches the point mass on argmax h
};

// sup of E_Q[h] over KL(Q || D) <= epsilon, attained by Q ∝ D exp(eta h).
TiltResult worst_case_tilt(const SimplexPoint& D, std::span<const double> h, double epsilon);

double fragility(const SimplexPoint& x, const FiniteDistribution& D, double epsilon);
double fragility(std::size_t candidate, const FiniteDistribution& D, double epsilon);

// Radius at which every point mass of D lies inside the KL ball.
double saturation_radius(const SimplexPoint& D);

struct Bandwidth {
  double value = 0.0;
  bool unbounded = false;

  std::string to_string() const;  // "inf" when unbounded
};

Bandwidth belief_bandwidth(const SimplexPoint& x, const FiniteDistribution& D, double delta,
                           double tol);

// Mean cumulative regret of one learner on a trace; the seed drives any
// learner-side randomness.
using RegretFunction = std::function<double(const Trace&, std::uint64_t)>;

// Maps an intensity s >= 0 and a seed to an environment. Drift should grow
// with s; probes never exceed max_intensity.
struct DriftFamily {
  std::function<EnvironmentSpec(double, std::uint64_t)> make;
  double max_intensity = 0.0;
};

DriftFamily switch_drift_family(std::size_t T, std::size_t stress_window,
                                double max_intensity);

struct FiProbe {
  double intensity = 0.0;
  double path_length = 0.0;
  double mean_regret = 0.0;
  bool within_budget = false;
};

struct FragilityIndexResult {
  double index = 0.0;      // largest tolerated S_T
  double intensity = 0.0;  // intensity attaining it
  double budget = 0.0;     // alpha sqrt(T)
  std::vector<FiProbe> probes;
  std::string diagnostic;
};

FiProbe probe_intensity(const RegretFunction& learner, const DriftFamily& family, double s,
                        double budget, std::size_t seeds, std::uint64_t seed);

FragilityIndexResult fragility_index(const RegretFunction& learner, double alpha, std::size_t T,
                                     const DriftFamily& family, double search_tol,
                                     std::size_t seeds = 10, std::uint64_t seed = 0);

struct SensitivityResult {
  double coverage = 0.0;          // fraction within the stated bound
  double coverage_relaxed = 0.0;  // fraction within twice the bound
  double bound = 0.0;
  double mean_deviation = 0.0;
  std::vector<double> deviations;
  bool discrepancy = false;  // stated bound misses 1 - alpha
};

SensitivityResult sensitivity_mc(std::span<const double> loss_x, const SimplexPoint& D,
                                 double epsilon, double alpha, std::size_t T, std::size_t trials,
                                 std::uint64_t seed);
SensitivityResult sensitivity_mc(const SimplexPoint& x, const FiniteDistribution& D,
                                 double epsilon, double alpha, std::size_t T, std::size_t trials,
                                 std::uint64_t seed);

}  // namespace trustdecay
