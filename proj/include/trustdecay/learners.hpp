#pragma once

// Sequential update rules on the probability simplex.
//
// All multiplicative updates share one kernel:
//   x' ∝ x ⊙ exp(-eta (g + lambda sigma))
// stabilized by subtracting the maximal exponent and followed by the
// probability floor. With lambda = 0 it is plain exponentiated gradient.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "trustdecay/geometry.hpp"
#include "trustdecay/rng.hpp"

namespace trustdecay {

enum class LearnerKind { eg, tdmd, fixed_share, hedge, tdons, bandit };

// How the tilt intensity lambda_t is chosen each round.
//   zero        lambda_t = 0
//   fixed_kappa lambda_t = kappa * sqrt(eps_t) from the true drift
//   plugin      lambda_t = kappa * sqrt(eps_hat_t) from windowed estimates
//   constant    lambda_t = lambda
// For fixed_kappa and constant a positive stress window H keeps the tilt
// active for H rounds starting at each flagged switch (latching the drift
// observed at the switch) and zero elsewhere.
enum class TiltMode { zero, fixed_kappa, plugin, constant };

struct TiltSchedule {
  TiltMode mode = TiltMode::zero;
  double kappa = 0.0;
  double lambda = 0.0;
  std::size_t window = 20;  // plug-in observations per side
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::tdmd;
  double eta = 0.0;  // 0 selects sqrt(log d / T)
  TiltSchedule tilt;
  std::size_t stress_window = 0;
  double exploration = 0.0;  // bandit gamma; 0 with kind=bandit selects default
  double ons_alpha = 1.0;
  double share_alpha = 0.0;  // fixed-share mixing; 0 selects 1/T
  // Hedge over stress intensities: geometric grid on [lambda_max/2^(M-1),
  // lambda_max] plus lambda = 0. grid_points = 0 selects M = ceil(log2 T).
  double lambda_max = 1.0;
  std::size_t grid_points = 0;
  double eta_master = 0.0;  // 0 selects sqrt(8 ln M / T)

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

std::string_view to_string(LearnerKind kind);
std::string_view to_string(TiltMode mode);
LearnerKind parse_learner_kind(std::string_view name);
TiltMode parse_tilt_mode(std::string_view name);

struct LearnerState {
  SimplexPoint point;
  std::size_t round = 0;
  std::optional<Eigen::MatrixXd> curvature;  // TD-ONS only
  double cumulative_loss = 0.0;

  static LearnerState initial(std::size_t d);
  static LearnerState initial_ons(std::size_t d, double alpha);
};

struct MasterState {
  std::vector<LearnerState> instances;
  std::vector<double> lambdas;
  SimplexPoint master_weights;

  static MasterState initial(std::size_t d, std::vector<double> lambdas);
};

double default_eta(std::size_t d, std::size_t horizon);
double default_eta_master(std::size_t instances, std::size_t horizon);
double default_bandit_eta(std::size_t d, std::size_t horizon);
double default_exploration(std::size_t d, std::size_t horizon);
std::vector<double> hedge_lambda_grid(double lambda_max, std::size_t points);

// Core multiplicative kernel; `lambda` scales `sigma`.
SimplexPoint multiplicative_update(const SimplexPoint& x,
                                   std::span<const double> g,
                                   std::span<const double> sigma, double eta,
                                   double lambda);

LearnerState tdmd_step(const LearnerState& state, std::span<const double> g,
                       std::span<const double> sigma, double eta, double lambda);

// Posterior tilt written in log space: log P' = log P - eta (l + lambda s)
// normalized by log-sum-exp. Mathematically the same map as tdmd_step;
// kept as a separately coded path so the two can be checked against each
// other.
SimplexPoint tilted_posterior_step(const SimplexPoint& prior,
                                   std::span<const double> loss,
                                   std::span<const double> sigma, double eta,
                                   double lambda);

LearnerState fixed_share_step(const LearnerState& state,
                              std::span<const double> loss, double eta,
                              double share_alpha);

MasterState hedge_master_step(const MasterState& master,
                              std::span<const double> instance_losses,
                              double eta_master);
SimplexPoint master_prediction(const MasterState& master);

LearnerState tdons_step(const LearnerState& state, std::span<const double> g,
                        std::span<const double> sigma, double eta, double lambda);

// (1 - gamma) x + gamma / d
std::vector<double> exploration_mixture(const SimplexPoint& x, double exploration);

std::size_t sample_arm(const SimplexPoint& point, double exploration, Rng& rng);

// Importance-weighted estimate: zero except at `arm`, where it equals
// observed_loss divided by the arm's sampling probability.
std::vector<double> importance_weighted_estimate(const SimplexPoint& point,
                                                 double exploration,
                                                 std::size_t arm,
                                                 double observed_loss);

LearnerState bandit_tdmd_step(const LearnerState& state, std::size_t chosen_arm,
                              double observed_loss, double eta, double lambda,
                              std::span<const double> sigma, double exploration);

}  // namespace trustdecay
