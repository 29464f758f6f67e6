#pragma once

// KL drift between consecutive environment distributions: Gaussian closed
// forms, path lengths, tilt schedules, windowed plug-in estimation and the
// stress calibration fit.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "trustdecay/learners.hpp"

namespace trustdecay {

struct RoundData;

struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  // Symmetric with smallest eigenvalue > 1e-10, dimensions consistent.
  void validate() const;
};

// Equal-covariance case: 0.5 dmu^T Sigma^{-1} dmu. Throws if the two
// covariances differ by more than 1e-12 in any entry.
double gaussian_kl(const GaussianParams& p1, const GaussianParams& p2);

// General closed form KL(p || q) for full-rank Gaussians:
// 0.5 (tr(Sq^-1 Sp) + dmu^T Sq^-1 dmu - k + log det Sq - log det Sp).
double gaussian_kl_general(const GaussianParams& p, const GaussianParams& q);

class DriftSchedule {
 public:
  DriftSchedule() = default;
  // epsilons[i] is the drift into round i + 2; entries must be finite, >= 0.
  explicit DriftSchedule(std::vector<double> epsilons);

  std::span<const double> epsilons() const noexcept { return epsilons_; }
  std::size_t size() const noexcept { return epsilons_.size(); }

 private:
  std::vector<double> epsilons_;
};

// S_T = sum sqrt(eps_t / 2)
double kl_path_length(const DriftSchedule& schedule);
double kl_path_length(std::span<const double> epsilons);

// kappa * sqrt(eps)
double lambda_schedule(double epsilon, double kappa);

// Gaussian plug-in: sample means per window, pooled diagonal variance
// floored at 1e-6, then the equal-covariance KL. Each window needs at
// least two observations of equal dimension.
double plugin_drift_estimate(const std::vector<std::vector<double>>& samples_prev,
                             const std::vector<std::vector<double>>& samples_curr);

struct CalibrationFit {
  double a = 0.0;
  double b = 0.0;
  double max_violation = 0.0;
};

// Smallest a + b (on a refined grid, a, b <= 1e6) such that
//   |f_t(x) - f_{t-1}(x)| <= a <sigma_t, x> + b sqrt(eps_t / 2)
// for every consecutive pair of rounds and every probe point (the vertices
// plus `random_probes` seeded points of the simplex).
CalibrationFit calibration_fit(const std::vector<RoundData>& rounds,
                               std::size_t random_probes = 50,
                               std::uint64_t seed = 0);

// Per-round tilt intensity for one learner. Feed each round's observed
// loss, true drift and switch flag; returns lambda_t and the plug-in drift
// estimate computed from the last 2w observed loss vectors (0 until 2w
// rounds have been seen).
class TiltController {
 public:
  struct Output {
    double lambda = 0.0;
    double epsilon_hat = 0.0;
  };

  TiltController(TiltSchedule schedule, std::size_t stress_window);

  Output observe(std::span<const double> loss, double epsilon_true, bool switch_flag);

 private:
  TiltSchedule schedule_;
  std::size_t stress_window_;
  std::deque<std::vector<double>> history_;
  std::size_t rounds_since_switch_ = 0;
  bool in_window_ = false;
  double latched_epsilon_ = 0.0;
};

}  // namespace trustdecay
