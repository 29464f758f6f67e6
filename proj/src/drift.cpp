#include "trustdecay/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "trustdecay/environments.hpp"
#include "trustdecay/rng.hpp"
#include "trustdecay/simd/kernels.hpp"

namespace trustdecay {
namespace {

constexpr double kVarianceFloor = 1e-6;

Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("covariance is not positive definite");
  }
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::VectorXd window_mean(const std::vector<std::vector<double>>& window) {
  const auto d = static_cast<Eigen::Index>(window.front().size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& obs : window) {
    if (static_cast<Eigen::Index>(obs.size()) != d) {
      throw std::invalid_argument("plugin_drift_estimate: observation dimensions differ");
    }
    mean += Eigen::Map<const Eigen::VectorXd>(obs.data(), d);
  }
  return mean / static_cast<double>(window.size());
}

}  // namespace

void GaussianParams::validate() const {
  if (mean.size() == 0) throw std::invalid_argument("GaussianParams: empty mean");
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw std::invalid_argument("GaussianParams: covariance dimension mismatch");
  }
  if (!mean.allFinite()) throw std::invalid_argument("GaussianParams: non-finite mean");
  require_positive_definite(covariance);
}

double gaussian_kl(const GaussianParams& p1, const GaussianParams& p2) {
  p1.validate();
  p2.validate();
  if (p1.mean.size() != p2.mean.size()) {
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  }
  if ((p1.covariance - p2.covariance).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("gaussian_kl: fixed-covariance case only");
  }
  const Eigen::VectorXd dmu = p1.mean - p2.mean;
  const auto llt = checked_cholesky(p1.covariance);
  return std::max(0.0, 0.5 * dmu.dot(llt.solve(dmu)));
}

double gaussian_kl_general(const GaussianParams& p, const GaussianParams& q) {
  p.validate();
  q.validate();
  if (p.mean.size() != q.mean.size()) {
    throw std::invalid_argument("gaussian_kl_general: dimension mismatch");
  }
  const auto llt_p = checked_cholesky(p.covariance);
  const auto llt_q = checked_cholesky(q.covariance);
  const Eigen::VectorXd dmu = q.mean - p.mean;
  const double trace = llt_q.solve(p.covariance).trace();
  const double mahal = dmu.dot(llt_q.solve(dmu));
  const double k = static_cast<double>(p.mean.size());
  return std::max(0.0, 0.5 * (trace + mahal - k + log_det(llt_q) - log_det(llt_p)));
}

DriftSchedule::DriftSchedule(std::vector<double> epsilons) : epsilons_(std::move(epsilons)) {
  for (double e : epsilons_) {
    if (!std::isfinite(e) || e < 0.0) {
      throw std::invalid_argument("DriftSchedule: entries must be finite and >= 0");
    }
  }
}

double kl_path_length(std::span<const double> epsilons) {
  double total = 0.0;
  for (double e : epsilons) {
    if (!(e >= 0.0)) throw std::invalid_argument("kl_path_length: negative drift");
    total += std::sqrt(e / 2.0);
  }
  return total;
}

double kl_path_length(const DriftSchedule& schedule) {
  return kl_path_length(schedule.epsilons());
}

double lambda_schedule(double epsilon, double kappa) {
  if (!(epsilon >= 0.0) || !(kappa >= 0.0)) {
    throw std::invalid_argument("lambda_schedule: arguments must be >= 0");
  }
  return kappa * std::sqrt(epsilon);
}

double plugin_drift_estimate(const std::vector<std::vector<double>>& samples_prev,
                             const std::vector<std::vector<double>>& samples_curr) {
  if (samples_prev.size() < 2 || samples_curr.size() < 2) {
    throw std::invalid_argument("plugin_drift_estimate: window shorter than 2");
  }
  const Eigen::VectorXd mu_prev = window_mean(samples_prev);
  const Eigen::VectorXd mu_curr = window_mean(samples_curr);
  if (mu_prev.size() != mu_curr.size()) {
    throw std::invalid_argument("plugin_drift_estimate: observation dimensions differ");
  }
  const auto d = mu_prev.size();

  Eigen::VectorXd ss = Eigen::VectorXd::Zero(d);
  for (const auto& obs : samples_prev) {
    ss += (Eigen::Map<const Eigen::VectorXd>(obs.data(), d) - mu_prev).array().square().matrix();
  }
  for (const auto& obs : samples_curr) {
    ss += (Eigen::Map<const Eigen::VectorXd>(obs.data(), d) - mu_curr).array().square().matrix();
  }
  const double dof = static_cast<double>(samples_prev.size() + samples_curr.size() - 2);
  const Eigen::VectorXd var = (ss / dof).cwiseMax(kVarianceFloor);

  GaussianParams prev{mu_prev, var.asDiagonal()};
  GaussianParams curr{mu_curr, var.asDiagonal()};
  return gaussian_kl(curr, prev);
}

CalibrationFit calibration_fit(const std::vector<RoundData>& rounds,
                               std::size_t random_probes, std::uint64_t seed) {
  if (rounds.size() < 2) return {};
  const std::size_t d = rounds.front().expected_loss.size();

  std::vector<SimplexPoint> probes;
  for (std::size_t i = 0; i < d; ++i) probes.push_back(SimplexPoint::vertex(d, i));
  Rng rng(split_seed(seed, "calibration", 0));
  for (std::size_t p = 0; p < random_probes; ++p) {
    // Uniform on the simplex via normalized exponentials.
    std::vector<double> w(d);
    for (double& v : w) v = -std::log(1.0 - rng.uniform01());
    probes.push_back(SimplexPoint::normalized(std::move(w)));
  }

  // Each constraint: a * c + b * e >= r.
  struct Constraint {
    double r, c, e;
  };
  std::vector<Constraint> constraints;
  for (std::size_t t = 1; t < rounds.size(); ++t) {
    const double e = std::sqrt(rounds[t].epsilon_true / 2.0);
    for (const auto& x : probes) {
      const double r = std::fabs(expected_value(rounds[t], x) - expected_value(rounds[t - 1], x));
      const double c = simd::dot(rounds[t].stress.values(), x.weights());
      constraints.push_back({r, c, e});
    }
  }

  constexpr double kBound = 1e6;
  auto violation = [&](double a, double b) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& k : constraints) worst = std::max(worst, k.r - a * k.c - b * k.e);
    return worst;
  };
  // Smallest b >= 0 satisfying every constraint with e > 0 at this a.
  auto best_b = [&](double a) {
    double b = 0.0;
    for (const auto& k : constraints) {
      if (k.e > 0.0) b = std::max(b, (k.r - a * k.c) / k.e);
    }
    return std::min(b, kBound);
  };

  struct Candidate {
    double a, b, objective, violation;
  };
  auto evaluate = [&](double a) {
    const double b = best_b(a);
    return Candidate{a, b, a + b, violation(a, b)};
  };
  auto better = [](const Candidate& lhs, const Candidate& rhs) {
    const bool lf = lhs.violation <= 1e-12;
    const bool rf = rhs.violation <= 1e-12;
    if (lf != rf) return lf;
    if (lf) return lhs.objective < rhs.objective;
    return lhs.violation < rhs.violation;
  };

  std::vector<double> grid{0.0};
  for (int i = 0; i <= 120; ++i) grid.push_back(std::pow(10.0, -6.0 + 12.0 * i / 120.0));
  Candidate best = evaluate(0.0);
  for (double a : grid) {
    const Candidate c = evaluate(a);
    if (better(c, best)) best = c;
  }
  // Two refinement passes around the incumbent.
  auto pass_scale = [](int pass) { return pass == 0 ? 1.0 : 10.0; };
  for (int pass = 0; pass < 2; ++pass) {
    const double factor = std::pow(10.0, 0.1 / std::pow(10.0, pass));
    const double lo = best.a == 0.0 ? 0.0 : best.a / factor;
    const double hi = best.a == 0.0 ? 1e-6 / pass_scale(pass) : best.a * factor;
    for (int i = 0; i <= 100; ++i) {
      const Candidate c = evaluate(lo + (hi - lo) * i / 100.0);
      if (better(c, best)) best = c;
    }
  }
  return CalibrationFit{best.a, best.b, best.violation};
}

TiltController::TiltController(TiltSchedule schedule, std::size_t stress_window)
    : schedule_(schedule), stress_window_(stress_window) {
  if (schedule_.window < 2) throw std::invalid_argument("tilt window must be >= 2");
}

TiltController::Output TiltController::observe(std::span<const double> loss,
                                               double epsilon_true, bool switch_flag) {
  Output out;
  history_.emplace_back(loss.begin(), loss.end());
  const std::size_t w = schedule_.window;
  if (history_.size() > 2 * w) history_.pop_front();
  if (history_.size() == 2 * w) {
    std::vector<std::vector<double>> prev(history_.begin(), history_.begin() + w);
    std::vector<std::vector<double>> curr(history_.begin() + w, history_.end());
    out.epsilon_hat = plugin_drift_estimate(prev, curr);
  }

  if (switch_flag) {
    in_window_ = true;
    rounds_since_switch_ = 0;
    latched_epsilon_ = epsilon_true;
  } else if (in_window_) {
    ++rounds_since_switch_;
  }
  const bool windowed = stress_window_ > 0;
  const bool active = !windowed || (in_window_ && rounds_since_switch_ < stress_window_);

  switch (schedule_.mode) {
    case TiltMode::zero:
      break;
    case TiltMode::fixed_kappa:
      if (active) {
        out.lambda = lambda_schedule(windowed ? latched_epsilon_ : epsilon_true, schedule_.kappa);
      }
      break;
    case TiltMode::plugin:
      out.lambda = lambda_schedule(out.epsilon_hat, schedule_.kappa);
      break;
    case TiltMode::constant:
      if (active) out.lambda = schedule_.lambda;
      break;
  }
  return out;
}

}  // namespace trustdecay
