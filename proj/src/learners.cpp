#include "trustdecay/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trustdecay/error.hpp"
#include "trustdecay/simd/kernels.hpp"

namespace trustdecay {
namespace {

void require_dims(std::size_t expected, std::span<const double> v, const char* what) {
  if (v.size() != expected) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(v.size()) + " vs " +
                                std::to_string(expected) + ")");
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

void require_step_args(double eta, double lambda) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be finite and >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
}

}  // namespace

void LearnerConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be > 0 (or 0 for default)");
  if (!(tilt.kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  if (!(tilt.lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (tilt.mode == TiltMode::plugin && tilt.window < 2) {
    throw std::invalid_argument("plug-in window must be >= 2");
  }
  if (!(exploration >= 0.0 && exploration <= 1.0)) {
    throw std::invalid_argument("exploration must lie in [0, 1]");
  }
  if (!(ons_alpha > 0.0)) throw std::invalid_argument("ons_alpha must be > 0");
  if (!(share_alpha >= 0.0 && share_alpha < 1.0 + 1e-15)) {
    throw std::invalid_argument("share_alpha must lie in [0, 1]");
  }
  if (!(lambda_max >= 0.0)) throw std::invalid_argument("lambda_max must be >= 0");
  if (!(eta_master >= 0.0)) throw std::invalid_argument("eta_master must be >= 0");
}

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::eg: return "eg";
    case LearnerKind::tdmd: return "tdmd";
    case LearnerKind::fixed_share: return "fixed_share";
    case LearnerKind::hedge: return "hedge";
    case LearnerKind::tdons: return "tdons";
    case LearnerKind::bandit: return "bandit";
  }
  return "unknown";
}

std::string_view to_string(TiltMode mode) {
  switch (mode) {
    case TiltMode::zero: return "zero";
    case TiltMode::fixed_kappa: return "fixed_kappa";
    case TiltMode::plugin: return "plugin";
    case TiltMode::constant: return "constant";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  for (auto k : {LearnerKind::eg, LearnerKind::tdmd, LearnerKind::fixed_share,
                 LearnerKind::hedge, LearnerKind::tdons, LearnerKind::bandit}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown learner kind '" + std::string(name) + "'");
}

TiltMode parse_tilt_mode(std::string_view name) {
  for (auto m : {TiltMode::zero, TiltMode::fixed_kappa, TiltMode::plugin,
                 TiltMode::constant}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown tilt mode '" + std::string(name) + "'");
}

LearnerState LearnerState::initial(std::size_t d) {
  return LearnerState{SimplexPoint::uniform(d), 0, std::nullopt, 0.0};
}

LearnerState LearnerState::initial_ons(std::size_t d, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("ons alpha must be > 0");
  const auto n = static_cast<Eigen::Index>(d);
  return LearnerState{SimplexPoint::uniform(d), 0,
                      Eigen::MatrixXd(alpha * Eigen::MatrixXd::Identity(n, n)), 0.0};
}

MasterState MasterState::initial(std::size_t d, std::vector<double> lambdas) {
  if (lambdas.size() < 2) throw std::invalid_argument("hedge needs at least two instances");
  std::vector<LearnerState> instances(lambdas.size(), LearnerState::initial(d));
  const std::size_t m = lambdas.size();
  return MasterState{std::move(instances), std::move(lambdas), SimplexPoint::uniform(m)};
}

double default_eta(std::size_t d, std::size_t horizon) {
  return std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(horizon));
}

double default_eta_master(std::size_t instances, std::size_t horizon) {
  return std::sqrt(8.0 * std::log(static_cast<double>(instances)) /
                   static_cast<double>(horizon));
}

double default_bandit_eta(std::size_t d, std::size_t horizon) {
  const double dd = static_cast<double>(d);
  return std::sqrt(std::log(dd) / (dd * static_cast<double>(horizon)));
}

double default_exploration(std::size_t d, std::size_t horizon) {
  const double dd = static_cast<double>(d);
  return std::min(1.0, std::sqrt(dd * std::log(dd) / static_cast<double>(horizon)));
}

std::vector<double> hedge_lambda_grid(double lambda_max, std::size_t points) {
  if (points == 0) throw std::invalid_argument("hedge grid needs at least one point");
  std::vector<double> grid{0.0};
  for (std::size_t j = 0; j < points; ++j) {
    grid.push_back(lambda_max / std::ldexp(1.0, static_cast<int>(points - 1 - j)));
  }
  return grid;
}

SimplexPoint multiplicative_update(const SimplexPoint& x, std::span<const double> g,
                                   std::span<const double> sigma, double eta,
                                   double lambda) {
  const std::size_t d = x.dim();
  require_dims(d, g, "multiplicative_update(g)");
  require_dims(d, sigma, "multiplicative_update(sigma)");
  require_step_args(eta, lambda);

  std::vector<double> exponent(d);
  simd::axpy(exponent, g, lambda, sigma);
  simd::scale(exponent, -eta);
  const double shift = simd::max(exponent);
  if (!std::isfinite(shift)) throw NumericalError("multiplicative_update: non-finite exponent");

  std::vector<double> w(d);
  const auto xw = x.weights();
  for (std::size_t i = 0; i < d; ++i) w[i] = xw[i] * std::exp(exponent[i] - shift);
  return renormalize_with_floor(std::move(w));
}

LearnerState tdmd_step(const LearnerState& state, std::span<const double> g,
                       std::span<const double> sigma, double eta, double lambda) {
  LearnerState next{multiplicative_update(state.point, g, sigma, eta, lambda),
                    state.round + 1, state.curvature,
                    state.cumulative_loss + simd::dot(state.point.weights(), g)};
  return next;
}

SimplexPoint tilted_posterior_step(const SimplexPoint& prior, std::span<const double> loss,
                                   std::span<const double> sigma, double eta,
                                   double lambda) {
  const std::size_t d = prior.dim();
  require_dims(d, loss, "tilted_posterior_step(loss)");
  require_dims(d, sigma, "tilted_posterior_step(sigma)");
  require_step_args(eta, lambda);

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_post(d);
  double top = kNegInf;
  for (std::size_t i = 0; i < d; ++i) {
    log_post[i] = prior[i] > 0.0 ? std::log(prior[i]) - eta * (loss[i] + lambda * sigma[i])
                                 : kNegInf;
    top = std::max(top, log_post[i]);
  }
  if (!std::isfinite(top)) throw NumericalError("tilted_posterior_step: non-finite log weight");
  double log_norm = 0.0;
  for (double v : log_post) log_norm += std::exp(v - top);
  log_norm = top + std::log(log_norm);

  std::vector<double> post(d);
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    post[i] = std::max(std::exp(log_post[i] - log_norm), kProbabilityFloor);
    total += post[i];
  }
  for (double& p : post) p /= total;
  return SimplexPoint(std::move(post));
}

LearnerState fixed_share_step(const LearnerState& state, std::span<const double> loss,
                              double eta, double share_alpha) {
  if (!(share_alpha >= 0.0 && share_alpha <= 1.0)) {
    throw std::invalid_argument("fixed_share_step: share_alpha must lie in [0, 1]");
  }
  const std::vector<double> zero(state.point.dim(), 0.0);
  const SimplexPoint updated = multiplicative_update(state.point, loss, zero, eta, 0.0);
  const double uniform = share_alpha / static_cast<double>(updated.dim());
  std::vector<double> mixed(updated.dim());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = (1.0 - share_alpha) * updated[i] + uniform;
  }
  return LearnerState{renormalize_with_floor(std::move(mixed)), state.round + 1,
                      state.curvature,
                      state.cumulative_loss + simd::dot(state.point.weights(), loss)};
}

MasterState hedge_master_step(const MasterState& master,
                              std::span<const double> instance_losses,
                              double eta_master) {
  const std::size_t m = master.master_weights.dim();
  require_dims(m, instance_losses, "hedge_master_step");
  for (double l : instance_losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("hedge_master_step: non-finite instance loss");
  }
  const std::vector<double> zero(m, 0.0);
  MasterState next = master;
  next.master_weights =
      multiplicative_update(master.master_weights, instance_losses, zero, eta_master, 0.0);
  return next;
}

SimplexPoint master_prediction(const MasterState& master) {
  const std::size_t d = master.instances.front().point.dim();
  std::vector<double> mix(d, 0.0);
  for (std::size_t j = 0; j < master.instances.size(); ++j) {
    simd::axpy(mix, mix, master.master_weights[j], master.instances[j].point.weights());
  }
  return SimplexPoint::normalized(std::move(mix));
}

LearnerState tdons_step(const LearnerState& state, std::span<const double> g,
                        std::span<const double> sigma, double eta, double lambda) {
  if (!state.curvature) throw std::invalid_argument("tdons_step: state has no curvature matrix");
  const std::size_t d = state.point.dim();
  require_dims(d, g, "tdons_step(g)");
  require_dims(d, sigma, "tdons_step(sigma)");
  require_step_args(eta, lambda);
  const Eigen::MatrixXd& H = *state.curvature;
  require_positive_definite(H);

  const auto n = static_cast<Eigen::Index>(d);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g[i] + lambda * sigma[i];
  const Eigen::Map<const Eigen::VectorXd> x(state.point.weights().data(), n);

  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("tdons_step: curvature not PD");
  const Eigen::VectorXd y = x - eta * llt.solve(v);

  LearnerState next{project_simplex_mahalanobis(std::span<const double>(y.data(), d), H),
                    state.round + 1, Eigen::MatrixXd(H + v * v.transpose()),
                    state.cumulative_loss + simd::dot(state.point.weights(), g)};
  return next;
}

std::vector<double> exploration_mixture(const SimplexPoint& x, double exploration) {
  if (!(exploration >= 0.0 && exploration <= 1.0)) {
    throw std::invalid_argument("exploration must lie in [0, 1]");
  }
  const double uniform = exploration / static_cast<double>(x.dim());
  std::vector<double> p(x.dim());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - exploration) * x[i] + uniform;
  return p;
}

std::size_t sample_arm(const SimplexPoint& point, double exploration, Rng& rng) {
  const auto p = exploration_mixture(point, exploration);
  return rng.categorical(p);
}

std::vector<double> importance_weighted_estimate(const SimplexPoint& point,
                                                 double exploration, std::size_t arm,
                                                 double observed_loss) {
  if (arm >= point.dim()) throw std::invalid_argument("bandit: arm index out of range");
  const auto p = exploration_mixture(point, exploration);
  const double floor = exploration / static_cast<double>(point.dim());
  if (!(p[arm] > 0.0) || p[arm] < floor * (1.0 - 1e-12)) {
    throw std::invalid_argument("bandit: chosen arm has sampling probability below gamma/d");
  }
  std::vector<double> estimate(point.dim(), 0.0);
  estimate[arm] = observed_loss / p[arm];
  return estimate;
}

LearnerState bandit_tdmd_step(const LearnerState& state, std::size_t chosen_arm,
                              double observed_loss, double eta, double lambda,
                              std::span<const double> sigma, double exploration) {
  const auto estimate =
      importance_weighted_estimate(state.point, exploration, chosen_arm, observed_loss);
  LearnerState next{multiplicative_update(state.point, estimate, sigma, eta, lambda),
                    state.round + 1, state.curvature,
                    state.cumulative_loss + observed_loss};
  return next;
}

}  // namespace trustdecay
