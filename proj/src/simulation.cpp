#include "trustdecay/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trustdecay/drift.hpp"
#include "trustdecay/rng.hpp"

namespace trustdecay {
namespace {

RoundRecord record(const RoundData& round, const SimplexPoint& x, double lambda,
                   double epsilon_hat) {
  return RoundRecord{x, observed_value(round, x), instant_regret(round, x), lambda, epsilon_hat};
}

RunRecord run_hedge(const Trace& trace, const LearnerConfig& config, double eta, RunRecord run) {
  const std::size_t T = trace.horizon();
  const std::size_t points =
      config.grid_points > 0
          ? config.grid_points
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(T)))));
  const auto lambdas = hedge_lambda_grid(config.lambda_max, points);
  const double eta_master =
      config.eta_master > 0.0 ? config.eta_master : default_eta_master(lambdas.size(), T);

  // One gate shared by all instances: unit constant tilt scaled by lambda_j.
  TiltSchedule gate{TiltMode::constant, 0.0, 1.0, config.tilt.window};
  TiltController controller(gate, config.stress_window);
  MasterState master = MasterState::initial(trace.dim(), lambdas);
  std::vector<double> instance_losses(lambdas.size());

  for (const auto& round : trace.rounds) {
    const auto tilt = controller.observe(round.loss.values(), round.epsilon_true, round.switch_flag);
    const SimplexPoint x = master_prediction(master);
    double effective_lambda = 0.0;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      effective_lambda += master.master_weights[j] * lambdas[j] * tilt.lambda;
    }
    run.rounds.push_back(record(round, x, effective_lambda, tilt.epsilon_hat));

    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      instance_losses[j] = observed_value(round, master.instances[j].point);
    }
    MasterState next = hedge_master_step(master, instance_losses, eta_master);
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      const auto& inst = master.instances[j];
      next.instances[j] = tdmd_step(inst, feedback_gradient(round, inst.point),
                                    round.stress.values(), eta, lambdas[j] * tilt.lambda);
    }
    master = std::move(next);
  }
  return run;
}

}  // namespace

double resolved_eta(const LearnerConfig& config, std::size_t d, std::size_t T) {
  if (config.eta > 0.0) return config.eta;
  switch (config.kind) {
    case LearnerKind::bandit: return default_bandit_eta(d, T);
    case LearnerKind::tdons: return 1.0;
    default: return default_eta(d, T);
  }
}

RunRecord run_learner(const Trace& trace, const LearnerConfig& config, const std::string& label,
                      std::uint64_t seed) {
  config.validate();
  if (trace.rounds.empty()) throw std::invalid_argument("run_learner: empty trace");
  const std::size_t d = trace.dim();
  const std::size_t T = trace.horizon();
  const double eta = resolved_eta(config, d, T);

  RunRecord run;
  run.label = label;
  run.environment = trace.spec;
  run.rounds.reserve(T);

  if (config.kind == LearnerKind::hedge) return run_hedge(trace, config, eta, std::move(run));

  TiltSchedule schedule = config.tilt;
  if (config.kind == LearnerKind::eg || config.kind == LearnerKind::fixed_share) {
    schedule.mode = TiltMode::zero;
  }
  TiltController controller(schedule, config.stress_window);
  const double share = config.share_alpha > 0.0 ? config.share_alpha : 1.0 / static_cast<double>(T);
  const double gamma = config.exploration > 0.0 ? config.exploration : default_exploration(d, T);

  LearnerState state = config.kind == LearnerKind::tdons
                           ? LearnerState::initial_ons(d, config.ons_alpha)
                           : LearnerState::initial(d);

  for (const auto& round : trace.rounds) {
    const auto stress = round.stress.values();
    if (config.kind == LearnerKind::bandit) {
      if (round.model != LossModel::linear) {
        throw std::invalid_argument("bandit learner needs linear losses");
      }
      const SimplexPoint p(exploration_mixture(state.point, gamma));
      Rng rng(split_seed(seed, "arm", round.t));
      const std::size_t arm = sample_arm(state.point, gamma, rng);
      const double observed = round.loss.values()[arm];
      const auto estimate = importance_weighted_estimate(state.point, gamma, arm, observed);
      const auto tilt = controller.observe(estimate, round.epsilon_true, round.switch_flag);
      run.rounds.push_back(record(round, p, tilt.lambda, tilt.epsilon_hat));
      state = bandit_tdmd_step(state, arm, observed, eta, tilt.lambda, stress, gamma);
      continue;
    }

    const auto tilt = controller.observe(round.loss.values(), round.epsilon_true, round.switch_flag);
    run.rounds.push_back(record(round, state.point, tilt.lambda, tilt.epsilon_hat));
    const auto g = feedback_gradient(round, state.point);
    switch (config.kind) {
      case LearnerKind::eg:
      case LearnerKind::tdmd:
        state = tdmd_step(state, g, stress, eta, tilt.lambda);
        break;
      case LearnerKind::fixed_share:
        state = fixed_share_step(state, g, eta, share);
        break;
      case LearnerKind::tdons:
        state = tdons_step(state, g, stress, eta, tilt.lambda);
        break;
      default:
        break;
    }
  }
  return run;
}

}  // namespace trustdecay
