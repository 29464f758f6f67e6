#pragma once

// Synthetic drifting environments. Every generator is a pure function of
// its EnvironmentSpec: round t draws from a fresh engine seeded with
// split_seed(spec.seed, "round", t).

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trustdecay/geometry.hpp"

namespace trustdecay {

enum class EnvironmentKind {
  two_expert_switch,
  gaussian_drift,
  stationary,
  volatility_regime,
  adversarial_a,
  adversarial_b,
};

// linear:    f_t(x) = <x, expected_loss>, feedback g_t = loss
// quadratic: f_t(x) = ||x - comparator||^2, feedback 2 (x - comparator) + loss
//            (the loss column then holds the zero-mean gradient noise)
enum class LossModel { linear, quadratic };

struct RoundData {
  std::size_t t = 0;
  DualVector loss{std::vector<double>{}};
  DualVector stress{std::vector<double>{}};
  double epsilon_true = 0.0;
  bool switch_flag = false;
  int regime_id = 0;
  SimplexPoint comparator = SimplexPoint::uniform(2);
  std::vector<double> expected_loss;  // f_t at the vertices
  LossModel model = LossModel::linear;
  bool injected = false;
};

// K switches at tau_k = 1 + k L (k = 1..K, needs 1 + K L <= T); regime k
// has loss (0,1) for even k and (1,0) for odd k. Stress is the
// regime-aligned +-1 vector on tau_k <= t < tau_k + H. Regimes are read as
// two-point outcome laws Bernoulli(1/2 -+ delta/2), so the drift at every
// switch is their KL.
struct TwoExpertParams {
  std::size_t switches = 0;       // K
  std::size_t segment_length = 1; // L
  std::size_t stress_window = 0;  // H
  double delta = 0.8;
};

enum class MeanSchedule { constant, linear, switching, mixed };

// z_t ~ N(mu_t, diag(sd^2)), loss = clip(loss_bias + loss_scale z_t, 0, 1).
//   constant   mu_t = mu0
//   linear     mu_t = mu0 + (t - 1) step
//   switching  mu0 and mu1 alternate every `period` rounds
//   mixed      switching plus amplitude sin(2 pi t / wave_period) wave_direction
struct GaussianDriftParams {
  MeanSchedule schedule = MeanSchedule::constant;
  std::vector<double> mu0;
  std::vector<double> mu1;
  std::vector<double> step;
  std::vector<double> sd;
  std::size_t period = 1;
  double amplitude = 0.0;
  std::size_t wave_period = 1;
  std::vector<double> wave_direction;  // empty selects e_0 - e_1
  double loss_bias = 0.5;
  double loss_scale = 0.5;
};

struct StationaryParams {
  LossModel model = LossModel::linear;
  std::vector<double> means;   // linear: Bernoulli loss means
  std::vector<double> target;  // quadratic: x*
  double noise_sd = 0.0;       // quadratic gradient noise
  std::vector<double> stress;  // sigma_bar
  bool require_stress = false;
};

// Alternating low/high volatility blocks of `regime_length` rounds,
// starting low. Stress is B min(1, rolling_sd / vol_ref) per coordinate
// over the last 10 observed loss vectors.
struct VolatilityParams {
  std::vector<double> mu_low;
  std::vector<double> sd_low;
  std::vector<double> mu_high;
  std::vector<double> sd_high;
  std::size_t regime_length = 1;
  double stress_bound = 1.0;
  double vol_ref = 0.25;
  double loss_bias = 0.5;
  double loss_scale = 0.5;
};

// adversarial_a: D_t alternates Bernoulli(0.1) and Bernoulli(0.9) every
//   round, loss = (0.2 + 0.4 z, 0.6 + 0.4 z); the comparator never moves.
// adversarial_b: D fixed, loss alternates (0,1) and (1,0).
struct AdversarialParams {};

using EnvironmentParams = std::variant<TwoExpertParams, GaussianDriftParams, StationaryParams,
                                       VolatilityParams, AdversarialParams>;

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::two_expert_switch;
  std::size_t T = 1;
  EnvironmentParams params = TwoExpertParams{};
  std::uint64_t seed = 0;
  std::size_t outliers = 0;  // rounds replaced by outlier_injection

  void validate() const;
};

std::string_view to_string(EnvironmentKind kind);
EnvironmentKind parse_environment_kind(std::string_view name);
std::string_view to_string(MeanSchedule schedule);
MeanSchedule parse_mean_schedule(std::string_view name);
std::string_view to_string(LossModel model);
LossModel parse_loss_model(std::string_view name);

struct Trace {
  EnvironmentSpec spec;
  std::vector<RoundData> rounds;

  std::size_t dim() const { return rounds.empty() ? 0 : rounds.front().loss.dim(); }
  std::size_t horizon() const { return rounds.size(); }
  // epsilon_true for t = 2..T
  std::vector<double> epsilons() const;
};

std::vector<RoundData> two_expert_switch_env(const EnvironmentSpec& spec);
std::vector<RoundData> gaussian_drift_env(const EnvironmentSpec& spec);
std::vector<RoundData> stationary_env(const EnvironmentSpec& spec);
std::vector<RoundData> volatility_regime_env(const EnvironmentSpec& spec);
std::vector<RoundData> adversarial_a_env(const EnvironmentSpec& spec);
std::vector<RoundData> adversarial_b_env(const EnvironmentSpec& spec);

// Dispatches on spec.kind and applies outlier injection when requested.
Trace generate(const EnvironmentSpec& spec);

// Replaces k seed-chosen rounds by 1 - loss (linear rounds) and tags them.
std::vector<RoundData> outlier_injection(std::vector<RoundData> rounds, std::size_t k,
                                         std::uint64_t seed);

// Two-expert spec with K = floor(s) switches spread evenly over T rounds.
EnvironmentSpec switch_family_spec(double intensity, std::size_t T, std::size_t stress_window,
                                   std::uint64_t seed);

// Expected loss f_t(x).
double expected_value(const RoundData& round, const SimplexPoint& x);
// Realized loss the learner pays at x this round.
double observed_value(const RoundData& round, const SimplexPoint& x);
// Full-information feedback vector at x.
std::vector<double> feedback_gradient(const RoundData& round, const SimplexPoint& x);
// f_t(x) - f_t(x*_t)
double instant_regret(const RoundData& round, const SimplexPoint& x);

// Vertex on the lowest-index minimizer of `expected_loss`.
SimplexPoint argmin_vertex(std::span<const double> expected_loss);

// Bernoulli KL, KL(Ber(p) || Ber(q)).
double bernoulli_kl(double p, double q);

}  // namespace trustdecay
