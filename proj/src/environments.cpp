#include "trustdecay/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "trustdecay/drift.hpp"
#include "trustdecay/rng.hpp"
#include "trustdecay/simd/kernels.hpp"

namespace trustdecay {
namespace {

constexpr std::size_t kVolatilityLookback = 10;

template <class P>
const P& params_as(const EnvironmentSpec& spec, const char* who) {
  const P* p = std::get_if<P>(&spec.params);
  if (!p) throw std::invalid_argument(std::string(who) + ": parameter block does not match kind");
  return *p;
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

void require_dim(const std::vector<double>& v, std::size_t d, const char* what) {
  if (v.size() != d) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(d) +
                                " entries, got " + std::to_string(v.size()));
  }
}

void require_positive(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!(x > 1e-10) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": entries must be positive (covariance not PD)");
    }
  }
}

RoundData make_round(std::size_t t, std::vector<double> loss, std::vector<double> stress,
                     double epsilon, bool flag, int regime, std::vector<double> expected) {
  RoundData r;
  r.t = t;
  r.loss = DualVector(std::move(loss));
  r.stress = DualVector(std::move(stress));
  r.epsilon_true = epsilon;
  r.switch_flag = flag;
  r.regime_id = regime;
  r.comparator = argmin_vertex(expected);
  r.expected_loss = std::move(expected);
  return r;
}

// KL between two diagonal Gaussians, KL(N(m1, s1^2) || N(m0, s0^2)).
double diag_gaussian_kl(const std::vector<double>& m1, const std::vector<double>& s1,
                        const std::vector<double>& m0, const std::vector<double>& s0) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m1.size(); ++i) {
    const double v1 = s1[i] * s1[i];
    const double v0 = s0[i] * s0[i];
    const double dm = m1[i] - m0[i];
    acc += v1 / v0 + dm * dm / v0 - 1.0 + std::log(v0 / v1);
  }
  return std::max(0.0, 0.5 * acc);
}

std::vector<double> gaussian_mean_at(const GaussianDriftParams& p, std::size_t t) {
  const std::size_t d = p.mu0.size();
  std::vector<double> mu = p.mu0;
  switch (p.schedule) {
    case MeanSchedule::constant:
      break;
    case MeanSchedule::linear:
      for (std::size_t i = 0; i < d; ++i) mu[i] += static_cast<double>(t - 1) * p.step[i];
      break;
    case MeanSchedule::switching:
    case MeanSchedule::mixed:
      if (((t - 1) / p.period) % 2 == 1) mu = p.mu1;
      if (p.schedule == MeanSchedule::mixed) {
        const double wave = p.amplitude * std::sin(2.0 * std::numbers::pi *
                                                   static_cast<double>(t) /
                                                   static_cast<double>(p.wave_period));
        for (std::size_t i = 0; i < d; ++i) mu[i] += wave * p.wave_direction[i];
      }
      break;
  }
  return mu;
}

GaussianDriftParams normalized_gaussian(GaussianDriftParams p) {
  const std::size_t d = p.mu0.size();
  if (p.wave_direction.empty() && d >= 2) {
    p.wave_direction.assign(d, 0.0);
    p.wave_direction[0] = 1.0;
    p.wave_direction[1] = -1.0;
  }
  return p;
}

}  // namespace

std::string_view to_string(EnvironmentKind kind) {
  switch (kind) {
    case EnvironmentKind::two_expert_switch: return "two_expert_switch";
    case EnvironmentKind::gaussian_drift: return "gaussian_drift";
    case EnvironmentKind::stationary: return "stationary";
    case EnvironmentKind::volatility_regime: return "volatility_regime";
    case EnvironmentKind::adversarial_a: return "adversarial_A";
    case EnvironmentKind::adversarial_b: return "adversarial_B";
  }
  return "unknown";
}

EnvironmentKind parse_environment_kind(std::string_view name) {
  for (auto k : {EnvironmentKind::two_expert_switch, EnvironmentKind::gaussian_drift,
                 EnvironmentKind::stationary, EnvironmentKind::volatility_regime,
                 EnvironmentKind::adversarial_a, EnvironmentKind::adversarial_b}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown environment kind '" + std::string(name) + "'");
}

std::string_view to_string(MeanSchedule schedule) {
  switch (schedule) {
    case MeanSchedule::constant: return "constant";
    case MeanSchedule::linear: return "linear";
    case MeanSchedule::switching: return "switching";
    case MeanSchedule::mixed: return "mixed";
  }
  return "unknown";
}

MeanSchedule parse_mean_schedule(std::string_view name) {
  for (auto s : {MeanSchedule::constant, MeanSchedule::linear, MeanSchedule::switching,
                 MeanSchedule::mixed}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown mean schedule '" + std::string(name) + "'");
}

std::string_view to_string(LossModel model) {
  return model == LossModel::linear ? "linear" : "quadratic";
}

LossModel parse_loss_model(std::string_view name) {
  if (name == "linear") return LossModel::linear;
  if (name == "quadratic") return LossModel::quadratic;
  throw std::invalid_argument("unknown loss model '" + std::string(name) + "'");
}

void EnvironmentSpec::validate() const {
  if (T < 1) throw std::invalid_argument("env.T must be >= 1");
  if (outliers > T) throw std::invalid_argument("env.outliers must be <= T");
  switch (kind) {
    case EnvironmentKind::two_expert_switch: {
      const auto& p = params_as<TwoExpertParams>(*this, "two_expert_switch");
      if (p.segment_length < 1) throw std::invalid_argument("env.L must be >= 1");
      if (p.switches > 0 && 1 + p.switches * p.segment_length > T) {
        throw std::invalid_argument("two_expert_switch: last switch 1 + K*L exceeds T");
      }
      if (!(p.delta > 0.0 && p.delta < 1.0)) {
        throw std::invalid_argument("env.delta must lie in (0, 1)");
      }
      break;
    }
    case EnvironmentKind::gaussian_drift: {
      const auto p = normalized_gaussian(params_as<GaussianDriftParams>(*this, "gaussian_drift"));
      const std::size_t d = p.mu0.size();
      if (d < 2) throw std::invalid_argument("env.mu0 needs at least 2 entries");
      require_dim(p.sd, d, "env.sd");
      require_positive(p.sd, "env.sd");
      if (p.schedule == MeanSchedule::linear) require_dim(p.step, d, "env.step");
      if (p.schedule == MeanSchedule::switching || p.schedule == MeanSchedule::mixed) {
        require_dim(p.mu1, d, "env.mu1");
        if (p.period < 1) throw std::invalid_argument("env.period must be >= 1");
      }
      if (p.schedule == MeanSchedule::mixed) {
        require_dim(p.wave_direction, d, "env.wave_direction");
        if (p.wave_period < 1) throw std::invalid_argument("env.wave_period must be >= 1");
      }
      break;
    }
    case EnvironmentKind::stationary: {
      const auto& p = params_as<StationaryParams>(*this, "stationary");
      std::size_t d = 0;
      if (p.model == LossModel::linear) {
        d = p.means.size();
        if (d < 2) throw std::invalid_argument("env.means needs at least 2 entries");
        for (double m : p.means) {
          if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("env.means must lie in [0, 1]");
        }
      } else {
        d = p.target.size();
        SimplexPoint check(p.target);
        if (!(p.noise_sd >= 0.0)) throw std::invalid_argument("env.noise_sd must be >= 0");
      }
      if (!p.stress.empty()) require_dim(p.stress, d, "env.stress");
      if (p.require_stress && dual_norm(p.stress) == 0.0) {
        throw std::invalid_argument("stationary: stress vector must be nonzero for the over-tilt experiment");
      }
      break;
    }
    case EnvironmentKind::volatility_regime: {
      const auto& p = params_as<VolatilityParams>(*this, "volatility_regime");
      const std::size_t d = p.mu_low.size();
      if (d < 2) throw std::invalid_argument("env.mu_low needs at least 2 entries");
      require_dim(p.sd_low, d, "env.sd_low");
      require_dim(p.mu_high, d, "env.mu_high");
      require_dim(p.sd_high, d, "env.sd_high");
      require_positive(p.sd_low, "env.sd_low");
      require_positive(p.sd_high, "env.sd_high");
      if (p.regime_length < 1) throw std::invalid_argument("env.regime_length must be >= 1");
      if (!(p.stress_bound >= 0.0)) throw std::invalid_argument("env.stress_bound must be >= 0");
      if (!(p.vol_ref > 0.0)) throw std::invalid_argument("env.vol_ref must be > 0");
      break;
    }
    case EnvironmentKind::adversarial_a:
    case EnvironmentKind::adversarial_b:
      params_as<AdversarialParams>(*this, "adversarial");
      break;
  }
}

std::vector<double> Trace::epsilons() const {
  std::vector<double> eps;
  for (std::size_t i = 1; i < rounds.size(); ++i) eps.push_back(rounds[i].epsilon_true);
  return eps;
}

double bernoulli_kl(double p, double q) {
  auto term = [](double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; };
  return std::max(0.0, term(p, q) + term(1.0 - p, 1.0 - q));
}

SimplexPoint argmin_vertex(std::span<const double> expected_loss) {
  const auto it = std::min_element(expected_loss.begin(), expected_loss.end());
  return SimplexPoint::vertex(expected_loss.size(),
                              static_cast<std::size_t>(it - expected_loss.begin()));
}

std::vector<RoundData> two_expert_switch_env(const EnvironmentSpec& spec) {
  spec.validate();
  const auto& p = params_as<TwoExpertParams>(spec, "two_expert_switch");
  const double lo = 0.5 - p.delta / 2.0;
  const double switch_kl = bernoulli_kl(lo, 1.0 - lo);

  std::vector<RoundData> rounds;
  rounds.reserve(spec.T);
  for (std::size_t t = 1; t <= spec.T; ++t) {
    const std::size_t k = std::min((t - 1) / p.segment_length, p.switches);
    const std::size_t tau = 1 + k * p.segment_length;
    const bool odd = k % 2 == 1;
    std::vector<double> loss = odd ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
    std::vector<double> stress{0.0, 0.0};
    if (k >= 1 && t - tau < p.stress_window) {
      stress = odd ? std::vector<double>{1.0, -1.0} : std::vector<double>{-1.0, 1.0};
    }
    const bool flag = k >= 1 && t == tau;
    std::vector<double> expected = loss;
    rounds.push_back(make_round(t, std::move(loss), std::move(stress), flag ? switch_kl : 0.0,
                                flag, static_cast<int>(k), std::move(expected)));
  }
  return rounds;
}

std::vector<RoundData> gaussian_drift_env(const EnvironmentSpec& spec) {
  spec.validate();
  const auto p = normalized_gaussian(params_as<GaussianDriftParams>(spec, "gaussian_drift"));
  const std::size_t d = p.mu0.size();

  std::vector<RoundData> rounds;
  rounds.reserve(spec.T);
  std::vector<double> prev_mu;
  std::vector<double> prev_expected;
  for (std::size_t t = 1; t <= spec.T; ++t) {
    const auto mu = gaussian_mean_at(p, t);
    Rng rng(split_seed(spec.seed, "round", t));
    std::vector<double> loss(d), expected(d), stress(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double z = mu[i] + p.sd[i] * rng.normal();
      loss[i] = clip01(p.loss_bias + p.loss_scale * z);
      expected[i] = clip01(p.loss_bias + p.loss_scale * mu[i]);
    }
    double eps = 0.0;
    if (t > 1) {
      eps = diag_gaussian_kl(mu, p.sd, prev_mu, p.sd);
      if (eps > 0.0) {
        for (std::size_t i = 0; i < d; ++i) {
          const double change = expected[i] - prev_expected[i];
          stress[i] = change > 0.0 ? 1.0 : (change < 0.0 ? -1.0 : 0.0);
        }
      }
    }
    int regime = 0;
    if (p.schedule == MeanSchedule::switching || p.schedule == MeanSchedule::mixed) {
      regime = static_cast<int>((t - 1) / p.period);
    }
    rounds.push_back(make_round(t, std::move(loss), std::move(stress), eps, eps > 0.0, regime,
                                expected));
    prev_mu = mu;
    prev_expected = std::move(expected);
  }
  return rounds;
}

std::vector<RoundData> stationary_env(const EnvironmentSpec& spec) {
  spec.validate();
  const auto& p = params_as<StationaryParams>(spec, "stationary");
  const bool linear = p.model == LossModel::linear;
  const std::size_t d = linear ? p.means.size() : p.target.size();
  const std::vector<double> stress = p.stress.empty() ? std::vector<double>(d, 0.0) : p.stress;

  std::vector<double> expected(d);
  if (linear) {
    expected = p.means;
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      double f = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = (i == j ? 1.0 : 0.0) - p.target[j];
        f += diff * diff;
      }
      expected[i] = f;
    }
  }

  std::vector<RoundData> rounds;
  rounds.reserve(spec.T);
  for (std::size_t t = 1; t <= spec.T; ++t) {
    Rng rng(split_seed(spec.seed, "round", t));
    std::vector<double> loss(d);
    if (linear) {
      for (std::size_t i = 0; i < d; ++i) loss[i] = rng.uniform01() < p.means[i] ? 1.0 : 0.0;
      rounds.push_back(make_round(t, std::move(loss), stress, 0.0, false, 0, expected));
    } else {
      for (std::size_t i = 0; i < d; ++i) loss[i] = p.noise_sd > 0.0 ? p.noise_sd * rng.normal() : 0.0;
      RoundData r = make_round(t, std::move(loss), stress, 0.0, false, 0, expected);
      r.model = LossModel::quadratic;
      r.comparator = SimplexPoint(p.target);
      rounds.push_back(std::move(r));
    }
  }
  return rounds;
}

std::vector<RoundData> volatility_regime_env(const EnvironmentSpec& spec) {
  spec.validate();
  const auto& p = params_as<VolatilityParams>(spec, "volatility_regime");
  const std::size_t d = p.mu_low.size();

  std::vector<RoundData> rounds;
  rounds.reserve(spec.T);
  std::vector<std::vector<double>> recent;
  for (std::size_t t = 1; t <= spec.T; ++t) {
    const std::size_t block = (t - 1) / p.regime_length;
    const bool high = block % 2 == 1;
    const auto& mu = high ? p.mu_high : p.mu_low;
    const auto& sd = high ? p.sd_high : p.sd_low;

    Rng rng(split_seed(spec.seed, "round", t));
    std::vector<double> loss(d), expected(d);
    for (std::size_t i = 0; i < d; ++i) {
      loss[i] = clip01(p.loss_bias + p.loss_scale * (mu[i] + sd[i] * rng.normal()));
      expected[i] = clip01(p.loss_bias + p.loss_scale * mu[i]);
    }
    recent.push_back(loss);
    if (recent.size() > kVolatilityLookback) recent.erase(recent.begin());

    std::vector<double> stress(d, 0.0);
    if (recent.size() >= 2) {
      const double n = static_cast<double>(recent.size());
      for (std::size_t i = 0; i < d; ++i) {
        double mean = 0.0;
        for (const auto& obs : recent) mean += obs[i];
        mean /= n;
        double ss = 0.0;
        for (const auto& obs : recent) ss += (obs[i] - mean) * (obs[i] - mean);
        const double vol = std::sqrt(ss / (n - 1.0));
        stress[i] = p.stress_bound * std::min(1.0, vol / p.vol_ref);
      }
    }

    const bool boundary = t > 1 && (t - 1) % p.regime_length == 0;
    double eps = 0.0;
    if (boundary) {
      eps = high ? diag_gaussian_kl(p.mu_high, p.sd_high, p.mu_low, p.sd_low)
                 : diag_gaussian_kl(p.mu_low, p.sd_low, p.mu_high, p.sd_high);
    }
    rounds.push_back(make_round(t, std::move(loss), std::move(stress), eps, boundary,
                                static_cast<int>(block), std::move(expected)));
  }
  return rounds;
}

std::vector<RoundData> adversarial_a_env(const EnvironmentSpec& spec) {
  spec.validate();
  std::vector<RoundData> rounds;
  rounds.reserve(spec.T);
  for (std::size_t t = 1; t <= spec.T; ++t) {
    const double q = t % 2 == 1 ? 0.1 : 0.9;
    const double q_prev = t % 2 == 1 ? 0.9 : 0.1;
    Rng rng(split_seed(spec.seed, "round", t));
    const double z = rng.uniform01() < q ? 1.0 : 0.0;
    std::vector<double> loss{0.2 + 0.4 * z, 0.6 + 0.4 * z};
    std::vector<double> expected{0.2 + 0.4 * q, 0.6 + 0.4 * q};
    const double eps = t > 1 ? bernoulli_kl(q, q_prev) : 0.0;
    rounds.push_back(make_round(t, std::move(loss), {0.0, 0.0}, eps, t > 1,
                                static_cast<int>((t - 1) % 2), std::move(expected)));
  }
  return rounds;
}

std::vector<RoundData> adversarial_b_env(const EnvironmentSpec& spec) {
  spec.validate();
  std::vector<RoundData> rounds;
  rounds.reserve(spec.T);
  for (std::size_t t = 1; t <= spec.T; ++t) {
    std::vector<double> loss = t % 2 == 1 ? std::vector<double>{0.0, 1.0}
                                          : std::vector<double>{1.0, 0.0};
    std::vector<double> expected = loss;
    rounds.push_back(make_round(t, std::move(loss), {0.0, 0.0}, 0.0, false,
                                static_cast<int>((t - 1) % 2), std::move(expected)));
  }
  return rounds;
}

std::vector<RoundData> outlier_injection(std::vector<RoundData> rounds, std::size_t k,
                                         std::uint64_t seed) {
  if (k > rounds.size()) throw std::invalid_argument("outlier_injection: k exceeds T");
  if (k == 0) return rounds;
  std::vector<std::size_t> order(rounds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(split_seed(seed, "outliers", k));
  // Partial Fisher-Yates: the first k slots are the chosen rounds.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(order.size() - i);
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    RoundData& r = rounds[order[i]];
    if (r.model != LossModel::linear) {
      throw std::invalid_argument("outlier_injection: only linear-loss rounds can be flipped");
    }
    std::vector<double> flipped(r.loss.values().begin(), r.loss.values().end());
    for (double& v : flipped) v = 1.0 - v;
    r.loss = DualVector(std::move(flipped), r.loss.bound());
    for (double& v : r.expected_loss) v = 1.0 - v;
    r.comparator = argmin_vertex(r.expected_loss);
    r.injected = true;
  }
  return rounds;
}

Trace generate(const EnvironmentSpec& spec) {
  spec.validate();
  std::vector<RoundData> rounds;
  switch (spec.kind) {
    case EnvironmentKind::two_expert_switch: rounds = two_expert_switch_env(spec); break;
    case EnvironmentKind::gaussian_drift: rounds = gaussian_drift_env(spec); break;
    case EnvironmentKind::stationary: rounds = stationary_env(spec); break;
    case EnvironmentKind::volatility_regime: rounds = volatility_regime_env(spec); break;
    case EnvironmentKind::adversarial_a: rounds = adversarial_a_env(spec); break;
    case EnvironmentKind::adversarial_b: rounds = adversarial_b_env(spec); break;
  }
  if (spec.outliers > 0) rounds = outlier_injection(std::move(rounds), spec.outliers, spec.seed);
  return Trace{spec, std::move(rounds)};
}

EnvironmentSpec switch_family_spec(double intensity, std::size_t T, std::size_t stress_window,
                                   std::uint64_t seed) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw std::invalid_argument("switch family: intensity must be finite and >= 0");
  }
  if (T < 2) throw std::invalid_argument("switch family: T must be >= 2");
  const auto K = std::min(static_cast<std::size_t>(std::floor(intensity)), T - 1);
  TwoExpertParams p;
  p.switches = K;
  p.segment_length = T / (K + 1);
  p.stress_window = stress_window;
  EnvironmentSpec spec;
  spec.kind = EnvironmentKind::two_expert_switch;
  spec.T = T;
  spec.params = p;
  spec.seed = seed;
  return spec;
}

double expected_value(const RoundData& round, const SimplexPoint& x) {
  if (x.dim() != round.expected_loss.size()) {
    throw std::invalid_argument("expected_value: dimension mismatch");
  }
  if (round.model == LossModel::linear) return simd::dot(x.weights(), round.expected_loss);
  return simd::squared_distance(x.weights(), round.comparator.weights());
}

double observed_value(const RoundData& round, const SimplexPoint& x) {
  if (x.dim() != round.loss.dim()) throw std::invalid_argument("observed_value: dimension mismatch");
  const double linear = simd::dot(x.weights(), round.loss.values());
  if (round.model == LossModel::linear) return linear;
  return simd::squared_distance(x.weights(), round.comparator.weights()) + linear;
}

std::vector<double> feedback_gradient(const RoundData& round, const SimplexPoint& x) {
  const auto loss = round.loss.values();
  std::vector<double> g(loss.begin(), loss.end());
  if (round.model == LossModel::quadratic) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * (x[i] - round.comparator[i]);
  }
  return g;
}

double instant_regret(const RoundData& round, const SimplexPoint& x) {
  return expected_value(round, x) - expected_value(round, round.comparator);
}

}  // namespace trustdecay
