#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "trustdecay/drift.hpp"
#include "trustdecay/environments.hpp"
#include "trustdecay/rng.hpp"

using namespace trustdecay;
using doctest::Approx;

namespace {

GaussianParams gauss(std::vector<double> mean, std::vector<double> var) {
  GaussianParams g;
  g.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  g.covariance = Eigen::MatrixXd::Zero(g.mean.size(), g.mean.size());
  for (std::size_t i = 0; i < var.size(); ++i) g.covariance(i, i) = var[i];
  return g;
}

EnvironmentSpec two_expert(std::size_t K, std::size_t L, std::size_t T, std::size_t H = 0) {
  EnvironmentSpec e;
  e.kind = EnvironmentKind::two_expert_switch;
  e.T = T;
  e.params = TwoExpertParams{K, L, H, 0.8};
  return e;
}

}  // namespace

TEST_CASE("gaussian KL oracles") {
  CHECK(gaussian_kl(gauss({0.3}, {1}), gauss({0.3}, {1})) == 0.0);
  CHECK(gaussian_kl(gauss({0}, {1}), gauss({1}, {1})) == 0.5);
  CHECK(gaussian_kl(gauss({0, 0}, {1, 4}), gauss({1, 2}, {1, 4})) == Approx(1.0).epsilon(1e-14));
  CHECK_THROWS(gaussian_kl(gauss({0}, {1}), gauss({0}, {4})));
  CHECK(gaussian_kl_general(gauss({0}, {1}), gauss({0}, {4})) ==
        Approx(0.5 * (0.25 - 1 + std::log(4.0))).epsilon(1e-14));
  CHECK_THROWS(gaussian_kl(gauss({0}, {-1}), gauss({0}, {-1})));
}

TEST_CASE("path length and lambda schedule") {
  CHECK(kl_path_length(std::vector<double>{0, 0, 0}) == 0.0);
  CHECK(kl_path_length(std::vector<double>{0.5}) == Approx(0.5));
  CHECK(kl_path_length(DriftSchedule({2, 2, 2})) == Approx(3.0));
  CHECK_THROWS(DriftSchedule({-0.1}));
  CHECK(lambda_schedule(0.0, 3.0) == 0.0);
  CHECK(lambda_schedule(0.25, 2.0) == Approx(1.0));
  CHECK(lambda_schedule(0.7, 0.0) == 0.0);
}

TEST_CASE("plug-in drift estimate") {
  Rng rng(4);
  std::vector<std::vector<double>> a(10000), b(10000), c(10000);
  for (auto& v : a) v = {rng.normal()};
  for (auto& v : b) v = {1 + rng.normal()};
  for (auto& v : c) v = {rng.normal()};
  CHECK(plugin_drift_estimate(a, a) == Approx(0.0).epsilon(1e-14));
  CHECK(std::abs(plugin_drift_estimate(a, b) - 0.5) < 0.05);
  CHECK(plugin_drift_estimate(a, c) <= 0.01);
  CHECK_THROWS(plugin_drift_estimate({{1.0}}, {{1.0}, {2.0}}));
}

TEST_CASE("calibration fit") {
  SUBCASE("stationary environment needs no slack") {
    EnvironmentSpec e;
    e.kind = EnvironmentKind::stationary;
    e.T = 50;
    e.params = StationaryParams{LossModel::linear, {0.2, 0.6}, {}, 0.0, {0.1, -0.1}, false};
    const auto fit = calibration_fit(generate(e).rounds, 10, 0);
    CHECK(fit.a == 0.0);
    CHECK(fit.b == 0.0);
    CHECK(fit.max_violation <= 0.0);
  }
  SUBCASE("two-expert switches with oracle stress are feasible") {
    const auto fit = calibration_fit(generate(two_expert(3, 20, 80, 5)).rounds, 20, 0);
    CHECK(fit.max_violation <= 1e-12);
    CHECK(std::isfinite(fit.a + fit.b));
  }
  SUBCASE("zero stress: b is the worst drift ratio") {
    auto rounds = generate(two_expert(2, 10, 30)).rounds;
    double expected = 0.0;
    for (std::size_t t = 1; t < rounds.size(); ++t) {
      if (rounds[t].epsilon_true <= 0) continue;
      double jump = 0;
      for (std::size_t i = 0; i < 2; ++i) {
        jump = std::max(jump, std::abs(rounds[t].expected_loss[i] - rounds[t - 1].expected_loss[i]));
      }
      expected = std::max(expected, jump / std::sqrt(rounds[t].epsilon_true / 2));
    }
    const auto fit = calibration_fit(rounds, 0, 0);
    CHECK(fit.b == Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("tilt controller") {
  SUBCASE("constant tilt inside a window") {
    TiltController c(TiltSchedule{TiltMode::constant, 0, 4.0, 2}, 2);
    std::vector<double> loss{0, 1};
    CHECK(c.observe(loss, 0, false).lambda == 0.0);
    CHECK(c.observe(loss, 0.3, true).lambda == 4.0);
    CHECK(c.observe(loss, 0, false).lambda == 4.0);
    CHECK(c.observe(loss, 0, false).lambda == 0.0);
  }
  SUBCASE("fixed kappa without a window uses the true drift") {
    TiltController c(TiltSchedule{TiltMode::fixed_kappa, 2.0, 0, 2}, 0);
    std::vector<double> loss{0, 1};
    CHECK(c.observe(loss, 0.25, false).lambda == Approx(1.0));
  }
  SUBCASE("plug-in estimate appears after 2w rounds") {
    TiltController c(TiltSchedule{TiltMode::plugin, 1.0, 0, 3}, 0);
    std::vector<double> loss{0.2, 0.4};
    for (int i = 0; i < 5; ++i) CHECK(c.observe(loss, 0, false).epsilon_hat == 0.0);
    CHECK(std::isfinite(c.observe(loss, 0, false).epsilon_hat));
  }
}

TEST_CASE("two-expert environment") {
  SUBCASE("no switches") {
    const auto tr = generate(two_expert(0, 10, 10));
    for (const auto& r : tr.rounds) {
      CHECK(r.loss.values()[0] == 0.0);
      CHECK(r.loss.values()[1] == 1.0);
      CHECK(r.stress.values()[0] == 0.0);
      CHECK(r.epsilon_true == 0.0);
    }
  }
  SUBCASE("K=1, L=5, T=10") {
    const auto tr = generate(two_expert(1, 5, 10));
    for (const auto& r : tr.rounds) {
      CHECK(r.switch_flag == (r.t == 6));
      CHECK(r.loss.values()[0] == (r.t <= 5 ? 0.0 : 1.0));
      CHECK(r.comparator[r.t <= 5 ? 0 : 1] == 1.0);
    }
    CHECK(tr.rounds[5].epsilon_true == Approx(bernoulli_kl(0.1, 0.9)));
  }
  SUBCASE("switch count and validation") {
    const auto tr = generate(two_expert(10, 200, 2200, 5));
    int flags = 0;
    for (const auto& r : tr.rounds) flags += r.switch_flag;
    CHECK(flags == 10);
    CHECK_THROWS(generate(two_expert(10, 200, 2000)));
  }
}

TEST_CASE("gaussian drift environment") {
  EnvironmentSpec e;
  e.kind = EnvironmentKind::gaussian_drift;
  e.T = 20;
  e.seed = 3;
  GaussianDriftParams p;
  p.mu0 = {0.0, 0.1};
  p.sd = {1.0, 1.0};
  SUBCASE("constant mean has no drift") {
    e.params = p;
    for (double eps : generate(e).epsilons()) CHECK(eps == 0.0);
  }
  SUBCASE("unit steps give epsilon 0.5") {
    p.schedule = MeanSchedule::linear;
    p.step = {1.0, 0.0};
    e.params = p;
    const auto tr = generate(e);
    for (double eps : tr.epsilons()) CHECK(eps == Approx(0.5).epsilon(1e-14));
    CHECK(kl_path_length(tr.epsilons()) == Approx(0.5 * 19));
  }
  SUBCASE("seed determinism") {
    e.params = p;
    const auto a = generate(e), b = generate(e);
    for (std::size_t t = 0; t < a.rounds.size(); ++t) {
      CHECK(std::vector<double>(a.rounds[t].loss.values().begin(), a.rounds[t].loss.values().end()) ==
            std::vector<double>(b.rounds[t].loss.values().begin(), b.rounds[t].loss.values().end()));
    }
  }
}

TEST_CASE("stationary quadratic environment") {
  EnvironmentSpec e;
  e.kind = EnvironmentKind::stationary;
  e.T = 5;
  e.params = StationaryParams{LossModel::quadratic, {}, {0.5, 0.5}, 0.0, {1, -1}, true};
  const auto tr = generate(e);
  const auto& r = tr.rounds.front();
  const auto g0 = feedback_gradient(r, SimplexPoint({0.5, 0.5}));
  CHECK(g0[0] == 0.0);
  const auto g1 = feedback_gradient(r, SimplexPoint::vertex(2, 0));
  CHECK(g1[0] == Approx(1.0));
  CHECK(g1[1] == Approx(-1.0));
  CHECK(instant_regret(r, SimplexPoint({0.5, 0.5})) == Approx(0.0));
}

TEST_CASE("volatility regimes") {
  EnvironmentSpec e;
  e.kind = EnvironmentKind::volatility_regime;
  e.T = 400;
  e.seed = 1;
  VolatilityParams p;
  p.mu_low = {0, 0};
  p.sd_low = {1, 1};
  p.mu_high = {0, 0};
  p.sd_high = {2, 2};
  p.regime_length = 100;
  p.stress_bound = 0.7;
  SUBCASE("boundary drift and stress bound") {
    e.params = p;
    const auto tr = generate(e);
    for (const auto& r : tr.rounds) {
      CHECK(dual_norm(r.stress.values()) <= 0.7 + 1e-15);
      // two coordinates, each N(0,4) -> N(0,1): KL(D_t || D_{t-1}) = 1/2 (1/4 - 1 + ln 4)
      if (r.t == 201) CHECK(r.epsilon_true == Approx(2 * 0.5 * (0.25 - 1 + std::log(4.0))).epsilon(1e-12));
      if (r.t != 101 && r.t != 201 && r.t != 301) CHECK(r.epsilon_true == 0.0);
    }
  }
  SUBCASE("identical regimes") {
    p.sd_high = p.sd_low;
    e.params = p;
    for (double eps : generate(e).epsilons()) CHECK(eps == 0.0);
  }
}

TEST_CASE("outlier injection") {
  auto rounds = generate(two_expert(2, 30, 100)).rounds;
  CHECK(outlier_injection(rounds, 0, 1).size() == rounds.size());
  int tagged = 0;
  const auto some = outlier_injection(rounds, 17, 1);
  for (std::size_t t = 0; t < some.size(); ++t) {
    tagged += some[t].injected;
    if (some[t].injected) CHECK(some[t].loss.values()[0] == 1.0 - rounds[t].loss.values()[0]);
  }
  CHECK(tagged == 17);
  int all = 0;
  for (const auto& r : outlier_injection(rounds, 100, 1)) all += r.injected;
  CHECK(all == 100);
  CHECK_THROWS(outlier_injection(rounds, 101, 1));
}

TEST_CASE("adversarial witnesses") {
  EnvironmentSpec e;
  e.kind = EnvironmentKind::adversarial_a;
  e.T = 100;
  e.params = AdversarialParams{};
  CHECK(kl_path_length(generate(e).epsilons()) > 10.0);
  e.kind = EnvironmentKind::adversarial_b;
  CHECK(kl_path_length(generate(e).epsilons()) == 0.0);
}

TEST_CASE("environment names round-trip") {
  for (auto k : {EnvironmentKind::two_expert_switch, EnvironmentKind::gaussian_drift,
                 EnvironmentKind::stationary, EnvironmentKind::volatility_regime,
                 EnvironmentKind::adversarial_a, EnvironmentKind::adversarial_b}) {
    CHECK(parse_environment_kind(to_string(k)) == k);
  }
  CHECK(to_string(EnvironmentKind::adversarial_a) == "adversarial_A");
}
