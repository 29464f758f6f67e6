#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "trustdecay/environments.hpp"
#include "trustdecay/drift.hpp"
#include "trustdecay/metrics.hpp"
#include "trustdecay/simulation.hpp"

using namespace trustdecay;
using doctest::Approx;

namespace {

Trace two_expert_trace(std::size_t K, std::size_t L, std::size_t T) {
  EnvironmentSpec e;
  e.kind = EnvironmentKind::two_expert_switch;
  e.T = T;
  e.params = TwoExpertParams{K, L, 0, 0.8};
  return generate(e);
}

RunRecord play(const Trace& tr, const std::function<SimplexPoint(const RoundData&)>& policy) {
  RunRecord run;
  run.label = "p";
  run.environment = tr.spec;
  for (const auto& r : tr.rounds) {
    const auto x = policy(r);
    run.rounds.push_back(RoundRecord{x, expected_value(r, x), instant_regret(r, x), 0.0, 0.0});
  }
  return run;
}

FiniteDistribution identity_problem() {
  Eigen::MatrixXd table(2, 2);
  table << 0, 1, 1, 0;  // vertex i is optimal under outcome i
  return FiniteDistribution(SimplexPoint::uniform(2), table);
}

}  // namespace

TEST_CASE("dynamic regret oracles") {
  const auto tr = two_expert_trace(3, 25, 100);
  const auto oracle = play(tr, [](const RoundData& r) { return r.comparator; });
  const auto rep0 = dynamic_regret(oracle, tr, {{0, 100}, 0});
  CHECK(rep0.cumulative_regret == 0.0);
  const auto uniform = play(tr, [](const RoundData&) { return SimplexPoint::uniform(2); });
  const auto rep = dynamic_regret(uniform, tr, {{0, 10, 100}, 0});
  CHECK(rep.cumulative_regret == Approx(50.0));
  CHECK(rep.outlier_regret_k.at(100) == 0.0);
  CHECK(rep.outlier_regret_k.at(0) == Approx(50.0));
  CHECK(rep.per_switch_tails.size() == 3);
  CHECK(rep.comparator_path == Approx(6.0));
  CHECK(rep.S_T == Approx(3 * std::sqrt(bernoulli_kl(0.1, 0.9) / 2)));

  RunRecord short_run = uniform;
  short_run.rounds.pop_back();
  CHECK_THROWS(dynamic_regret(short_run, tr));
}

TEST_CASE("report JSON key order") {
  const auto tr = two_expert_trace(1, 5, 10);
  const auto run = play(tr, [](const RoundData&) { return SimplexPoint::uniform(2); });
  const auto j = dynamic_regret(run, tr, {{2}, 0}).to_json();
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"label", "cumulative_regret", "S_T", "V_T", "comparator_path",
                                         "per_switch_tails", "outlier_regret_k"});
}

TEST_CASE("regret excluding the largest rounds") {
  const std::vector<double> r{0.1, 0.9, -0.2, 0.5};
  CHECK(regret_excluding(r, 0) == Approx(1.3));
  CHECK(regret_excluding(r, 1) == Approx(0.4));
  CHECK(regret_excluding(r, 4) == Approx(-0.2));
  CHECK(regret_excluding(r, 4) <= regret_excluding(r, 2));
}

TEST_CASE("worst-case tilt") {
  const auto D = SimplexPoint::uniform(2);
  const std::vector<double> h{0, 1};
  SUBCASE("zero radius") {
    const auto r = worst_case_tilt(D, h, 0.0);
    CHECK(r.value == Approx(0.5));
    CHECK(r.eta_star == 0.0);
  }
  SUBCASE("saturated ball") {
    const auto r = worst_case_tilt(D, h, std::log(2.0) + 1e-9);
    CHECK(r.value == Approx(1.0));
    CHECK(std::isinf(r.eta_star));
  }
  SUBCASE("grid oracle at 0.05") {
    double best = 0;
    for (int k = 0; k <= 100000; ++k) {
      const double p = k * 1e-5;
      double kl = 0;
      if (p > 0) kl += p * std::log(2 * p);
      if (p < 1) kl += (1 - p) * std::log(2 * (1 - p));
      if (kl <= 0.05) best = std::max(best, p);
    }
    CHECK(std::abs(worst_case_tilt(D, h, 0.05).value - best) < 1e-4);
  }
}

TEST_CASE("fragility") {
  const auto D = identity_problem();
  CHECK(fragility(0, D, 0.0) == Approx(0.0));
  // every point mass is inside a log 2 ball around the uniform law
  CHECK(fragility(0, D, std::log(2.0) + 1e-9) == Approx(1.0));
  SUBCASE("grid oracle at 0.02") {
    double best = 0;
    for (int k = 0; k <= 100000; ++k) {
      const double q = k * 1e-5;  // probability of outcome 0
      double kl = 0;
      if (q > 0) kl += q * std::log(2 * q);
      if (q < 1) kl += (1 - q) * std::log(2 * (1 - q));
      if (kl > 0.02) continue;
      // x = vertex 0 loses 1 under outcome 1; candidate 1 loses 1 under outcome 0
      best = std::max(best, (1 - q) - q);
    }
    CHECK(std::abs(fragility(0, D, 0.02) - best) < 1e-4);
  }
}

TEST_CASE("belief bandwidth") {
  SUBCASE("constant losses never exceed delta") {
    Eigen::MatrixXd table = Eigen::MatrixXd::Constant(2, 3, 0.4);
    FiniteDistribution D(SimplexPoint({0.3, 0.7}), table);
    const auto bw = belief_bandwidth(SimplexPoint::uniform(3), D, 0.1, 1e-6);
    CHECK(bw.unbounded);
    CHECK(bw.to_string() == "inf");
  }
  SUBCASE("delta below the excess risk") {
    Eigen::MatrixXd table(2, 2);
    table << 0, 1, 1, 0;
    FiniteDistribution D(SimplexPoint({0.8, 0.2}), table);
    const auto bw = belief_bandwidth(SimplexPoint::vertex(2, 1), D, 0.1, 1e-6);
    CHECK_FALSE(bw.unbounded);
    CHECK(bw.value == 0.0);
  }
  SUBCASE("finite bandwidth brackets delta") {
    Eigen::MatrixXd table(2, 2);
    table << 0, 1, 1, 0;
    FiniteDistribution D(SimplexPoint({0.8, 0.2}), table);
    const auto x = SimplexPoint::vertex(2, 0);
    const auto bw = belief_bandwidth(x, D, 0.3, 1e-6);
    REQUIRE_FALSE(bw.unbounded);
    CHECK(fragility(x, D, bw.value - 2e-6) <= 0.3);
    CHECK(fragility(x, D, bw.value + 2e-6) >= 0.3 - 1e-8);
  }
}

TEST_CASE("fragility index") {
  const std::size_t T = 256;
  const auto family = switch_drift_family(T, 5, 8.0);
  SUBCASE("oracle player tolerates every probed intensity") {
    RegretFunction oracle = [](const Trace&, std::uint64_t) { return 0.0; };
    const auto r = fragility_index(oracle, 3.0, T, family, 0.5, 2, 0);
    const auto top = generate(family.make(8.0, 0));
    CHECK(r.index == Approx(kl_path_length(top.epsilons())));
  }
  SUBCASE("degenerate family") {
    DriftFamily flat{[T](double, std::uint64_t) {
                       EnvironmentSpec e;
                       e.kind = EnvironmentKind::two_expert_switch;
                       e.T = T;
                       e.params = TwoExpertParams{0, 1, 0, 0.8};
                       return e;
                     },
                     4.0};
    RegretFunction zero = [](const Trace&, std::uint64_t) { return 0.0; };
    CHECK(fragility_index(zero, 3.0, T, flat, 0.5, 2, 0).index == 0.0);
  }
}

TEST_CASE("sensitivity Monte Carlo") {
  SUBCASE("constant loss") {
    const std::vector<double> loss{0.4, 0.4};
    const auto r = sensitivity_mc(loss, SimplexPoint::uniform(2), 0.1, 0.05, 50, 100, 0);
    CHECK(r.coverage == 1.0);
    CHECK(r.mean_deviation == Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("zero radius reports raw deviations") {
    const std::vector<double> loss{0.0, 1.0};
    const auto r = sensitivity_mc(loss, SimplexPoint::uniform(2), 0.0, 0.05, 400, 200, 1);
    CHECK(r.deviations.size() == 200);
    CHECK(r.mean_deviation > 0.0);
    CHECK(r.mean_deviation < 0.1);
  }
}
