#include <doctest.h>

#include <cmath>
#include <vector>

#include "trustdecay/distributed.hpp"
#include "trustdecay/rng.hpp"
#include "trustdecay/simulation.hpp"

using namespace trustdecay;
using doctest::Approx;

namespace {

EnvironmentSpec noisy_env(std::size_t T, std::uint64_t seed) {
  EnvironmentSpec e;
  e.kind = EnvironmentKind::gaussian_drift;
  e.T = T;
  e.seed = seed;
  GaussianDriftParams p;
  p.mu0 = {-0.4, 0.0, 0.4};
  p.sd = {0.5, 0.5, 0.5};
  e.params = p;
  return e;
}

}  // namespace

TEST_CASE("mixing matrices") {
  const auto complete = build_mixing_matrix({Topology::complete, 5, 2, 0});
  CHECK(complete.spectral_gap == Approx(1.0).epsilon(1e-12));
  const auto ring3 = build_mixing_matrix({Topology::ring, 3, 2, 0});
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(ring3.weights.row(i).sum() == Approx(1.0));
    CHECK(ring3.weights.col(i).sum() == Approx(1.0));
  }
  const auto r8 = build_mixing_matrix({Topology::ring, 8, 2, 0});
  const auto r32 = build_mixing_matrix({Topology::ring, 32, 2, 0});
  CHECK(r8.spectral_gap > r32.spectral_gap);
  const auto rr = build_mixing_matrix({Topology::random_regular, 10, 3, 4});
  CHECK_NOTHROW(rr.validate());
  CHECK_THROWS(build_mixing_matrix({Topology::random_regular, 5, 3, 0}));  // n d odd
}

TEST_CASE("consensus error") {
  auto agent = [](std::vector<double> logits) { return AgentState{std::move(logits), LearnerState::initial(2)}; };
  CHECK(consensus_error({agent({0.1, 0.3}), agent({0.1, 0.3})}) == 0.0);
  CHECK(consensus_error({agent({800, 0}), agent({0, 800})}) == Approx(2.0));
  CHECK(consensus_error({agent({std::log(3.0), 0}), agent({0, 0})}) == Approx(0.5));
}

TEST_CASE("gossip preserves the mean logit vector") {
  Rng rng(2);
  const auto W = build_mixing_matrix({Topology::ring, 7, 2, 0});
  std::vector<AgentState> agents;
  for (int i = 0; i < 7; ++i) {
    agents.push_back({{rng.normal(), rng.normal(), rng.normal()}, LearnerState::initial(3)});
  }
  for (int round = 0; round < 20; ++round) {
    std::vector<double> before(3, 0), after(3, 0);
    for (const auto& a : agents) {
      for (int j = 0; j < 3; ++j) before[j] += a.logits[j] / 7;
    }
    gossip_mix(agents, W);
    for (const auto& a : agents) {
      for (int j = 0; j < 3; ++j) after[j] += a.logits[j] / 7;
      double s = 0;
      for (double w : a.learner.point.weights()) s += w;
      CHECK(s == Approx(1.0).epsilon(1e-12));
    }
    for (int j = 0; j < 3; ++j) CHECK(std::abs(after[j] - before[j]) <= 1e-10);
  }
}

TEST_CASE("single agent reproduces TD-MD bit for bit") {
  const Trace tr = generate(noisy_env(300, 5));
  LearnerConfig c;
  c.kind = LearnerKind::tdmd;
  const auto solo = run_learner(tr, c, "solo");
  const auto W = MixingMatrix::from_weights(Eigen::MatrixXd::Ones(1, 1), "single");
  const auto g = gossip_tdmd_run({tr}, W, c);
  REQUIRE(g.agents.size() == 1);
  for (std::size_t t = 0; t < tr.horizon(); ++t) {
    CHECK(g.agents[0].rounds[t].x == solo.rounds[t].x);
  }
  CHECK(g.total_regret == solo.cumulative_regret());
}

TEST_CASE("identical agents on a complete graph stay identical") {
  const Trace tr = generate(noisy_env(200, 6));
  LearnerConfig c;
  c.kind = LearnerKind::tdmd;
  const auto W = build_mixing_matrix({Topology::complete, 4, 2, 0});
  const auto g = gossip_tdmd_run({tr, tr, tr, tr}, W, c);
  for (double e : g.consensus) CHECK(e == 0.0);
}
