#include "trustdecay/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "trustdecay/drift.hpp"
#include "trustdecay/error.hpp"
#include "trustdecay/harness/parallel.hpp"
#include "trustdecay/rng.hpp"
#include "trustdecay/simd/kernels.hpp"
#include "trustdecay/simulation.hpp"

namespace trustdecay {
namespace {

using Graph = std::vector<std::set<std::size_t>>;

bool connected(const Graph& g) {
  std::vector<bool> seen(g.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t u : g[v]) {
      if (!seen[u]) {
        seen[u] = true;
        stack.push_back(u);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

// Pairing model; returns nullopt on self-loops or repeated edges.
std::optional<Graph> try_random_regular(std::size_t n, std::size_t degree, Rng& rng) {
  std::vector<std::size_t> stubs;
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t k = 0; k < degree; ++k) stubs.push_back(v);
  }
  for (std::size_t i = stubs.size(); i > 1; --i) std::swap(stubs[i - 1], stubs[rng.index(i)]);
  Graph g(n);
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    const std::size_t a = stubs[i], b = stubs[i + 1];
    if (a == b || g[a].count(b)) return std::nullopt;
    g[a].insert(b);
    g[b].insert(a);
  }
  return g;
}

Eigen::MatrixXd metropolis(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j : g[i]) {
      W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          1.0 / (1.0 + static_cast<double>(std::max(g[i].size(), g[j].size())));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) W(i, i) = 1.0 - W.row(i).sum();
  return W;
}

bool unit_row(const Eigen::MatrixXd& W, Eigen::Index i) { return W(i, i) == 1.0; }

}  // namespace

std::string_view to_string(Topology topology) {
  switch (topology) {
    case Topology::ring: return "ring";
    case Topology::complete: return "complete";
    case Topology::random_regular: return "random_regular";
  }
  return "unknown";
}

Topology parse_topology(std::string_view name) {
  for (auto t : {Topology::ring, Topology::complete, Topology::random_regular}) {
    if (to_string(t) == name) return t;
  }
  throw std::invalid_argument("unknown topology '" + std::string(name) + "'");
}

void MixingMatrix::validate() const {
  if (weights.rows() == 0 || weights.rows() != weights.cols()) {
    throw std::invalid_argument("mixing matrix must be square and nonempty");
  }
  if (!weights.allFinite() || weights.minCoeff() < 0.0) {
    throw std::invalid_argument("mixing matrix entries must be finite and >= 0");
  }
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    if (std::fabs(weights.row(i).sum() - 1.0) > 1e-10 ||
        std::fabs(weights.col(i).sum() - 1.0) > 1e-10) {
      throw std::invalid_argument("mixing matrix must be doubly stochastic");
    }
  }
}

MixingMatrix MixingMatrix::from_weights(Eigen::MatrixXd w, std::string name) {
  MixingMatrix m{std::move(w), std::move(name), 0.0, 1.0};
  m.validate();
  if (m.weights.rows() > 1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (m.weights + m.weights.transpose()), Eigen::EigenvaluesOnly);
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
      mags.push_back(std::fabs(eig.eigenvalues()[i]));
    }
    std::sort(mags.begin(), mags.end(), std::greater<>());
    m.second_eigenvalue = mags[1];
    m.spectral_gap = 1.0 - mags[1];
  }
  return m;
}

MixingMatrix build_mixing_matrix(const TopologySpec& spec) {
  const std::size_t n = spec.n;
  if (n < 2) throw std::invalid_argument("topology needs n >= 2");
  Graph g(n);
  std::string name;
  switch (spec.kind) {
    case Topology::ring:
      for (std::size_t i = 0; i < n; ++i) {
        g[i].insert((i + 1) % n);
        g[(i + 1) % n].insert(i);
      }
      name = "ring(" + std::to_string(n) + ")";
      break;
    case Topology::complete:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) g[i].insert(j);
        }
      }
      name = "complete(" + std::to_string(n) + ")";
      break;
    case Topology::random_regular: {
      if (spec.degree < 1 || spec.degree >= n) {
        throw std::invalid_argument("random_regular: degree must satisfy 1 <= degree < n");
      }
      if ((n * spec.degree) % 2 != 0) {
        throw std::invalid_argument("random_regular: n * degree must be even");
      }
      bool found = false;
      for (std::size_t attempt = 0; attempt < 100 && !found; ++attempt) {
        // Each attempt allows a bounded number of pairing retries.
        Rng rng(split_seed(spec.seed, "random_regular", attempt));
        for (int retry = 0; retry < 1000; ++retry) {
          auto candidate = try_random_regular(n, spec.degree, rng);
          if (!candidate) continue;
          if (connected(*candidate)) {
            g = std::move(*candidate);
            found = true;
          }
          break;
        }
      }
      if (!found) throw std::runtime_error("random_regular: no connected draw after 100 attempts");
      name = "random_regular(" + std::to_string(n) + "," + std::to_string(spec.degree) + ")";
      break;
    }
  }
  return MixingMatrix::from_weights(metropolis(g), name);
}

SimplexPoint softmax(std::span<const double> logits) {
  const double top = simd::max(logits);
  if (!std::isfinite(top)) throw NumericalError("softmax: non-finite logits");
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logits[i] - top);
  return SimplexPoint::normalized(std::move(w));
}

double consensus_error(const std::vector<AgentState>& states) {
  if (states.empty()) throw std::invalid_argument("consensus_error: no agents");
  std::vector<SimplexPoint> points;
  for (const auto& s : states) {
    if (s.logits.size() != states.front().logits.size()) {
      throw std::invalid_argument("consensus_error: dimension mismatch");
    }
    points.push_back(softmax(s.logits));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      worst = std::max(worst, simd::l1_distance(points[i].weights(), points[j].weights()));
    }
  }
  return worst;
}

void gossip_mix(std::vector<AgentState>& states, const MixingMatrix& W) {
  if (W.size() != states.size()) throw std::invalid_argument("gossip: W size != number of agents");
  const std::size_t d = states.front().logits.size();
  std::vector<std::vector<double>> mixed(states.size(), std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < states.size(); ++j) {
      const double w = W.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0) simd::axpy(mixed[i], mixed[i], w, states[j].logits);
    }
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (unit_row(W.weights, static_cast<Eigen::Index>(i))) continue;
    states[i].logits = std::move(mixed[i]);
    const SimplexPoint p = softmax(states[i].logits);
    states[i].learner.point = renormalize_with_floor(p.vector());
  }
}

GossipResult gossip_tdmd_run(const std::vector<Trace>& shards, const MixingMatrix& W,
                             const LearnerConfig& config,
                             const std::optional<std::vector<std::vector<double>>>& initial_logits) {
  config.validate();
  W.validate();
  const std::size_t n = shards.size();
  if (n == 0) throw std::invalid_argument("gossip: no agents");
  if (W.size() != n) throw std::invalid_argument("gossip: W size != number of agents");
  const std::size_t d = shards.front().dim();
  const std::size_t T = shards.front().horizon();
  for (const auto& s : shards) {
    if (s.dim() != d || s.horizon() != T) {
      throw std::invalid_argument("gossip: shards must share dimension and horizon");
    }
  }
  const double eta = resolved_eta(config, d, T);

  std::vector<AgentState> agents(n, AgentState{std::vector<double>(d, 0.0), LearnerState::initial(d)});
  if (initial_logits) {
    if (initial_logits->size() != n) throw std::invalid_argument("gossip: one logit vector per agent");
    for (std::size_t i = 0; i < n; ++i) {
      if ((*initial_logits)[i].size() != d) throw std::invalid_argument("gossip: logit dimension");
      agents[i].logits = (*initial_logits)[i];
      agents[i].learner.point = renormalize_with_floor(softmax(agents[i].logits).vector());
    }
  }
  std::vector<TiltController> controllers(n, TiltController(config.tilt, config.stress_window));

  GossipResult result;
  result.agents.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.agents[i].label = "agent_" + std::to_string(i);
    result.agents[i].environment = shards[i].spec;
    result.agents[i].rounds.reserve(T);
  }
  std::vector<double> cumulative(n, 0.0);

  for (std::size_t t = 0; t < T; ++t) {
    parallel_for(n, [&](std::size_t i) {
      const RoundData& round = shards[i].rounds[t];
      AgentState& a = agents[i];
      const auto tilt = controllers[i].observe(round.loss.values(), round.epsilon_true,
                                               round.switch_flag);
      result.agents[i].rounds.push_back(RoundRecord{a.learner.point,
                                                    observed_value(round, a.learner.point),
                                                    instant_regret(round, a.learner.point),
                                                    tilt.lambda, tilt.epsilon_hat});
      const auto g = feedback_gradient(round, a.learner.point);
      const auto stress = round.stress.values();
      a.learner = tdmd_step(a.learner, g, stress, eta, tilt.lambda);
      for (std::size_t k = 0; k < d; ++k) a.logits[k] -= eta * (g[k] + tilt.lambda * stress[k]);
    });
    gossip_mix(agents, W);
    result.consensus.push_back(consensus_error(agents));
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cumulative[i] += result.agents[i].rounds.back().instant_regret;
      mean += cumulative[i];
    }
    result.mean_regret.push_back(mean / static_cast<double>(n));
  }
  for (double c : cumulative) result.total_regret += c;
  result.mean_agent_regret = result.total_regret / static_cast<double>(n);
  return result;
}

}  // namespace trustdecay
