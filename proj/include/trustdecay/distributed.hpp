#pragma once

// Gossip-averaged TD-MD over a network of agents. Each round every agent
// takes a local step, then all agents replace their logits with the
// W-weighted average of their neighbours' logits (synchronous rounds).

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trustdecay/environments.hpp"
#include "trustdecay/learners.hpp"
#include "trustdecay/metrics.hpp"

namespace trustdecay {

enum class Topology { ring, complete, random_regular };

std::string_view to_string(Topology topology);
Topology parse_topology(std::string_view name);

struct TopologySpec {
  Topology kind = Topology::ring;
  std::size_t n = 2;
  std::size_t degree = 2;  // random_regular only
  std::uint64_t seed = 0;  // random_regular only
};

struct MixingMatrix {
  Eigen::MatrixXd weights;
  std::string topology_name;
  double second_eigenvalue = 0.0;  // largest |lambda| below the top one
  double spectral_gap = 0.0;       // 1 - second_eigenvalue

  // Checks square, nonnegative, symmetric rows/columns summing to 1.
  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }

  // Wraps an arbitrary doubly stochastic matrix (n = 1 allowed).
  static MixingMatrix from_weights(Eigen::MatrixXd weights, std::string name);
};

// Metropolis weights on the chosen graph.
MixingMatrix build_mixing_matrix(const TopologySpec& spec);

struct AgentState {
  std::vector<double> logits;
  LearnerState learner;
};

// Softmax with max subtraction.
SimplexPoint softmax(std::span<const double> logits);

// Max pairwise L1 distance between the agents' softmax points.
double consensus_error(const std::vector<AgentState>& states);

// logits_i <- sum_j W_ij logits_j for every agent; agents whose row of W is
// the unit vector keep their local point untouched.
void gossip_mix(std::vector<AgentState>& states, const MixingMatrix& W);

struct GossipResult {
  std::vector<RunRecord> agents;
  std::vector<double> consensus;    // after mixing, per round
  std::vector<double> mean_regret;  // cumulative, averaged over agents, per round
  double mean_agent_regret = 0.0;
  double total_regret = 0.0;
};

// `shards[i]` is agent i's environment (same comparators, own noise).
// `initial_logits`, when given, holds one logit vector per agent.
GossipResult gossip_tdmd_run(const std::vector<Trace>& shards, const MixingMatrix& W,
                             const LearnerConfig& config,
                             const std::optional<std::vector<std::vector<double>>>& initial_logits =
                                 std::nullopt);

}  // namespace trustdecay
