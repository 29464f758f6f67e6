#pragma once

// Drives one learner through an environment trace.

#include <cstdint>
#include <string>

#include "trustdecay/environments.hpp"
#include "trustdecay/learners.hpp"
#include "trustdecay/metrics.hpp"

namespace trustdecay {

// Step size after defaults: sqrt(log d / T) for full-information learners,
// sqrt(log d / (d T)) for the bandit, 1 for TD-ONS.
double resolved_eta(const LearnerConfig& config, std::size_t d, std::size_t T);

// Plays `config` on every round of `trace`. Learner-side randomness (bandit
// arm draws) uses split_seed(seed, "arm", t).
RunRecord run_learner(const Trace& trace, const LearnerConfig& config, const std::string& label,
                      std::uint64_t seed = 0);

}  // namespace trustdecay
