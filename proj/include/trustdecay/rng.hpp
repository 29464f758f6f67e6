#pragma once

// Seeded randomness.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniform and normal variates are derived here rather than via
// <random> distributions, whose algorithms are implementation-defined:
//   uniform01 = (engine() >> 11) * 2^-53
//   normal    = Box-Muller on two uniform01 draws (cosine branch only)
//
// Seed splitting: child = FNV-1a-64 over the UTF-8 bytes of
//   "<parent decimal>:<component name>:<index decimal>"
// Environments draw round t from a fresh engine seeded with
// split_seed(env_seed, "round", t), so any round can be regenerated alone.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace trustdecay {

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t split_seed(std::uint64_t parent, std::string_view component,
                         std::uint64_t index) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double normal();
  // Uniform index in [0, n).
  std::size_t index(std::size_t n);
  // Draw from a discrete distribution by inversion; `probabilities` need
  // not be exactly normalized.
  std::size_t categorical(std::span<const double> probabilities);

 private:
  std::mt19937_64 engine_;
};

}  // namespace trustdecay
