#include "trustdecay/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trustdecay {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t split_seed(std::uint64_t parent, std::string_view component,
                         std::uint64_t index) noexcept {
  std::string key = std::to_string(parent);
  key += ':';
  key += component;
  key += ':';
  key += std::to_string(index);
  return fnv1a64(key);
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
}

std::size_t Rng::categorical(std::span<const double> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("Rng::categorical: empty");
  double total = 0.0;
  for (double p : probabilities) total += p;
  const double u = uniform01() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    last_positive = i;
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  return last_positive;
}

}  // namespace trustdecay
