#pragma once

// Probability-simplex primitives: the negative-entropy potential, its
// Bregman divergence (KL), total variation, Pinsker's bound, and
// projections onto the simplex.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace trustdecay {

// Weights below this value are raised to it (and the vector renormalized)
// before any logarithm and after every multiplicative update.
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kSimplexSumTolerance = 1e-9;

// A probability vector over d >= 2 coordinates. Used both for beliefs
// over models and for decisions over experts.
class SimplexPoint {
 public:
  // Validates: d >= 2, finite nonnegative entries summing to 1 (+-1e-9).
  explicit SimplexPoint(std::vector<double> weights);

  static SimplexPoint uniform(std::size_t d);
  static SimplexPoint vertex(std::size_t d, std::size_t index);
  // Normalizes a nonnegative vector with positive total mass.
  static SimplexPoint normalized(std::vector<double> unnormalized);

  std::size_t dim() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& vector() const noexcept { return weights_; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  struct Trusted {};
  SimplexPoint(std::vector<double> weights, Trusted) noexcept
      : weights_(std::move(weights)) {}
  friend SimplexPoint renormalize_with_floor(std::vector<double> weights);

  std::vector<double> weights_;
};

// Normalizes `weights` (nonnegative, positive sum), applies the probability
// floor and renormalizes again. The entry point for every multiplicative
// update in the library.
SimplexPoint renormalize_with_floor(std::vector<double> weights);

// A loss, gradient or stress vector together with its declared
// sup-norm bound (G for losses, B for stress).
class DualVector {
 public:
  explicit DualVector(std::vector<double> values,
                      std::optional<double> bound = std::nullopt);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  std::optional<double> bound() const noexcept { return bound_; }
  operator std::span<const double>() const noexcept { return values_; }

 private:
  std::vector<double> values_;
  std::optional<double> bound_;
};

double kl_divergence(const SimplexPoint& p, const SimplexPoint& q);
double neg_entropy(const SimplexPoint& p);
double tv_distance(const SimplexPoint& p, const SimplexPoint& q);
double pinsker_bound(double epsilon);

// Euclidean projection onto the simplex (sort-and-threshold).
SimplexPoint project_simplex_euclidean(std::span<const double> y);

// argmin over the simplex of (x - y)^T H (x - y) for symmetric positive
// definite H. Accelerated projected gradient with step 1 / lambda_max(H),
// stopping when successive iterates differ by < 1e-10 in sup norm.
SimplexPoint project_simplex_mahalanobis(std::span<const double> y,
                                         const Eigen::MatrixXd& H);

// Throws std::invalid_argument unless H is square, symmetric and its
// smallest eigenvalue exceeds `min_eigenvalue`.
void require_positive_definite(const Eigen::MatrixXd& H,
                               double min_eigenvalue = 1e-10);

double dual_norm(std::span<const double> v);  // sup norm

}  // namespace trustdecay
