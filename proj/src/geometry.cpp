#include "trustdecay/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "trustdecay/error.hpp"
#include "trustdecay/simd/kernels.hpp"

namespace trustdecay {
namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

// Clip-and-renormalize copy used before taking logarithms.
std::vector<double> clipped(std::span<const double> w) {
  std::vector<double> out(w.begin(), w.end());
  if (simd::clamp_min(out, kProbabilityFloor) > 0) {
    simd::scale(out, 1.0 / simd::sum(out));
  }
  return out;
}

}  // namespace

SimplexPoint::SimplexPoint(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.size() < 2) {
    throw std::invalid_argument("SimplexPoint: dimension must be >= 2");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument(
          "SimplexPoint: weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::fabs(total - 1.0) > kSimplexSumTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "SimplexPoint: weights sum to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

SimplexPoint SimplexPoint::uniform(std::size_t d) {
  if (d < 2) throw std::invalid_argument("SimplexPoint: dimension must be >= 2");
  return SimplexPoint(std::vector<double>(d, 1.0 / static_cast<double>(d)));
}

SimplexPoint SimplexPoint::vertex(std::size_t d, std::size_t index) {
  if (index >= d) throw std::invalid_argument("SimplexPoint: vertex index out of range");
  std::vector<double> w(d, 0.0);
  w[index] = 1.0;
  return SimplexPoint(std::move(w));
}

SimplexPoint SimplexPoint::normalized(std::vector<double> unnormalized) {
  double total = 0.0;
  for (double w : unnormalized) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("SimplexPoint::normalized: bad weight");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("SimplexPoint::normalized: zero total mass");
  }
  for (double& w : unnormalized) w /= total;
  return SimplexPoint(std::move(unnormalized));
}

SimplexPoint renormalize_with_floor(std::vector<double> weights) {
  if (weights.size() < 2) {
    throw std::invalid_argument("SimplexPoint: dimension must be >= 2");
  }
  const double total = simd::sum(weights);
  if (!std::isfinite(total) || !(total > 0.0)) {
    throw NumericalError("multiplicative update produced non-finite or zero mass");
  }
  simd::scale(weights, 1.0 / total);
  if (simd::clamp_min(weights, kProbabilityFloor) > 0) {
    simd::scale(weights, 1.0 / simd::sum(weights));
  }
  return SimplexPoint(std::move(weights), SimplexPoint::Trusted{});
}

DualVector::DualVector(std::vector<double> values, std::optional<double> bound)
    : values_(std::move(values)), bound_(bound) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("DualVector: non-finite entry");
  }
  if (bound_) {
    if (*bound_ < 0.0) throw std::invalid_argument("DualVector: negative bound");
    if (dual_norm(values_) > *bound_ * (1.0 + 1e-12)) {
      throw std::invalid_argument("DualVector: sup norm exceeds declared bound");
    }
  }
}

double dual_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double kl_divergence(const SimplexPoint& p, const SimplexPoint& q) {
  require_same_dim(p.dim(), q.dim(), "kl_divergence");
  for (std::size_t i = 0; i < p.dim(); ++i) {
    if (q[i] == 0.0 && p[i] > kProbabilityFloor) {
      throw std::invalid_argument("kl_divergence: absolute-continuity violation");
    }
  }
  const auto pc = clipped(p.weights());
  const auto qc = clipped(q.weights());
  double acc = 0.0;
  for (std::size_t i = 0; i < pc.size(); ++i) acc += pc[i] * std::log(pc[i] / qc[i]);
  return std::max(acc, 0.0);
}

double neg_entropy(const SimplexPoint& p) {
  double acc = 0.0;
  for (double w : p.weights()) {
    if (w > 0.0) acc += w * std::log(w);
  }
  return acc;
}

double tv_distance(const SimplexPoint& p, const SimplexPoint& q) {
  require_same_dim(p.dim(), q.dim(), "tv_distance");
  return 0.5 * simd::l1_distance(p.weights(), q.weights());
}

double pinsker_bound(double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("pinsker_bound: epsilon must be >= 0");
  return std::sqrt(epsilon / 2.0);
}

SimplexPoint project_simplex_euclidean(std::span<const double> y) {
  if (y.size() < 2) throw std::invalid_argument("projection: dimension must be >= 2");
  for (double v : y) {
    if (!std::isfinite(v)) throw std::invalid_argument("projection: non-finite input");
  }
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) threshold = candidate;
  }
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::max(y[i] - threshold, 0.0);
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  for (double& v : x) v /= total;
  return SimplexPoint(std::move(x));
}

void require_positive_definite(const Eigen::MatrixXd& H, double min_eigenvalue) {
  if (H.rows() != H.cols() || H.rows() == 0) {
    throw std::invalid_argument("matrix must be square and nonempty");
  }
  if (!H.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= min_eigenvalue) {
    throw std::invalid_argument("matrix is not positive definite");
  }
}

SimplexPoint project_simplex_mahalanobis(std::span<const double> y,
                                         const Eigen::MatrixXd& H) {
  const auto d = static_cast<Eigen::Index>(y.size());
  if (H.rows() != d) throw std::invalid_argument("projection: H dimension mismatch");
  require_positive_definite(H);

  constexpr double kTolerance = 1e-10;
  constexpr int kMaxIterations = 10000;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double step = 1.0 / eig.eigenvalues().maxCoeff();
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), d);

  auto objective = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = x - target;
    return r.dot(H * r);
  };
  auto project = [&](const Eigen::VectorXd& v) {
    const auto p = project_simplex_euclidean(std::span<const double>(v.data(), v.size()));
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(p.weights().data(), d));
  };

  Eigen::VectorXd x = project(target);
  Eigen::VectorXd previous = x;
  double momentum = 1.0;
  double f = objective(x);
  double residual = 0.0;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const Eigen::VectorXd z = x + ((momentum - 1.0) / next_momentum) * (x - previous);
    Eigen::VectorXd next = project(z - step * (H * (z - target)));
    double f_next = objective(next);
    if (f_next > f) {
      // Restart without momentum when the accelerated step overshoots.
      next = project(x - step * (H * (x - target)));
      f_next = objective(next);
      momentum = 1.0;
    } else {
      momentum = next_momentum;
    }
    residual = (next - x).cwiseAbs().maxCoeff();
    previous = x;
    x = next;
    f = f_next;
    if (residual < kTolerance) {
      return SimplexPoint(std::vector<double>(x.data(), x.data() + d));
    }
  }
  std::ostringstream os;
  os << "project_simplex_mahalanobis: no convergence after " << kMaxIterations
     << " iterations (residual " << residual << ")";
  throw NumericalError(os.str());
}

}  // namespace trustdecay
