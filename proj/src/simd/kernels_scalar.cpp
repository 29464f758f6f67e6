#include "trustdecay/simd/kernels.hpp"

#include <cmath>
#include <limits>

namespace trustdecay::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double max_scalar(const double* a, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = a[i] > m ? a[i] : m;
  return m;
}

double l1_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
  return acc;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy_scalar(double* out, const double* a, double alpha, const double* b,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + alpha * b[i];
}

void scale_scalar(double* x, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

std::size_t clamp_scalar(double* x, double floor, std::size_t n) {
  std::size_t raised = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] < floor) {
      x[i] = floor;
      ++raised;
    }
  }
  return raised;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Backend::scalar, dot_scalar,    sum_scalar,
                                 max_scalar,      l1_scalar,     sqdist_scalar,
                                 axpy_scalar,     scale_scalar,  clamp_scalar};
  return table;
}

}  // namespace trustdecay::simd::detail
