// NEON variants for aarch64 (Advanced SIMD is mandatory there, so no runtime
// check is needed beyond the build-time architecture test).

#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "trustdecay/simd/kernels.hpp"

namespace trustdecay::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_neon(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

double max_neon(const double* a, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t vm = vdupq_n_f64(m);
    for (; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vld1q_f64(a + i));
    m = vmaxvq_f64(vm);
  }
  for (; i < n; ++i) m = a[i] > m ? a[i] : m;
  return m;
}

double l1_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

double sqdist_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy_neon(double* out, const double* a, double alpha, const double* b,
               std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vfmaq_f64(vld1q_f64(a + i), va, vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = std::fma(alpha, b[i], a[i]);
}

void scale_neon(double* x, double s, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), s));
  for (; i < n; ++i) x[i] *= s;
}

std::size_t clamp_neon(double* x, double floor, std::size_t n) {
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

const KernelTable& neon_kernels() {
  static const KernelTable table{Backend::neon, dot_neon,   sum_neon,
                                 max_neon,      l1_neon,    sqdist_neon,
                                 axpy_neon,     scale_neon, clamp_neon};
  return table;
}

}  // namespace trustdecay::simd::detail
