#pragma once

// Data-parallel inner loops shared by the learners and metrics.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into separate
// translation units and selected once at startup from the CPU feature set.
// Reductions in the vector variants use a different summation order than
// the scalar reference, so results agree to a few ulps, not bit-for-bit.
//
// Set TRUST_DECAY_SIMD=scalar|avx2|neon|auto to override the selection
// (useful for producing golden files that must match across machines).

#include <cstddef>
#include <span>
#include <string_view>

namespace trustdecay::simd {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*max)(const double* a, std::size_t n);
  double (*l1_distance)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // out[i] = a[i] + alpha * b[i]; out may alias a.
  void (*axpy)(double* out, const double* a, double alpha, const double* b,
               std::size_t n);
  void (*scale)(double* x, double s, std::size_t n);
  // x[i] = max(x[i], floor); returns the number of entries that were raised.
  std::size_t (*clamp_min)(double* x, double floor, std::size_t n);
};

namespace detail {
const KernelTable& scalar_kernels();
#if defined(TRUSTDECAY_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(TRUSTDECAY_HAVE_NEON)
const KernelTable& neon_kernels();
#endif
}  // namespace detail

bool backend_available(Backend b);
const KernelTable& kernels_for(Backend b);

const KernelTable& active();
Backend active_backend();
void set_backend(Backend b);
std::string_view backend_name(Backend b);

// RAII override of the active backend, mainly for tests.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend b) : previous_(active_backend()) {
    set_backend(b);
  }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) {
  return active().sum(a.data(), a.size());
}
inline double max(std::span<const double> a) {
  return active().max(a.data(), a.size());
}
inline double l1_distance(std::span<const double> a,
                          std::span<const double> b) {
  return active().l1_distance(a.data(), b.data(), a.size());
}
inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline void axpy(std::span<double> out, std::span<const double> a,
                 double alpha, std::span<const double> b) {
  active().axpy(out.data(), a.data(), alpha, b.data(), out.size());
}
inline void scale(std::span<double> x, double s) {
  active().scale(x.data(), s, x.size());
}
inline std::size_t clamp_min(std::span<double> x, double floor) {
  return active().clamp_min(x.data(), floor, x.size());
}

}  // namespace trustdecay::simd
