#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "trustdecay/simd/kernels.hpp"

namespace trustdecay::simd {
namespace {

bool cpu_has_avx2() {
#if defined(TRUSTDECAY_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_best() {
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

Backend initial_backend() {
  const char* env = std::getenv("TRUST_DECAY_SIMD");
  if (env == nullptr) return detect_best();
  const std::string want(env);
  if (want == "scalar") return Backend::scalar;
  if (want == "avx2" && backend_available(Backend::avx2)) return Backend::avx2;
  if (want == "neon" && backend_available(Backend::neon)) return Backend::neon;
  return detect_best();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(initial_backend())};
  return table;
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
    case Backend::neon:
#if defined(TRUSTDECAY_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("SIMD backend not available on this CPU: " +
                                std::string(backend_name(b)));
  }
  switch (b) {
#if defined(TRUSTDECAY_HAVE_AVX2)
    case Backend::avx2:
      return detail::avx2_kernels();
#endif
#if defined(TRUSTDECAY_HAVE_NEON)
    case Backend::neon:
      return detail::neon_kernels();
#endif
    default:
      return detail::scalar_kernels();
  }
}

const KernelTable& active() {
  return *active_table().load(std::memory_order_acquire);
}

Backend active_backend() { return active().backend; }

void set_backend(Backend b) {
  active_table().store(&kernels_for(b), std::memory_order_release);
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace trustdecay::simd
