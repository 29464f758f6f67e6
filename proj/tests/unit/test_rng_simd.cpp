#include <doctest.h>

#include <cmath>
#include <vector>

#include "trustdecay/rng.hpp"
#include "trustdecay/simd/kernels.hpp"

using namespace trustdecay;
namespace simd = trustdecay::simd;

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("split_seed hashes the documented key") {
  CHECK(split_seed(42, "learner", 3) == fnv1a64("42:learner:3"));
  CHECK(split_seed(42, "learner", 3) != split_seed(42, "learner", 4));
}

TEST_CASE("rng streams are reproducible and uniform01 is in range") {
  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform01();
    CHECK(u == b.uniform01());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(1);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("categorical frequencies") {
  Rng rng(2);
  std::vector<double> p{0.2, 0.5, 0.3};
  std::vector<int> hits(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hits[rng.categorical(p)];
  for (int j = 0; j < 3; ++j) {
    const double sd = std::sqrt(p[j] * (1 - p[j]) / n);
    CHECK(std::abs(hits[j] / double(n) - p[j]) < 4 * sd);
  }
}

namespace {

std::vector<double> random_data(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * rng.uniform01() - 1.0;
  return v;
}

void check_equivalent(simd::Backend backend) {
  const auto& ref = simd::kernels_for(simd::Backend::scalar);
  const auto& vec = simd::kernels_for(backend);
  Rng rng(77);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 31u, 100u, 1001u}) {
    const auto a = random_data(rng, n);
    const auto b = random_data(rng, n);
    const double tol = 1e-13 * (1.0 + static_cast<double>(n));
    CHECK(vec.dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(tol));
    CHECK(std::abs(vec.sum(a.data(), n) - ref.sum(a.data(), n)) <= tol);
    CHECK(std::abs(vec.l1_distance(a.data(), b.data(), n) - ref.l1_distance(a.data(), b.data(), n)) <= tol);
    CHECK(std::abs(vec.squared_distance(a.data(), b.data(), n) -
                   ref.squared_distance(a.data(), b.data(), n)) <= tol);
    if (n > 0) CHECK(vec.max(a.data(), n) == ref.max(a.data(), n));

    std::vector<double> o1(n), o2(n);
    ref.axpy(o1.data(), a.data(), 0.37, b.data(), n);
    vec.axpy(o2.data(), a.data(), 0.37, b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(o1[i] - o2[i]) <= 1e-15);

    auto s1 = a, s2 = a;
    ref.scale(s1.data(), -1.5, n);
    vec.scale(s2.data(), -1.5, n);
    CHECK(s1 == s2);

    auto c1 = a, c2 = a;
    CHECK(ref.clamp_min(c1.data(), 0.1, n) == vec.clamp_min(c2.data(), 0.1, n));
    CHECK(c1 == c2);
  }
}

}  // namespace

TEST_CASE("vector kernels agree with the scalar reference") {
  for (auto b : {simd::Backend::avx2, simd::Backend::neon}) {
    if (!simd::backend_available(b)) continue;
    CAPTURE(simd::backend_name(b));
    check_equivalent(b);
  }
}

TEST_CASE("scoped backend override restores the previous backend") {
  const auto before = simd::active_backend();
  {
    simd::ScopedBackend guard(simd::Backend::scalar);
    CHECK(simd::active_backend() == simd::Backend::scalar);
  }
  CHECK(simd::active_backend() == before);
}
