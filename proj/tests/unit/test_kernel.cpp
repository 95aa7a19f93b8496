#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tvarch/kernel.hpp"

using namespace tvarch;

TEST_CASE("kernel moments match closed forms to quadrature accuracy") {
  const KernelMoments rect = kernel_moments(KernelFamily::Rectangular);
  REQUIRE_THAT(rect.w1, Catch::Matchers::WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(rect.xw, Catch::Matchers::WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(rect.w2, Catch::Matchers::WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(rect.w2nd, Catch::Matchers::WithinAbs(1.0 / 12.0, 1e-10));

  const KernelMoments epan = kernel_moments(KernelFamily::Epanechnikov);
  REQUIRE_THAT(epan.w1, Catch::Matchers::WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(epan.xw, Catch::Matchers::WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(epan.w2, Catch::Matchers::WithinAbs(1.2, 1e-10));
  REQUIRE_THAT(epan.w2nd, Catch::Matchers::WithinAbs(0.05, 1e-10));

  const KernelMoments tri = kernel_moments(KernelFamily::Triangular);
  REQUIRE_THAT(tri.w1, Catch::Matchers::WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(tri.xw, Catch::Matchers::WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(tri.w2, Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-10));
  REQUIRE_THAT(tri.w2nd, Catch::Matchers::WithinAbs(1.0 / 24.0, 1e-10));
}

TEST_CASE("rectangular interior weights are uniform and nearly normalized") {
  const KernelSpec k(KernelFamily::Rectangular, 0.1);  // bN = 100 at N = 1000
  const KernelWeights w = kernel_weights(k, 500, 1000, 1);
  REQUIRE(w.w.size() == 101);
  for (double v : w.w) REQUIRE_THAT(v, Catch::Matchers::WithinRel(0.01, 1e-12));
  REQUIRE(std::abs(w.sum - 1.0) <= 0.01 + 1e-12);
  REQUIRE_FALSE(w.renormalized);
}

TEST_CASE("first discrete moment vanishes at interior anchors") {
  const long N = 1000;
  for (KernelFamily f : {KernelFamily::Rectangular, KernelFamily::Epanechnikov,
                         KernelFamily::Triangular}) {
    const KernelSpec k(f, 0.1);
    const KernelWeights w = kernel_weights(k, 500, N, 1);
    double m1 = 0.0;
    for (long kk = w.k_first; kk <= w.k_last(); ++kk)
      m1 += w.at(kk) * (static_cast<double>(kk) / N - 500.0 / N);
    REQUIRE(std::abs(m1) <= 2.0 / N);
  }
}

TEST_CASE("strict mode rejects clipped support") {
  const KernelSpec k(KernelFamily::Rectangular, 0.5);  // bN = 1000 at N = 2000
  REQUIRE_THROWS_AS(kernel_weights(k, 10, 2000, 1), BoundaryViolation);
}

TEST_CASE("renormalize mode flags and normalizes clipped support") {
  const KernelSpec k(KernelFamily::Rectangular, 0.5);
  const KernelWeights w =
      kernel_weights(k, 10, 2000, 1, BoundaryPolicy::Renormalize);
  REQUIRE(w.renormalized);
  double s = 0.0;
  for (double v : w.w) s += v;
  REQUIRE_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("weight sum error halves when bN doubles (rectangular)") {
  // |sum - 1| = O(1/(bN)); the rectangular family realizes the exact rate.
  const long N = 10000;
  const KernelSpec k1(KernelFamily::Rectangular, 0.01);   // bN = 100
  const KernelSpec k2(KernelFamily::Rectangular, 0.02);   // bN = 200
  const double e1 = std::abs(kernel_weights(k1, 5000, N, 0).sum - 1.0);
  const double e2 = std::abs(kernel_weights(k2, 5000, N, 0).sum - 1.0);
  REQUIRE(e2 > 0.0);
  const double ratio = e1 / e2;
  REQUIRE(ratio >= 1.5);
  REQUIRE(ratio <= 2.5);
}

TEST_CASE("weight sum error is O(1/bN) for every family") {
  const long N = 10000;
  for (KernelFamily f : {KernelFamily::Rectangular, KernelFamily::Epanechnikov,
                         KernelFamily::Triangular}) {
    for (double b : {0.01, 0.02, 0.05}) {
      const KernelSpec k(f, b);
      const double err = std::abs(kernel_weights(k, 5000, N, 0).sum - 1.0);
      REQUIRE(err <= 4.0 / (b * N));
    }
  }
}

TEST_CASE("weights are translation covariant") {
  const KernelSpec k(KernelFamily::Epanechnikov, 0.05);
  const KernelWeights a = kernel_weights(k, 400, 2000, 1);
  const KernelWeights b = kernel_weights(k, 700, 2000, 1);
  REQUIRE(b.k_first - a.k_first == 300);
  REQUIRE(a.w.size() == b.w.size());
  for (std::size_t i = 0; i < a.w.size(); ++i) REQUIRE(a.w[i] == b.w[i]);
}

TEST_CASE("bandwidth domain is validated") {
  REQUIRE_THROWS_AS(KernelSpec(KernelFamily::Rectangular, 0.0), ConfigError);
  REQUIRE_THROWS_AS(KernelSpec(KernelFamily::Rectangular, 1.0), ConfigError);
}
