#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <unordered_set>

#include "tvarch/innovation.hpp"
#include "tvarch/rng.hpp"

using namespace tvarch;

TEST_CASE("counter stream is deterministic and stream-separated") {
  const CounterStream a(42, "z");
  const CounterStream b(42, "z");
  const CounterStream c(42, "other");
  for (long long t : {-100LL, 0LL, 1LL, 999999LL}) {
    REQUIRE(a.bits(t, 0) == b.bits(t, 0));
    REQUIRE(a.bits(t, 0) != c.bits(t, 0));
    REQUIRE(a.bits(t, 0) != a.bits(t, 1));
  }
}

TEST_CASE("uniform draws live in the open unit interval") {
  const CounterStream s(7, "z");
  for (long long t = 0; t < 10000; ++t) {
    const double u = s.uniform(t, 0);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal quantile matches reference values") {
  REQUIRE_THAT(normal_quantile(0.975),
               Catch::Matchers::WithinAbs(1.959963984540054, 1e-12));
  REQUIRE_THAT(normal_quantile(0.5), Catch::Matchers::WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(normal_quantile(0.95),
               Catch::Matchers::WithinAbs(1.6448536269514722, 1e-12));
  // Round trip through the CDF.
  for (double p : {0.001, 0.1, 0.3, 0.77, 0.999})
    REQUIRE_THAT(normal_cdf(normal_quantile(p)),
                 Catch::Matchers::WithinAbs(p, 1e-12));
}

TEST_CASE("gaussian stream has the right first moments") {
  const CounterStream s(11, "z");
  const long n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (long t = 1; t <= n; ++t) {
    const double z = s.gaussian(t, 0);
    sum += z;
    sum2 += z * z;
    sum4 += z * z * z * z;
  }
  REQUIRE_THAT(sum / n, Catch::Matchers::WithinAbs(0.0, 0.01));
  REQUIRE_THAT(sum2 / n, Catch::Matchers::WithinAbs(1.0, 0.02));
  REQUIRE_THAT(sum4 / n, Catch::Matchers::WithinAbs(3.0, 0.1));
}

TEST_CASE("standardized student-t draws have unit variance") {
  const InnovationLaw law = InnovationLaw::student_t(10.0);
  const CounterStream s(19, "z");
  const long n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (long t = 1; t <= n; ++t) {
    const double z = law.draw(s, t);
    sum += z;
    sum2 += z * z;
    sum4 += z * z * z * z;
  }
  REQUIRE_THAT(sum / n, Catch::Matchers::WithinAbs(0.0, 0.02));
  REQUIRE_THAT(sum2 / n, Catch::Matchers::WithinAbs(1.0, 0.03));
  // kurtosis 3 (df - 2) / (df - 4) = 4 at df = 10
  REQUIRE_THAT(sum4 / n, Catch::Matchers::WithinAbs(law.even_moment(2), 0.3));
}

TEST_CASE("two-point law is a fair sign") {
  const InnovationLaw law = InnovationLaw::two_point();
  const CounterStream s(3, "z");
  long pos = 0;
  const long n = 100000;
  for (long t = 1; t <= n; ++t) {
    const double z = law.draw(s, t);
    REQUIRE((z == 1.0 || z == -1.0));
    if (z > 0) ++pos;
  }
  REQUIRE(std::abs(pos - n / 2) < 4 * std::sqrt(0.25 * n));
}

TEST_CASE("innovation moments match the double-factorial oracle") {
  const InnovationLaw g = InnovationLaw::gaussian();
  // (2k-1)!! computed independently
  double dfact = 1.0;
  for (int k = 1; k <= 6; ++k) {
    dfact *= 2 * k - 1;
    REQUIRE_THAT(g.even_moment(k), Catch::Matchers::WithinRel(dfact, 1e-12));
  }
  REQUIRE(g.even_moment(6) == 10395.0);  // E Z^12
  REQUIRE(g.var_z2() == 2.0);
  // |Z| moments via the Gamma formula agree with the even ones.
  REQUIRE_THAT(g.abs_moment(4.0), Catch::Matchers::WithinRel(3.0, 1e-12));

  const InnovationLaw t10 = InnovationLaw::student_t(10.0);
  REQUIRE_THAT(t10.even_moment(1), Catch::Matchers::WithinRel(1.0, 1e-12));
  REQUIRE_THAT(t10.even_moment(2),
               Catch::Matchers::WithinRel(3.0 * 8.0 / 6.0, 1e-12));
  REQUIRE(std::isinf(t10.even_moment(5)));  // E Z^10 diverges at df = 10
  REQUIRE_THAT(t10.abs_moment(4.0),
               Catch::Matchers::WithinRel(t10.even_moment(2), 1e-10));

  REQUIRE(InnovationLaw::two_point().even_moment(6) == 1.0);
  REQUIRE_THROWS_AS(InnovationLaw::student_t(8.0), ConfigError);
}

TEST_CASE("derive_seed is collision-free over a million replications") {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(1 << 21);
  const std::uint64_t base = 123456789;
  for (std::uint64_t r = 0; r < 1000000; ++r)
    REQUIRE(seen.insert(derive_seed(base, r)).second);
}

TEST_CASE("derive_seed separates from the base stream") {
  const CounterStream s(99, "seed-scan");
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t base = s.bits(i, 0);
    REQUIRE(derive_seed(base, 0) != base);
    REQUIRE(derive_seed(base, 0) == derive_seed(base, 0));
  }
}
