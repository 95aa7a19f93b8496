#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tvarch/likelihood.hpp"
#include "tvarch/rng.hpp"

using namespace tvarch;

namespace {

Regularity reg(double rho, double Q, double nu, double M) {
  return Regularity{rho, Q, nu, M, EllSequence::one()};
}

TvArchSpec cos_arch0() {
  return TvArchSpec({ParameterCurve::sinusoid(2.0, 1.0, 0.0)},
                    InnovationLaw::gaussian(), reg(0.5, 0.5, 0.2, 6.3));
}

}  // namespace

TEST_CASE("cond_variance basics") {
  Vector a0(1);
  a0 << 0.7;
  REQUIRE(cond_variance(a0, {}) == 0.7);

  Vector a(2);
  a << 0.5, 0.4;
  const double lag[] = {2.0};
  REQUIRE(cond_variance(a, lag) == 1.3);
}

TEST_CASE("cond_variance reproduces the defining recursion on a path") {
  const TvArchSpec spec({ParameterCurve::sinusoid(2.0, 1.0, 0.0),
                         ParameterCurve::linear(0.1, 0.3)},
                        InnovationLaw::gaussian(), reg(0.5, 0.5, 0.2, 6.3));
  const long N = 500;
  const SamplePath path = simulate_tvarch(spec, N, 3, StartMode::PaperExact);
  for (long t = 3; t <= N; ++t) {
    const auto av = spec.coefficients(static_cast<double>(t) / N);
    Vector alpha(2);
    alpha << av[0], av[1];
    const double lag[] = {path.x2_at(t - 1)};
    REQUIRE(cond_variance(alpha, lag) == path.sigma2_at(t));
  }
}

TEST_CASE("unit squared residual zeroes the gradient exactly") {
  Vector alpha(2);
  alpha << 0.4, 0.3;
  const double lag[] = {1.7};
  const double w = cond_variance(alpha, lag);
  const auto terms = loglik_point(alpha, w, lag);
  REQUIRE(terms.gradient[0] == 0.0);
  REQUIRE(terms.gradient[1] == 0.0);
}

TEST_CASE("hand-evaluated order-zero likelihood point") {
  Vector alpha(1);
  alpha << 1.0;
  const auto terms = loglik_point(alpha, 2.0, {});
  REQUIRE_THAT(terms.value, Catch::Matchers::WithinRel(1.0, 1e-15));
  REQUIRE_THAT(terms.gradient[0], Catch::Matchers::WithinRel(-0.5, 1e-15));
  REQUIRE_THAT(terms.hessian(0, 0), Catch::Matchers::WithinRel(1.5, 1e-15));
}

TEST_CASE("gradient and hessian match finite differences at random points") {
  const CounterStream s(404, "fd");
  const int p = 2;
  int tested = 0;
  for (int i = 0; tested < 100; ++i) {
    Vector alpha(p + 1);
    alpha[0] = 0.2 + 2.0 * s.uniform(i, 0);
    alpha[1] = 0.05 + 0.5 * s.uniform(i, 1);
    alpha[2] = 0.05 + 0.4 * s.uniform(i, 2);
    const double lag[] = {3.0 * s.uniform(i, 3), 3.0 * s.uniform(i, 4)};
    const double x2 = 4.0 * s.uniform(i, 5);
    const auto terms = loglik_point(alpha, x2, lag);
    ++tested;

    const double h = 2e-6;
    for (int j = 0; j <= p; ++j) {
      Vector ap = alpha, am = alpha;
      ap[j] += h;
      am[j] -= h;
      const double fd =
          (loglik_point(ap, x2, lag).value - loglik_point(am, x2, lag).value) /
          (2.0 * h);
      const double scale = std::max(1.0, std::abs(terms.gradient[j]));
      REQUIRE_THAT(terms.gradient[j],
                   Catch::Matchers::WithinAbs(fd, 1e-6 * scale));
      for (int k = 0; k <= p; ++k) {
        const double fd2 = (loglik_point(ap, x2, lag).gradient[k] -
                            loglik_point(am, x2, lag).gradient[k]) /
                           (2.0 * h);
        const double hscale = std::max(1.0, std::abs(terms.hessian(j, k)));
        REQUIRE_THAT(terms.hessian(j, k),
                     Catch::Matchers::WithinAbs(fd2, 1e-5 * hscale));
      }
    }
  }
}

TEST_CASE("hessian is exactly symmetric") {
  Vector alpha(3);
  alpha << 0.9, 0.21, 0.13;
  const double lag[] = {0.83, 2.91};
  const auto terms = loglik_point(alpha, 1.37, lag);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      REQUIRE(terms.hessian(i, j) == terms.hessian(j, i));
}

TEST_CASE("a degenerate unit weight reduces to one likelihood point") {
  const TvArchSpec spec = cos_arch0();
  const SamplePath path = simulate_tvarch(spec, 100, 6, StartMode::PaperExact);
  LocalData data{.x2 = {},
                 .t_first = 49,
                 .t0 = 50,
                 .N = 100,
                 .p = 1,
                 .kernel = KernelSpec(KernelFamily::Rectangular, 0.5),
                 .weights = {}};
  data.weights.k_first = 50;
  data.weights.w = {1.0};
  data.weights.sum = 1.0;
  data.x2 = {path.x2_at(49), path.x2_at(50)};
  Vector alpha(2);
  alpha << 0.7, 0.2;
  const auto got = weighted_likelihood(data, alpha);
  const double lag[] = {path.x2_at(49)};
  const auto want = loglik_point(alpha, path.x2_at(50), lag);
  REQUIRE_THAT(got.value, Catch::Matchers::WithinRel(want.value, 1e-14));
  REQUIRE_THAT(got.gradient[0],
               Catch::Matchers::WithinRel(want.gradient[0], 1e-14));
  REQUIRE_THAT(got.hessian(1, 1),
               Catch::Matchers::WithinRel(want.hessian(1, 1), 1e-14));
}

TEST_CASE("weighted value is the kernel-weighted sum, any summation order") {
  const TvArchSpec spec = cos_arch0();
  const long N = 4000;
  const SamplePath path =
      simulate_tvarch(spec, N, 12, StartMode::StationaryStart);
  const KernelSpec kernel(KernelFamily::Epanechnikov, 0.2);
  const LocalData data = make_local_data(path, 2000, kernel, 0);
  Vector alpha(1);
  alpha << 1.1;
  const double forward = weighted_value(data, alpha);
  // reversed-order reference sum
  double rev = 0.0;
  for (long k = data.weights.k_last(); k >= data.weights.k_first; --k) {
    const double w = alpha[0];
    rev += data.weights.at(k) * 0.5 * (std::log(w) + data.x2_at(k) / w);
  }
  REQUIRE_THAT(forward, Catch::Matchers::WithinAbs(rev, 1e-12));
}

TEST_CASE("true parameters sit at the weighted-likelihood minimum") {
  const TvArchSpec spec({ParameterCurve::constant(0.8),
                         ParameterCurve::constant(0.25)},
                        InnovationLaw::gaussian(), reg(0.1, 0.5, 0.2, 1.0));
  const long N = 40000;
  const SamplePath path =
      simulate_tvarch(spec, N, 88, StartMode::StationaryStart);
  const KernelSpec kernel(KernelFamily::Rectangular, 0.1);  // bN = 4000
  const LocalData data = make_local_data(path, N / 2, kernel, 1);
  Vector truth(2);
  truth << 0.8, 0.25;
  const double v0 = weighted_value(data, truth);
  for (int j = 0; j < 2; ++j)
    for (double sign : {-1.0, 1.0}) {
      Vector perturbed = truth;
      perturbed[j] += sign * 0.1;
      REQUIRE(v0 <= weighted_value(data, perturbed));
    }
}

TEST_CASE("score at the truth is a mean-zero martingale sum") {
  const TvArchSpec spec({ParameterCurve::constant(0.8),
                         ParameterCurve::constant(0.25)},
                        InnovationLaw::gaussian(), reg(0.1, 0.5, 0.2, 1.0));
  const long N = 4000;
  const KernelSpec kernel(KernelFamily::Rectangular, 0.125);  // bN = 500
  Vector truth(2);
  truth << 0.8, 0.25;
  const int reps = 400;
  Vector acc = Vector::Zero(2), acc2 = Vector::Zero(2);
  for (int r = 0; r < reps; ++r) {
    const SamplePath path = simulate_stationary(spec, 0.5, N, derive_seed(9, r));
    const LocalData data = make_local_data(path, N / 2, kernel, 1);
    const Vector g = weighted_likelihood(data, truth).gradient;
    acc += g;
    acc2 += g.cwiseProduct(g);
  }
  const Vector mean = acc / reps;
  for (int j = 0; j < 2; ++j) {
    const double var = acc2[j] / reps - mean[j] * mean[j];
    const double se = std::sqrt(var / reps);
    REQUIRE(std::abs(mean[j]) <= 3.0 * se);
  }
}

TEST_CASE("per-point ratio and gradient bounds from the polytope") {
  const TvArchSpec spec({ParameterCurve::constant(0.8),
                         ParameterCurve::constant(0.25)},
                        InnovationLaw::gaussian(), reg(0.1, 0.5, 0.2, 1.0));
  const OmegaSpace omega(1, 0.1, 5.0);
  const double kappa = omega.kappa();
  const long N = 2000;
  const SamplePath path =
      simulate_tvarch(spec, N, 1234, StartMode::StationaryStart);
  const CounterStream s(5, "alpha");
  for (int i = 0; i < 20; ++i) {
    Vector alpha(2);
    alpha[0] = omega.rho1 + (omega.rho2 - omega.rho1) * s.uniform(i, 0);
    alpha[1] = omega.rho1 + (1.0 - omega.rho1) * s.uniform(i, 1);
    for (long t = 2; t <= N; ++t) {
      const double lag[] = {path.x2_at(t - 1)};
      const double w = cond_variance(alpha, lag);
      REQUIRE(path.x2_at(t) / w <=
              kappa * path.z_at(t) * path.z_at(t) * (1.0 + 1e-12));
      REQUIRE(1.0 / w <= 1.0 / omega.rho1);
      REQUIRE(lag[0] / w <= 1.0 / omega.rho1 * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("bias statistic vanishes pathwise for constant curves") {
  const TvArchSpec spec({ParameterCurve::constant(0.8),
                         ParameterCurve::constant(0.25)},
                        InnovationLaw::gaussian(), reg(0.1, 0.5, 0.2, 1.0));
  const KernelSpec kernel(KernelFamily::Rectangular, 0.1);
  Vector alpha(2);
  alpha << 0.8, 0.25;
  const Vector db = bias_statistic(spec, 0.5, 1000, 2000, 77, kernel, alpha);
  REQUIRE(db[0] == 0.0);
  REQUIRE(db[1] == 0.0);
}

TEST_CASE("order-zero bias statistic mean matches the curvature law") {
  // E grad B ~ (b^2/2) w(2) d^2/du^2 grad L = -(b^2/2) w(2) a0''(u0)/(2 a0^2)
  const TvArchSpec spec = cos_arch0();
  const double u0 = 0.5;
  const long N = 4000;
  const long t0 = 2000;
  const double fourpi2 = 4.0 * std::numbers::pi * std::numbers::pi;
  Vector alpha(1);
  alpha << spec.curve(0).value(u0);

  auto mc_mean = [&](double b, int reps) {
    const KernelSpec kernel(KernelFamily::Rectangular, b);
    double acc = 0.0;
    for (int r = 0; r < reps; ++r)
      acc += bias_statistic(spec, u0, t0, N, derive_seed(21, r), kernel,
                            alpha)[0];
    return acc / reps;
  };

  const double mean02 = mc_mean(0.2, 200);
  const double expect02 =
      0.5 * 0.04 * (1.0 / 12.0) * (-0.5 * fourpi2 / 1.0);
  REQUIRE_THAT(mean02, Catch::Matchers::WithinRel(expect02, 0.10));

  // b^2 scaling: mean(b=0.2) / mean(b=0.1) should sit near 4.
  const double mean01 = mc_mean(0.1, 200);
  const double ratio = mean02 / mean01;
  REQUIRE(ratio >= 3.2);
  REQUIRE(ratio <= 4.8);
}
