#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "tvarch/estimate.hpp"
#include "tvarch/kernel.hpp"
#include "tvarch/likelihood.hpp"
#include "tvarch/model.hpp"
#include "tvarch/simulate.hpp"

namespace tvarch {

struct McOptions {
  long N = 20000;
  int reps = 50;
  std::uint64_t seed = 1;
};

struct SigmaEstimate {
  Matrix sigma;
  Matrix mc_stderr;   // zero for the closed form
  bool closed_form = false;
  Vector eigenvalues;
};

// Information-type matrix
//   Sigma(u0) = E[ grad_w grad_w^T / (2 w^2) ] at alpha = a(u0),
// by closed form for order 0 (1 / (2 a_0(u0)^2)) and by Monte Carlo over
// stationary paths otherwise.
inline SigmaEstimate sigma_of_u(const TvArchSpec& spec, double u0,
                                const McOptions& mc = {},
                                bool force_mc = false) {
  const int p = spec.order();
  SigmaEstimate out;
  if (p == 0 && !force_mc) {
    const double a0 = spec.curve(0).value(u0);
    out.sigma = Matrix::Constant(1, 1, 1.0 / (2.0 * a0 * a0));
    out.mc_stderr = Matrix::Zero(1, 1);
    out.closed_form = true;
    out.eigenvalues = Vector::Constant(1, out.sigma(0, 0));
    return out;
  }

  const auto alpha_vec = spec.coefficients(u0);
  Vector alpha(p + 1);
  for (int j = 0; j <= p; ++j) alpha[j] = alpha_vec[j];

  std::vector<Matrix> per_rep(mc.reps);
  for (int r = 0; r < mc.reps; ++r) {
    const SamplePath path =
        simulate_stationary(spec, u0, mc.N, derive_seed(mc.seed, r));
    KahanMatrix acc(p + 1, p + 1);
    Vector gw(p + 1);
    gw[0] = 1.0;
    long n = 0;
    for (long t = p + 1; t <= mc.N; ++t) {
      double w = alpha[0];
      for (int j = 1; j <= p; ++j) {
        gw[j] = path.x2_at(t - j);
        w += alpha[j] * gw[j];
      }
      acc.add((0.5 / (w * w)) * (gw * gw.transpose()));
      ++n;
    }
    per_rep[r] = acc.value() / static_cast<double>(n);
  }
  Matrix mean = Matrix::Zero(p + 1, p + 1);
  for (const Matrix& m : per_rep) mean += m;
  mean /= mc.reps;
  Matrix var = Matrix::Zero(p + 1, p + 1);
  for (const Matrix& m : per_rep)
    var += (m - mean).cwiseProduct(m - mean);
  var /= std::max(1, mc.reps - 1);

  out.sigma = mean;
  out.mc_stderr = (var / mc.reps).cwiseSqrt();
  out.closed_form = false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.sigma);
  out.eigenvalues = es.eigenvalues();
  return out;
}

struct MuEstimate {
  Vector mu;
  Vector mc_stderr;       // zero for the closed form
  bool closed_form = false;
  double du = 0.0;
  double stencil_bias = 0.0;  // |5-point - 3-point| second-derivative gap
};

// Nonstationarity bias direction
//   mu(u0) = w(2)/2 * Sigma(u0)^-1 * d^2/du^2 E[grad l~_0(u, a_u0)] |_u0.
// The u-derivative is taken numerically on the symmetric 5-point stencil
// with a common innovation stream per replication, which removes almost
// all of the Monte Carlo noise from the difference. Order 0 has the
// closed form mu = -w(2) a_0''(u0) / 2.
inline MuEstimate bias_mu(const TvArchSpec& spec, double u0,
                          const KernelSpec& kernel, const McOptions& mc = {},
                          double du = 0.02, bool force_mc = false) {
  const int p = spec.order();
  MuEstimate out;
  out.du = du;
  if (p == 0 && !force_mc) {
    out.mu = Vector::Constant(1, -0.5 * kernel.moments.w2nd *
                                     spec.curve(0).eval(u0, 2));
    out.mc_stderr = Vector::Zero(1);
    out.closed_form = true;
    return out;
  }
  if (!(u0 - 2.0 * du > 0.0 && u0 + 2.0 * du < 1.0))
    throw StencilOutOfRange("u0 +- 2 du leaves (0, 1)");

  const auto alpha_vec = spec.coefficients(u0);
  Vector alpha(p + 1);
  for (int j = 0; j <= p; ++j) alpha[j] = alpha_vec[j];

  const std::array<double, 5> offsets = {-2.0, -1.0, 0.0, 1.0, 2.0};
  // Per replication, the ergodic mean of grad l~_t(u_s, a_u0) at each
  // stencil point, all from one innovation stream.
  std::vector<std::array<Vector, 5>> g(mc.reps);
  for (int r = 0; r < mc.reps; ++r) {
    const std::uint64_t seed_r = derive_seed(mc.seed, r);
    for (int s = 0; s < 5; ++s) {
      const double us = u0 + offsets[s] * du;
      const SamplePath path = simulate_stationary(spec, us, mc.N, seed_r);
      KahanVector acc(p + 1);
      Vector gw(p + 1);
      gw[0] = 1.0;
      long n = 0;
      for (long t = p + 1; t <= mc.N; ++t) {
        double w = alpha[0];
        for (int j = 1; j <= p; ++j) {
          gw[j] = path.x2_at(t - j);
          w += alpha[j] * gw[j];
        }
        acc.add((0.5 * (1.0 / w - path.x2_at(t) / (w * w))) * gw);
        ++n;
      }
      g[r][s] = acc.value() / static_cast<double>(n);
    }
  }

  const Matrix sigma = sigma_of_u(spec, u0, mc, force_mc).sigma;
  const Matrix sigma_inv = sigma.inverse();
  const double w2nd = kernel.moments.w2nd;

  auto mu_of = [&](const std::array<Vector, 5>& gs, bool five_point) {
    Vector g2;
    if (five_point)
      g2 = (-gs[4] + 16.0 * gs[3] - 30.0 * gs[2] + 16.0 * gs[1] - gs[0]) /
           (12.0 * du * du);
    else
      g2 = (gs[3] - 2.0 * gs[2] + gs[1]) / (du * du);
    return Vector(0.5 * w2nd * (sigma_inv * g2));
  };

  std::array<Vector, 5> gbar;
  for (int s = 0; s < 5; ++s) {
    gbar[s] = Vector::Zero(p + 1);
    for (int r = 0; r < mc.reps; ++r) gbar[s] += g[r][s];
    gbar[s] /= mc.reps;
  }
  out.mu = mu_of(gbar, true);
  out.stencil_bias = (out.mu - mu_of(gbar, false)).norm();

  Vector var = Vector::Zero(p + 1);
  for (int r = 0; r < mc.reps; ++r) {
    const Vector mu_r = mu_of(g[r], true);
    var += (mu_r - out.mu).cwiseProduct(mu_r - out.mu);
  }
  var /= std::max(1, mc.reps - 1);
  out.mc_stderr = (var / mc.reps).cwiseSqrt();
  return out;
}

// Conjectured mean squared error of the estimator at bandwidth b:
//   b^4 |mu|^2 + w2 var(Z^2) trace(Sigma^-1) / (2 b N).
inline double bandwidth_mse(double b, long N, double w2, double varz2,
                            const Matrix& sigma, const Vector& mu) {
  const double tr = sigma.inverse().trace();
  return std::pow(b, 4) * mu.squaredNorm() + w2 * varz2 * tr / (2.0 * b * N);
}

struct BandwidthResult {
  double b_opt = 0.5;
  bool zero_bias = false;
};

// Minimizer of the conjectured MSE in closed form,
//   b = [ w2 var(Z^2) trace(Sigma^-1) / (8 N |mu|^2) ]^(1/5),
// clipped to (0, 1/2]. A vanishing bias direction pins the clip and is
// flagged instead of failing.
inline BandwidthResult optimal_bandwidth(const TvArchSpec& spec, double u0,
                                         long N, const KernelSpec& kernel,
                                         const Matrix& sigma,
                                         const Vector& mu) {
  (void)u0;
  BandwidthResult out;
  const double mu2 = mu.squaredNorm();
  if (!(mu2 > 0.0)) {
    out.zero_bias = true;
    out.b_opt = 0.5;
    return out;
  }
  const double varz2 = spec.innovation().var_z2();
  const double tr = sigma.inverse().trace();
  const double b = std::pow(
      kernel.moments.w2 * varz2 * tr / (8.0 * static_cast<double>(N) * mu2),
      0.2);
  out.b_opt = std::min(b, 0.5);
  return out;
}

struct ConfidenceInterval {
  double center = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Componentwise normal confidence intervals from a fit with standard
// errors. When (mu, b) is supplied the center is shifted by the first-order
// bias correction b^2 mu_i; the uncorrected form is valid when b^3 << 1/N.
inline std::vector<ConfidenceInterval> confidence_intervals(
    const FitResult& fit, double level,
    std::optional<std::pair<Vector, double>> bias_correct = std::nullopt) {
  if (!fit.has_stderr())
    throw Error("confidence_intervals requires standard errors on the fit");
  if (!(level > 0.5 && level < 1.0))
    throw ConfigError("confidence level must lie in (0.5, 1)");
  const double q = normal_quantile(0.5 * (1.0 + level));
  std::vector<ConfidenceInterval> out(fit.estimate.size());
  for (Eigen::Index i = 0; i < fit.estimate.size(); ++i) {
    double center = fit.estimate[i];
    if (bias_correct)
      center += bias_correct->second * bias_correct->second *
                bias_correct->first[i];
    out[i] = {center, center - q * fit.stderr_[i],
              center + q * fit.stderr_[i]};
  }
  return out;
}

}  // namespace tvarch
