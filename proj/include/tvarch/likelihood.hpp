#pragma once

#include <span>
#include <vector>

#include "tvarch/kernel.hpp"
#include "tvarch/model.hpp"
#include "tvarch/numerics.hpp"
#include "tvarch/simulate.hpp"

namespace tvarch {

// Conditional variance w_k(alpha) = alpha_0 + sum_j alpha_j X_{k-j}^2.
// Omega keeps this >= rho1 > 0 for non-negative lags.
inline double cond_variance(const Vector& alpha, std::span<const double> lags) {
  double w = alpha[0];
  for (std::size_t j = 0; j < lags.size(); ++j) w += alpha[j + 1] * lags[j];
  return w;
}

struct LikelihoodTerms {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

// One conditional quasi-likelihood term and its alpha-derivatives:
//   l_k = (log w + x2/w) / 2
//   grad = (grad_w / w - x2 grad_w / w^2) / 2
//   hess = (-grad_w grad_w^T / w^2 + 2 x2 grad_w grad_w^T / w^3) / 2
// with grad_w = (1, lag_1, .., lag_p). The scale factors are evaluated in
// the factored forms (1 - x2/w) / (2w) and (2 x2/w - 1) / (2 w^2) so a
// unit squared residual gives an exactly zero gradient. The Hessian is
// exactly symmetric by construction.
inline LikelihoodTerms loglik_point(const Vector& alpha, double x2_k,
                                    std::span<const double> lags) {
  const int p = static_cast<int>(lags.size());
  const double w = cond_variance(alpha, lags);
  LikelihoodTerms out;
  out.value = 0.5 * (std::log(w) + x2_k / w);

  Vector gw(p + 1);
  gw[0] = 1.0;
  for (int j = 0; j < p; ++j) gw[j + 1] = lags[j];

  const double ratio = x2_k / w;
  const double gscale = 0.5 * (1.0 - ratio) / w;
  out.gradient = gscale * gw;
  const double hscale = 0.5 * (2.0 * ratio - 1.0) / (w * w);
  out.hessian = hscale * (gw * gw.transpose());
  return out;
}

// The squared-observation window needed to evaluate the weighted
// likelihood at one anchor: kernel support plus p leading lags.
struct LocalData {
  std::vector<double> x2;  // covers t = t_first .. weights.k_last()
  long t_first = 1;
  long t0 = 0;
  long N = 0;
  int p = 0;
  KernelSpec kernel;
  KernelWeights weights;

  double x2_at(long t) const { return x2[t - t_first]; }
  const double* lags_at(long k) const { return &x2[k - p - t_first]; }
};

inline LocalData make_local_data(const std::vector<double>& x2_series,
                                 long N, long t0, const KernelSpec& kernel,
                                 int p,
                                 BoundaryPolicy policy = BoundaryPolicy::Strict) {
  LocalData data{.x2 = {}, .t_first = 1, .t0 = t0, .N = N, .p = p,
                 .kernel = kernel, .weights = kernel_weights(kernel, t0, N, p, policy)};
  const long lo = data.weights.k_first - p;
  const long hi = data.weights.k_last();
  data.t_first = lo;
  data.x2.assign(x2_series.begin() + (lo - 1), x2_series.begin() + hi);
  return data;
}

inline LocalData make_local_data(const SamplePath& path, long t0,
                                 const KernelSpec& kernel, int p,
                                 BoundaryPolicy policy = BoundaryPolicy::Strict) {
  return make_local_data(path.x2, path.N, t0, kernel, p, policy);
}

// Kernel-weighted quasi-likelihood with analytic gradient and Hessian.
// Sums are compensated: the bias experiments read O(b^2) effects off these
// O(1) totals.
inline LikelihoodTerms weighted_likelihood(const LocalData& data,
                                           const Vector& alpha) {
  const int p = data.p;
  KahanSum value;
  KahanVector grad(p + 1);
  KahanMatrix hess(p + 1, p + 1);
  Vector gw(p + 1);
  gw[0] = 1.0;
  for (long k = data.weights.k_first; k <= data.weights.k_last(); ++k) {
    const double wk = data.weights.at(k);
    if (wk == 0.0) continue;
    const double x2k = data.x2_at(k);
    const double* lag = data.lags_at(k);
    double w = alpha[0];
    for (int j = 1; j <= p; ++j) {
      gw[j] = lag[p - j];  // lag j is x2 at k - j
      w += alpha[j] * gw[j];
    }
    const double ratio = x2k / w;
    value.add(wk * 0.5 * (std::log(w) + ratio));
    const double gscale = wk * 0.5 * (1.0 - ratio) / w;
    const double hscale = wk * 0.5 * (2.0 * ratio - 1.0) / (w * w);
    grad.add(gscale * gw);
    hess.add(hscale * (gw * gw.transpose()));
  }
  return {value.value(), grad.value(), hess.value()};
}

// Value-only evaluation for line searches.
inline double weighted_value(const LocalData& data, const Vector& alpha) {
  const int p = data.p;
  KahanSum value;
  for (long k = data.weights.k_first; k <= data.weights.k_last(); ++k) {
    const double wk = data.weights.at(k);
    if (wk == 0.0) continue;
    const double* lag = data.lags_at(k);
    double w = alpha[0];
    for (int j = 1; j <= p; ++j) w += alpha[j] * lag[p - j];
    value.add(wk * 0.5 * (std::log(w) + data.x2_at(k) / w));
  }
  return value.value();
}

// The same weighted likelihood evaluated on the stationary approximation
// X~(u0) instead of the observed path.
inline LikelihoodTerms stationary_likelihood(const TvArchSpec& spec, double u0,
                                             const Vector& alpha, long N,
                                             std::uint64_t seed,
                                             const KernelSpec& kernel, long t0,
                                             BoundaryPolicy policy =
                                                 BoundaryPolicy::Strict) {
  const SamplePath path = simulate_stationary(spec, u0, N, seed);
  return weighted_likelihood(
      make_local_data(path, t0, kernel, spec.order(), policy), alpha);
}

// Pathwise nonstationarity bias grad B = grad L - grad L~, computed with a
// common innovation stream so the O(b^2) mean survives the difference.
inline Vector bias_statistic(const TvArchSpec& spec, double u0, long t0,
                             long N, std::uint64_t seed,
                             const KernelSpec& kernel, const Vector& alpha,
                             BoundaryPolicy policy = BoundaryPolicy::Strict) {
  const SamplePath tv =
      simulate_tvarch(spec, N, seed, StartMode::StationaryStart);
  const SamplePath st = simulate_stationary(spec, u0, N, seed);
  const int p = spec.order();
  const auto tv_terms =
      weighted_likelihood(make_local_data(tv, t0, kernel, p, policy), alpha);
  const auto st_terms =
      weighted_likelihood(make_local_data(st, t0, kernel, p, policy), alpha);
  return tv_terms.gradient - st_terms.gradient;
}

}  // namespace tvarch
