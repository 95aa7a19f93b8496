#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "tvarch/errors.hpp"
#include "tvarch/kernel.hpp"
#include "tvarch/likelihood.hpp"
#include "tvarch/model.hpp"

namespace tvarch {

struct FitOptions {
  double tol = 1e-8;       // projected-gradient norm target
  int max_iter = 200;
  bool multi_start = true; // try 3 feasible starts when the first stalls
  bool warm_start = true;  // fit_path only
};

struct FitResult {
  long t0 = 0;
  double u0 = 0.0;
  double b = 0.0;
  Vector estimate;
  double value = 0.0;
  double gradient_norm = 0.0;  // projected-gradient norm at the estimate
  Matrix hessian_at_opt;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> active_constraints;
  Vector stderr_;              // empty until standard_errors fills it
  double varz2_hat = std::numeric_limits<double>::quiet_NaN();
  std::string error;           // per-anchor failure note (fit_path)

  bool has_stderr() const { return stderr_.size() > 0; }
};

namespace fit_detail {

inline double weighted_mean_x2(const LocalData& data) {
  KahanSum num, den;
  for (long k = data.weights.k_first; k <= data.weights.k_last(); ++k) {
    num.add(data.weights.at(k) * data.x2_at(k));
    den.add(data.weights.at(k));
  }
  return num.value() / den.value();
}

inline double projected_gradient_norm(const Vector& alpha, const Vector& grad,
                                      const OmegaSpace& omega) {
  return (omega_project(alpha - grad, omega) - alpha).norm();
}

inline std::vector<std::string> active_constraints(const Vector& alpha,
                                                   const OmegaSpace& omega) {
  std::vector<std::string> act;
  const double tol = 1e-9;
  if (alpha[0] <= omega.rho1 + tol) act.push_back("alpha0=rho1");
  if (alpha[0] >= omega.rho2 - tol) act.push_back("alpha0=rho2");
  double s = 0.0;
  for (int j = 1; j <= omega.p; ++j) {
    if (alpha[j] <= omega.rho1 + tol)
      act.push_back("alpha" + std::to_string(j) + "=rho1");
    s += alpha[j];
  }
  if (omega.p > 0 && s >= 1.0 - tol) act.push_back("sum=1");
  return act;
}

// One projected-Newton run from a fixed feasible start. Coordinates pinned
// at a bound with the gradient pushing outward are dropped from the Newton
// model (two-metric projection), so curvature coupling cannot turn the
// step uphill along an active face. A projected-gradient line search backs
// the Newton step up whenever it fails to produce an Armijo decrease.
inline FitResult newton_run(const LocalData& data, const OmegaSpace& omega,
                            Vector alpha, const FitOptions& opts) {
  FitResult res;
  res.t0 = data.t0;
  res.u0 = static_cast<double>(data.t0) / data.N;
  res.b = data.kernel.b;

  const int n = omega.p + 1;
  const double armijo = 1e-4;
  LikelihoodTerms terms = weighted_likelihood(data, alpha);

  auto try_direction = [&](const Vector& dir, double step0,
                           int backtracks) -> bool {
    double step = step0;
    for (int ls = 0; ls < backtracks; ++ls, step *= 0.5) {
      const Vector trial = omega_project(alpha + step * dir, omega);
      const Vector move = trial - alpha;
      if (move.norm() == 0.0) continue;
      const double slope = terms.gradient.dot(move);
      const double fval = weighted_value(data, trial);
      if (fval <= terms.value + armijo * std::min(slope, 0.0)) {
        alpha = trial;
        terms = weighted_likelihood(data, alpha);
        return true;
      }
    }
    return false;
  };

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const double pg = projected_gradient_norm(alpha, terms.gradient, omega);
    if (pg <= opts.tol) break;

    // Active bounds with an outward-pointing gradient leave the model.
    const double eps = 1e-12;
    std::vector<bool> pinned(n, false);
    if (alpha[0] <= omega.rho1 + eps && terms.gradient[0] > 0.0)
      pinned[0] = true;
    if (alpha[0] >= omega.rho2 - eps && terms.gradient[0] < 0.0)
      pinned[0] = true;
    for (int j = 1; j < n; ++j)
      if (alpha[j] <= omega.rho1 + eps && terms.gradient[j] > 0.0)
        pinned[j] = true;

    Matrix H = terms.hessian;
    for (int i = 0; i < n; ++i)
      if (pinned[i]) {
        H.row(i).setZero();
        H.col(i).setZero();
        H(i, i) = 1.0;
      }

    bool accepted = false;
    const double diag_scale =
        std::max(1e-12, H.diagonal().cwiseAbs().maxCoeff());
    double lambda = 0.0;
    for (int shift = 0; shift < 8 && !accepted; ++shift) {
      Matrix Hs = H;
      if (lambda > 0.0) Hs.diagonal().array() += lambda;
      Eigen::LLT<Matrix> llt(Hs);
      if (llt.info() == Eigen::Success) {
        if (try_direction(llt.solve(-terms.gradient), 1.0, 30))
          accepted = true;
      }
      lambda = lambda == 0.0 ? 1e-6 * diag_scale : 10.0 * lambda;
    }
    if (!accepted)
      accepted = try_direction(-terms.gradient, 1.0 / diag_scale, 60);
    if (!accepted) break;  // no feasible decrease left
  }
  res.estimate = alpha;
  res.value = terms.value;
  res.gradient_norm = projected_gradient_norm(alpha, terms.gradient, omega);
  res.hessian_at_opt = terms.hessian;
  res.iterations = it;
  res.converged = res.gradient_norm <= opts.tol;
  res.active_constraints = active_constraints(alpha, omega);
  return res;
}

inline bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace fit_detail

// Minimize the weighted quasi-likelihood over Omega at one anchor.
// Start point: alpha_0 = half the local weighted mean of x2, tail split
// evenly to sum 1/2, projected into Omega. Multi-start fallback keeps the
// lowest value, breaking ties lexicographically.
inline FitResult fit_local(const LocalData& data, const OmegaSpace& omega,
                           const FitOptions& opts = {},
                           std::optional<Vector> start = std::nullopt) {
  const int p = omega.p;
  if (data.p != p) throw ConfigError("LocalData order does not match Omega");

  const double wmean = fit_detail::weighted_mean_x2(data);
  Vector a0(p + 1);
  a0[0] = 0.5 * wmean;
  for (int j = 1; j <= p; ++j) a0[j] = 0.5 / p;
  a0 = omega_project(a0, omega);
  if (start) a0 = omega_project(*start, omega);

  FitResult best = fit_detail::newton_run(data, omega, a0, opts);
  if (!best.converged && opts.multi_start && !start) {
    std::vector<Vector> extra;
    extra.push_back(omega.center());
    Vector s3(p + 1);
    s3[0] = 0.9 * wmean;
    for (int j = 1; j <= p; ++j) s3[j] = std::min(0.1, 1.0 / (2.0 * p));
    extra.push_back(omega_project(s3, omega));
    for (const Vector& s : extra) {
      FitResult cand =
          fit_detail::newton_run(data, omega, omega_project(s, omega), opts);
      const bool better =
          (cand.converged && !best.converged) ||
          (cand.converged == best.converged &&
           (cand.value < best.value ||
            (cand.value == best.value &&
             fit_detail::lex_less(cand.estimate, best.estimate))));
      if (better) best = cand;
    }
  }
  return best;
}

// Plug-in standard errors from Theorem 3(i):
//   Sigma_hat = weighted average of grad_w grad_w^T / (2 w^2) at the fit,
//   varz2_hat = weighted variance of the squared residuals x2 / w_hat,
//   stderr_i  = sqrt(w2 varz2_hat / 2 * (Sigma_hat^-1)_ii / (bN)).
inline FitResult standard_errors(FitResult fit, const LocalData& data) {
  if (!fit.converged)
    throw Error("standard_errors requires a converged fit");
  if (!fit.active_constraints.empty())
    throw Error("standard_errors requires an interior optimum");
  const int p = data.p;
  const Vector& alpha = fit.estimate;

  KahanMatrix sig(p + 1, p + 1);
  KahanSum wsum, zsum, z2sum;
  Vector gw(p + 1);
  gw[0] = 1.0;
  for (long k = data.weights.k_first; k <= data.weights.k_last(); ++k) {
    const double wk = data.weights.at(k);
    if (wk == 0.0) continue;
    const double* lag = data.lags_at(k);
    double w = alpha[0];
    for (int j = 1; j <= p; ++j) {
      gw[j] = lag[p - j];
      w += alpha[j] * gw[j];
    }
    sig.add((wk * 0.5 / (w * w)) * (gw * gw.transpose()));
    const double zhat2 = data.x2_at(k) / w;
    wsum.add(wk);
    zsum.add(wk * zhat2);
    z2sum.add(wk * zhat2 * zhat2);
  }
  const double W = wsum.value();
  Matrix sigma = sig.value() / W;
  const double mean_z2 = zsum.value() / W;
  const double varz2 = std::max(0.0, z2sum.value() / W - mean_z2 * mean_z2);

  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (!(emin > 0.0) || emax / emin > 1e12)
    throw SingularSigma("plug-in information matrix is singular");

  const Matrix sigma_inv = sigma.inverse();
  const double bN = data.kernel.b * static_cast<double>(data.N);
  const double w2 = data.kernel.moments.w2;
  fit.stderr_.resize(p + 1);
  for (int i = 0; i <= p; ++i)
    fit.stderr_[i] = std::sqrt(w2 * varz2 / 2.0 * sigma_inv(i, i) / bN);
  fit.varz2_hat = varz2;
  return fit;
}

// Independent fits along a grid of anchors, warm-starting each one from
// its predecessor. Per-anchor failures are recorded on the result rather
// than aborting the sweep.
inline std::vector<FitResult> fit_path(const std::vector<double>& x2_series,
                                       long N, const std::vector<long>& grid,
                                       const KernelSpec& kernel,
                                       const OmegaSpace& omega,
                                       const FitOptions& opts = {},
                                       BoundaryPolicy policy =
                                           BoundaryPolicy::Strict,
                                       bool with_stderr = true) {
  std::vector<FitResult> out;
  out.reserve(grid.size());
  std::optional<Vector> warm;
  for (long t0 : grid) {
    FitResult res;
    try {
      const LocalData data =
          make_local_data(x2_series, N, t0, kernel, omega.p, policy);
      res = fit_local(data, omega, opts,
                      opts.warm_start ? warm : std::nullopt);
      if (res.converged) warm = res.estimate;
      if (with_stderr && res.converged && res.active_constraints.empty()) {
        try {
          res = standard_errors(res, data);
        } catch (const SingularSigma& e) {
          res.error = e.what();
        }
      }
    } catch (const Error& e) {
      res.t0 = t0;
      res.u0 = static_cast<double>(t0) / N;
      res.b = kernel.b;
      res.converged = false;
      res.error = e.what();
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace tvarch
