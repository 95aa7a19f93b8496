#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tvarch/errors.hpp"
#include "tvarch/model.hpp"
#include "tvarch/rng.hpp"

namespace tvarch {

enum class StartMode { PaperExact, StationaryStart };

inline const char* to_string(StartMode m) {
  return m == StartMode::PaperExact ? "paper-exact" : "stationary-start";
}

inline long default_burn_in(int p) { return std::max<long>(512, 20L * p); }

// A realization of the process on t = 1..N. All generators with the same
// seed share one innovation stream (index t maps to the same Z_t
// everywhere), which is what makes pathwise couplings work.
struct SamplePath {
  long N = 0;
  std::vector<double> x2;      // X_t^2,   index i <-> t = i + 1
  std::vector<double> sigma2;  // sigma_t^2
  std::vector<double> z;       // Z_t
  std::uint64_t seed = 0;
  StartMode start_mode = StartMode::PaperExact;
  long burn_in = 0;

  double x2_at(long t) const { return x2[t - 1]; }
  double sigma2_at(long t) const { return sigma2[t - 1]; }
  double z_at(long t) const { return z[t - 1]; }
};

namespace sim_detail {

inline CounterStream z_stream(std::uint64_t seed) {
  return CounterStream(seed, "z");
}

// Innovations for t = t_lo..N, returned with offset so index t is
// addressable directly.
struct ZBlock {
  long t_lo = 1;
  std::vector<double> v;
  double at(long t) const { return v[t - t_lo]; }
};

inline ZBlock draw_innovations(const TvArchSpec& spec, std::uint64_t seed,
                               long t_lo, long N) {
  ZBlock zb;
  zb.t_lo = t_lo;
  zb.v.resize(N - t_lo + 1);
  const CounterStream s = z_stream(seed);
  const InnovationLaw& law = spec.innovation();
  for (long t = t_lo; t <= N; ++t) zb.v[t - t_lo] = law.draw(s, t);
  return zb;
}

}  // namespace sim_detail

// Simulate the time-varying recursion
//   sigma_t^2 = a_0(t/N) + sum_j a_j(t/N) X_{t-j}^2,   X_t = sigma_t Z_t.
//
// paper-exact starts from zero pre-history (X_t^2 = 0 for t <= 0), matching
// the Volterra expansion with coefficients vanishing below u = 0.
// stationary-start extends the curves constantly below u = 0 and discards
// max(512, 20p) presample steps.
inline SamplePath simulate_tvarch(const TvArchSpec& spec, long N,
                                  std::uint64_t seed, StartMode mode) {
  const int p = spec.order();
  if (N < p + 1) throw ConfigError("need N >= p + 1");
  const long burn = mode == StartMode::StationaryStart ? default_burn_in(p) : 0;
  const long t_lo = 1 - burn;
  const auto zb = sim_detail::draw_innovations(spec, seed, t_lo, N);

  SamplePath path;
  path.N = N;
  path.seed = seed;
  path.start_mode = mode;
  path.burn_in = burn;
  path.x2.resize(N);
  path.sigma2.resize(N);
  path.z.resize(N);

  std::vector<double> hist(N + burn, 0.0);  // X_t^2 at slot t - t_lo
  const auto conv = mode == StartMode::StationaryStart
                        ? CoefficientConvention::Clamped
                        : CoefficientConvention::PaperExact;
  std::vector<double> a;
  for (long t = t_lo; t <= N; ++t) {
    spec.coefficients_into(static_cast<double>(t) / N, 0, conv, a);
    double s2 = a[0];
    for (int j = 1; j <= p; ++j) {
      const long tj = t - j;
      if (tj >= t_lo) s2 += a[j] * hist[tj - t_lo];
    }
    const double zt = zb.at(t);
    const double xx = zt * zt * s2;
    hist[t - t_lo] = xx;
    if (t >= 1) {
      path.sigma2[t - 1] = s2;
      path.x2[t - 1] = xx;
      path.z[t - 1] = zt;
    }
  }
  return path;
}

// The stationary ARCH(p) process with coefficients frozen at u0, driven by
// the same innovation stream as simulate_tvarch(seed).
inline SamplePath simulate_stationary(const TvArchSpec& spec, double u0,
                                      long N, std::uint64_t seed) {
  const int p = spec.order();
  const long burn = default_burn_in(p);
  const long t_lo = 1 - burn;
  const auto zb = sim_detail::draw_innovations(spec, seed, t_lo, N);
  const auto a = spec.coefficients(u0, 0, CoefficientConvention::Clamped);

  SamplePath path;
  path.N = N;
  path.seed = seed;
  path.start_mode = StartMode::StationaryStart;
  path.burn_in = burn;
  path.x2.resize(N);
  path.sigma2.resize(N);
  path.z.resize(N);

  std::vector<double> hist(N + burn, 0.0);
  for (long t = t_lo; t <= N; ++t) {
    double s2 = a[0];
    for (int j = 1; j <= p; ++j) {
      const long tj = t - j;
      if (tj >= t_lo) s2 += a[j] * hist[tj - t_lo];
    }
    const double zt = zb.at(t);
    const double xx = zt * zt * s2;
    hist[t - t_lo] = xx;
    if (t >= 1) {
      path.sigma2[t - 1] = s2;
      path.x2[t - 1] = xx;
      path.z[t - 1] = zt;
    }
  }
  return path;
}

namespace sim_detail {

// Shared engine for the truncated Volterra sum. Stage 0 holds
// m_t(0) = a_0 Z_t^2; each further stage applies
// m_t(k) = Z_t^2 sum_j a_j m_{t-j}(k-1). With zero pre-history both the
// recursion and the series sum over exactly the index chains that stay
// >= 1, so the truncation tail is the only difference from the recursive
// path.
inline SamplePath volterra_engine(const TvArchSpec& spec, long N, int r,
                                  std::uint64_t seed, bool frozen, double u0) {
  if (r < 1) throw ConfigError("volterra truncation order r must be >= 1");
  const int p = spec.order();
  const auto zb = draw_innovations(spec, seed, 1, N);

  // Coefficients per t, frozen or time-varying.
  std::vector<std::vector<double>> coef(N);
  for (long t = 1; t <= N; ++t)
    coef[t - 1] = frozen ? spec.coefficients(u0)
                         : spec.coefficients(static_cast<double>(t) / N);

  SamplePath path;
  path.N = N;
  path.seed = seed;
  path.start_mode = StartMode::PaperExact;
  path.burn_in = 0;
  path.x2.resize(N);
  path.sigma2.resize(N);
  path.z.resize(N);

  std::vector<double> m_prev(N), m_cur(N);
  for (long t = 1; t <= N; ++t) {
    const double zt = zb.at(t);
    path.z[t - 1] = zt;
    path.sigma2[t - 1] = coef[t - 1][0];
    m_prev[t - 1] = zt * zt * coef[t - 1][0];
  }
  for (int k = 1; k <= r; ++k) {
    for (long t = 1; t <= N; ++t) {
      double inner = 0.0;
      for (int j = 1; j <= p; ++j)
        if (t - j >= 1) inner += coef[t - 1][j] * m_prev[t - j - 1];
      path.sigma2[t - 1] += inner;
      const double zt = path.z[t - 1];
      m_cur[t - 1] = zt * zt * inner;
    }
    m_prev.swap(m_cur);
  }
  for (long t = 1; t <= N; ++t)
    path.x2[t - 1] = path.z[t - 1] * path.z[t - 1] * path.sigma2[t - 1];
  return path;
}

}  // namespace sim_detail

// Truncated Volterra series for the time-varying process: the first r
// stages of X_t^2 = a_0(t/N) Z_t^2 + sum_k m_t(k).
inline SamplePath volterra_truncated(const TvArchSpec& spec, long N, int r,
                                     std::uint64_t seed) {
  return sim_detail::volterra_engine(spec, N, r, seed, false, 0.0);
}

// Truncated Volterra series with all coefficients frozen at u0.
inline SamplePath volterra_stationary(const TvArchSpec& spec, double u0,
                                      long N, int r, std::uint64_t seed) {
  return sim_detail::volterra_engine(spec, N, r, seed, true, u0);
}

// Truncated companion process
//   U_t = Z_t^2 + sum_{k=1..r} Q^{k-1} k B_t(k),
// where A_t(0) = Z_t^2, B_t(0) = 0 and
//   A_t(k) = Z_t^2 sum_j (1/l(j)) A_{t-j}(k-1),
//   B_t(k) = Z_t^2 sum_j (1/l(j)) (j A_{t-j}(k-1) + B_{t-j}(k-1)).
// U_t dominates the nonstationarity gap |X_t^2 - X~_t(u0)^2| up to the
// factor K (|t/N - u0| + 1/N).
inline std::vector<double> companion_U(const TvArchSpec& spec, long N, int r,
                                       std::uint64_t seed) {
  if (r < 1) throw ConfigError("companion truncation order r must be >= 1");
  const int p = spec.order();
  const auto zb = sim_detail::draw_innovations(spec, seed, 1, N);
  const Regularity& reg = spec.regularity();

  std::vector<double> invl(p + 1, 0.0);
  for (int j = 1; j <= p; ++j) invl[j] = 1.0 / reg.ell(j);

  std::vector<double> U(N), z2(N);
  std::vector<double> a_prev(N), b_prev(N), a_cur(N), b_cur(N);
  for (long t = 1; t <= N; ++t) {
    const double zt = zb.at(t);
    z2[t - 1] = zt * zt;
    U[t - 1] = z2[t - 1];
    a_prev[t - 1] = z2[t - 1];
    b_prev[t - 1] = 0.0;
  }
  double qpow = 1.0;  // Q^(k-1)
  for (int k = 1; k <= r; ++k) {
    for (long t = 1; t <= N; ++t) {
      double sa = 0.0, sb = 0.0;
      for (int j = 1; j <= p; ++j) {
        if (t - j < 1) continue;
        sa += invl[j] * a_prev[t - j - 1];
        sb += invl[j] * (j * a_prev[t - j - 1] + b_prev[t - j - 1]);
      }
      a_cur[t - 1] = z2[t - 1] * sa;
      b_cur[t - 1] = z2[t - 1] * sb;
      U[t - 1] += qpow * k * b_cur[t - 1];
    }
    a_prev.swap(a_cur);
    b_prev.swap(b_cur);
    qpow *= reg.Q;
  }
  return U;
}

// A u-derivative path of the stationary approximation, sharing the
// innovation stream and the X~ path of simulate_stationary.
struct DerivativePath {
  long N = 0;
  double u0 = 0.0;
  int order = 1;
  std::vector<double> values;  // d^order X~_t(u0)^2 / du^order, t = 1..N
  SamplePath base;
  bool moment_warning = false;

  double at(long t) const { return values[t - 1]; }
};

namespace sim_detail {

struct StationaryWithDerivatives {
  SamplePath base;
  std::vector<double> d1, d2;  // empty when not requested
};

inline StationaryWithDerivatives simulate_stationary_derivatives(
    const TvArchSpec& spec, double u0, long N, std::uint64_t seed,
    int max_order) {
  const int p = spec.order();
  const long burn = default_burn_in(p);
  const long t_lo = 1 - burn;
  const auto zb = draw_innovations(spec, seed, t_lo, N);
  const auto a = spec.coefficients(u0, 0, CoefficientConvention::Clamped);
  const auto a1 = spec.coefficients(u0, 1, CoefficientConvention::Clamped);
  const auto a2 = max_order >= 2
                      ? spec.coefficients(u0, 2, CoefficientConvention::Clamped)
                      : std::vector<double>(p + 1, 0.0);

  StationaryWithDerivatives out;
  out.base.N = N;
  out.base.seed = seed;
  out.base.start_mode = StartMode::StationaryStart;
  out.base.burn_in = burn;
  out.base.x2.resize(N);
  out.base.sigma2.resize(N);
  out.base.z.resize(N);
  out.d1.resize(N);
  if (max_order >= 2) out.d2.resize(N);

  std::vector<double> hx(N + burn, 0.0), hd1(N + burn, 0.0),
      hd2(N + burn, 0.0);
  for (long t = t_lo; t <= N; ++t) {
    const double zt = zb.at(t);
    const double z2 = zt * zt;
    double s2 = a[0], g1 = a1[0], g2 = a2[0];
    for (int j = 1; j <= p; ++j) {
      const long i = t - j - t_lo;
      if (t - j < t_lo) continue;
      s2 += a[j] * hx[i];
      g1 += a1[j] * hx[i] + a[j] * hd1[i];
      if (max_order >= 2) g2 += a2[j] * hx[i] + 2.0 * a1[j] * hd1[i] + a[j] * hd2[i];
    }
    const long i = t - t_lo;
    hx[i] = z2 * s2;
    hd1[i] = z2 * g1;
    if (max_order >= 2) hd2[i] = z2 * g2;
    if (t >= 1) {
      out.base.sigma2[t - 1] = s2;
      out.base.x2[t - 1] = hx[i];
      out.base.z[t - 1] = zt;
      out.d1[t - 1] = hd1[i];
      if (max_order >= 2) out.d2[t - 1] = hd2[i];
    }
  }
  return out;
}

}  // namespace sim_detail

// First- or second-order derivative process, obtained by differentiating
// the frozen-coefficient recursion in u:
//   D_t  = Z_t^2 (a_0' + sum_j a_j' X~_{t-j}^2 + sum_j a_j D_{t-j}),
//   D2_t = Z_t^2 (a_0'' + sum_j a_j'' X~_{t-j}^2
//                 + 2 sum_j a_j' D_{t-j} + sum_j a_j D2_{t-j}).
inline DerivativePath derivative_path(const TvArchSpec& spec, double u0,
                                      long N, std::uint64_t seed, int order) {
  if (order != 1 && order != 2)
    throw ConfigError("derivative order must be 1 or 2");
  if (spec.differentiable_to() < order)
    throw NotDifferentiable("curves are not differentiable to order " +
                            std::to_string(order));
  auto sim =
      sim_detail::simulate_stationary_derivatives(spec, u0, N, seed, order);
  DerivativePath dp;
  dp.N = N;
  dp.u0 = u0;
  dp.order = order;
  dp.values = order == 1 ? std::move(sim.d1) : std::move(sim.d2);
  dp.base = std::move(sim.base);
  if (order == 2)
    dp.moment_warning =
        !validate_moment_conditions(spec, MomentLevel::Bias).all_pass();
  return dp;
}

// Residual of the second-order stationary Taylor expansion of X_{t,N}^2
// about u0, evaluated at t* = round(t_over_N * N) with a common innovation
// stream. `order` truncates the expansion: 0 compares against X~_t(u0)^2
// alone, 1 adds the first derivative term, 2 (default) both terms.
struct TaylorResidual {
  long t_star = 0;
  double distance = 0.0;  // t*/N - u0
  double residual = 0.0;
  double abs_residual = 0.0;
};

inline TaylorResidual taylor_residual(const TvArchSpec& spec, double u0,
                                      double t_over_N, long N,
                                      std::uint64_t seed, int order = 2) {
  if (order < 0 || order > 2) throw ConfigError("taylor order must be 0..2");
  const long t_star = std::lround(t_over_N * static_cast<double>(N));
  if (t_star < 1 || t_star > N)
    throw ConfigError("taylor anchor t/N leaves the sample");
  const SamplePath tv =
      simulate_tvarch(spec, N, seed, StartMode::StationaryStart);
  const auto sim = sim_detail::simulate_stationary_derivatives(
      spec, u0, N, seed, order >= 2 ? 2 : 1);
  const double dist = static_cast<double>(t_star) / N - u0;
  double approx = sim.base.x2_at(t_star);
  if (order >= 1) approx += dist * sim.d1[t_star - 1];
  if (order >= 2) approx += 0.5 * dist * dist * sim.d2[t_star - 1];
  TaylorResidual res;
  res.t_star = t_star;
  res.distance = dist;
  res.residual = tv.x2_at(t_star) - approx;
  res.abs_residual = std::abs(res.residual);
  return res;
}

}  // namespace tvarch
