#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tvarch/curve.hpp"
#include "tvarch/errors.hpp"
#include "tvarch/innovation.hpp"
#include "tvarch/numerics.hpp"

namespace tvarch {

// Coefficient decay weight sequence l(j). Only j <= p ever matters for a
// finite-order model; l = 1 is always admissible there.
struct EllSequence {
  enum class Family { One, PolyLog, Geometric } family = Family::One;
  double kappa = 0.5;  // polylog exponent parameter
  double eta = 2.0;    // geometric base, > 1

  double operator()(int j) const {
    switch (family) {
      case Family::One:
        return 1.0;
      case Family::PolyLog:
        return j <= 1 ? 1.0
                      : static_cast<double>(j) * j *
                            std::pow(std::log(static_cast<double>(j)),
                                     1.0 + kappa);
      case Family::Geometric:
        return std::pow(eta, j);
    }
    return 1.0;
  }

  std::string name() const {
    switch (family) {
      case Family::One: return "one";
      case Family::PolyLog: return "polylog";
      case Family::Geometric: return "geometric";
    }
    return "?";
  }

  static EllSequence one() { return {}; }
  static EllSequence polylog(double kappa) {
    return {Family::PolyLog, kappa, 2.0};
  }
  static EllSequence geometric(double eta) {
    if (!(eta > 1.0)) throw ConfigError("geometric ell requires eta > 1");
    return {Family::Geometric, 0.5, eta};
  }
};

// Structural constants of the model class: coefficient floor rho for a_0,
// decay bound Q, contraction margin nu, Lipschitz constant M, and the
// weight sequence l(j).
struct Regularity {
  double rho = 0.0;
  double Q = 0.0;
  double nu = 0.0;
  double M = 0.0;
  EllSequence ell;
};

struct AssumptionCheck {
  std::string inequality;  // rendered as "name: lhs <= rhs"
  double lhs = 0.0;
  double rhs = 0.0;
  double location = -1.0;  // u where the worst violation occurs, if any
  bool pass = false;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AssumptionCheck& c) { return c.pass; });
  }
  const AssumptionCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }
};

enum class CoefficientConvention {
  PaperExact,  // coefficients vanish for u < 0
  Clamped      // coefficients frozen at their u = 0 (resp. u = 1) values
};

// The structural inequality checks on a uniform grid over [0, 1]:
// coefficient floor, curve non-negativity, decay bound, contraction, and
// Lipschitz increments on adjacent grid pairs. A failure anywhere on the
// grid is a violation; the check is monotone under grid refinement.
inline AssumptionReport check_assumptions(
    const std::vector<ParameterCurve>& curves, const Regularity& reg,
    int grid = 1001) {
  AssumptionReport rep;
  const int p = static_cast<int>(curves.size()) - 1;
  auto u_at = [&](int i) { return static_cast<double>(i) / (grid - 1); };

  {
    AssumptionCheck c;
    double m = curves[0].value(0.0);
    double at = 0.0;
    for (int i = 1; i < grid; ++i) {
      const double v = curves[0].value(u_at(i));
      if (v < m) { m = v; at = u_at(i); }
    }
    c.inequality = "inf a0(u) >= rho";
    c.lhs = m;
    c.rhs = reg.rho;
    c.location = at;
    c.pass = m >= reg.rho;
    rep.checks.push_back(c);
  }

  for (int j = 0; j <= p; ++j) {
    AssumptionCheck c;
    double m = curves[j].value(0.0);
    double at = 0.0;
    for (int i = 1; i < grid; ++i) {
      const double v = curves[j].value(u_at(i));
      if (v < m) { m = v; at = u_at(i); }
    }
    c.inequality = "a" + std::to_string(j) + "(u) >= 0";
    c.lhs = m;
    c.rhs = 0.0;
    c.location = at;
    c.pass = m >= 0.0;
    rep.checks.push_back(c);
  }

  for (int j = 1; j <= p; ++j) {
    AssumptionCheck c;
    double m = curves[j].value(0.0);
    double at = 0.0;
    for (int i = 1; i < grid; ++i) {
      const double v = curves[j].value(u_at(i));
      if (v > m) { m = v; at = u_at(i); }
    }
    c.inequality = "sup a" + std::to_string(j) + "(u) <= Q/l(j)";
    c.lhs = m;
    c.rhs = reg.Q / reg.ell(j);
    c.location = at;
    c.pass = m <= c.rhs;
    rep.checks.push_back(c);
  }

  {
    AssumptionCheck c;
    double s = 0.0;
    for (int j = 1; j <= p; ++j) s += 1.0 / reg.ell(j);
    c.inequality = "Q * sum 1/l(j) <= 1 - nu";
    c.lhs = reg.Q * s;
    c.rhs = 1.0 - reg.nu;
    c.pass = c.lhs <= c.rhs;
    rep.checks.push_back(c);
  }

  for (int j = 0; j <= p; ++j) {
    AssumptionCheck c;
    const double bound = reg.M / (j == 0 ? 1.0 : reg.ell(j));
    double worst = 0.0;
    double at = 0.0;
    for (int i = 0; i + 1 < grid; ++i) {
      const double du = u_at(i + 1) - u_at(i);
      const double slope =
          std::abs(curves[j].value(u_at(i + 1)) - curves[j].value(u_at(i))) /
          du;
      if (slope > worst) { worst = slope; at = u_at(i); }
    }
    c.inequality = "|a" + std::to_string(j) + "(u) - a" + std::to_string(j) +
                   "(v)| <= M |u-v| / l(j)";
    c.lhs = worst;
    c.rhs = bound;
    c.location = at;
    c.pass = worst <= bound;
    rep.checks.push_back(c);
  }

  return rep;
}

// A validated time-varying ARCH(p) model: p + 1 coefficient curves, the
// innovation law, and the regularity block they were checked against.
class TvArchSpec {
 public:
  TvArchSpec(std::vector<ParameterCurve> curves, InnovationLaw law,
             Regularity reg, int grid = 1001)
      : curves_(std::move(curves)), law_(law), reg_(reg) {
    if (curves_.empty())
      throw ConfigError("a model needs at least the a0 curve");
    if (!(reg_.rho > 0.0) || !(reg_.Q > 0.0) || !(reg_.M > 0.0))
      throw ConfigError("regularity constants rho, Q, M must be positive");
    if (!(reg_.nu > 0.0 && reg_.nu < 1.0))
      throw ConfigError("contraction margin nu must lie in (0, 1)");
    const AssumptionReport report = assumption_report(grid);
    if (const AssumptionCheck* fail = report.first_failure())
      throw AssumptionViolation(fail->inequality, fail->location);
  }

  int order() const { return static_cast<int>(curves_.size()) - 1; }
  const ParameterCurve& curve(int j) const { return curves_.at(j); }
  const std::vector<ParameterCurve>& curves() const { return curves_; }
  const InnovationLaw& innovation() const { return law_; }
  const Regularity& regularity() const { return reg_; }

  double sup_a0() const { return curves_[0].max_on_unit_interval(); }
  double inf_a0() const { return curves_[0].min_on_unit_interval(); }

  // (d^s a_0/du^s, ..., d^s a_p/du^s) at rescaled time u, written into a
  // caller-owned buffer so recursion loops stay allocation-free.
  void coefficients_into(
      double u, int deriv_order, CoefficientConvention conv,
      std::vector<double>& out) const {
    out.assign(curves_.size(), 0.0);
    double ueff = u;
    if (u < 0.0) {
      if (conv == CoefficientConvention::PaperExact) return;
      ueff = 0.0;
    } else if (u > 1.0 && conv == CoefficientConvention::Clamped) {
      ueff = 1.0;
    }
    for (std::size_t j = 0; j < curves_.size(); ++j)
      out[j] = curves_[j].eval(ueff, deriv_order);
  }

  std::vector<double> coefficients(
      double u, int deriv_order = 0,
      CoefficientConvention conv = CoefficientConvention::PaperExact) const {
    std::vector<double> out;
    coefficients_into(u, deriv_order, conv, out);
    return out;
  }

  int differentiable_to() const {
    int d = 3;
    for (const auto& c : curves_) d = std::min(d, c.differentiable_to());
    return d;
  }

  AssumptionReport assumption_report(int grid = 1001) const {
    return check_assumptions(curves_, reg_, grid);
  }

 private:
  std::vector<ParameterCurve> curves_;
  InnovationLaw law_;
  Regularity reg_;
};

inline TvArchSpec build_spec(std::vector<ParameterCurve> curves,
                             InnovationLaw law, Regularity reg,
                             int grid = 1001) {
  return TvArchSpec(std::move(curves), law, reg, grid);
}

enum class MomentLevel { Clt, Bias };

struct MomentReport {
  std::vector<AssumptionCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AssumptionCheck& c) { return c.pass; });
  }
};

// Innovation moment conditions: the CLT level needs E|Z|^(4(1+delta))
// finite (delta fixed at 0.1); the bias level additionally needs
// (E Z^12)^(1/6) Q sum 1/l(j) <= 1 - nu.
inline MomentReport validate_moment_conditions(const TvArchSpec& spec,
                                               MomentLevel level) {
  MomentReport rep;
  const InnovationLaw& law = spec.innovation();
  const Regularity& reg = spec.regularity();
  if (level == MomentLevel::Clt) {
    AssumptionCheck c;
    const double delta = 0.1;
    c.lhs = law.abs_moment(4.0 * (1.0 + delta));
    c.rhs = std::numeric_limits<double>::infinity();
    c.inequality = "E|Z|^4.4 < inf";
    c.pass = std::isfinite(c.lhs);
    rep.checks.push_back(c);
    return rep;
  }
  AssumptionCheck c;
  const double m12 = law.even_moment(6);
  double s = 0.0;
  for (int j = 1; j <= spec.order(); ++j) s += 1.0 / reg.ell(j);
  c.lhs = std::pow(m12, 1.0 / 6.0) * reg.Q * s;
  c.rhs = 1.0 - reg.nu;
  c.inequality = "(E Z^12)^(1/6) * Q * sum 1/l(j) <= 1 - nu";
  c.pass = std::isfinite(c.lhs) && c.lhs <= c.rhs;
  rep.checks.push_back(c);
  return rep;
}

// The compact parameter polytope of the estimator:
//   { alpha : sum_{j>=1} alpha_j <= 1, rho1 <= alpha_0 <= rho2,
//     alpha_i >= rho1 for i >= 1 }.
struct OmegaSpace {
  int p = 0;
  double rho1 = 0.0;
  double rho2 = 0.0;

  OmegaSpace(int order, double lo, double hi) : p(order), rho1(lo), rho2(hi) {
    if (!(0.0 < rho1 && rho1 <= rho2))
      throw ConfigError("omega requires 0 < rho1 <= rho2");
    if (p < 0) throw ConfigError("omega order must be >= 0");
    if (p * rho1 > 1.0)
      throw InfeasibleOmega("p * rho1 > 1 leaves the polytope empty");
  }

  double kappa() const { return (rho2 + 1.0) / rho1; }

  bool contains(const Vector& a, double tol = 0.0) const {
    if (a.size() != p + 1) return false;
    if (a[0] < rho1 - tol || a[0] > rho2 + tol) return false;
    double s = 0.0;
    for (int j = 1; j <= p; ++j) {
      if (a[j] < rho1 - tol) return false;
      s += a[j];
    }
    return s <= 1.0 + tol;
  }

  bool strictly_contains(const Vector& a, double margin = 0.0) const {
    if (a.size() != p + 1) return false;
    if (!(a[0] > rho1 + margin && a[0] < rho2 - margin)) return false;
    double s = 0.0;
    for (int j = 1; j <= p; ++j) {
      if (!(a[j] > rho1 + margin)) return false;
      s += a[j];
    }
    return s < 1.0 - margin;
  }

  // A feasible interior-ish starting point.
  Vector center() const {
    Vector c(p + 1);
    c[0] = std::min(rho2, std::max(rho1, 0.5 * (rho1 + std::min(rho2, 1.0))));
    const double tail = std::min(0.5, 1.0) / std::max(1, p);
    for (int j = 1; j <= p; ++j) c[j] = std::max(rho1, std::min(tail, 1.0 / p));
    return c;
  }
};

// Euclidean projection onto Omega. The alpha_0 coordinate decouples (an
// interval clip); the tail projects onto the shifted simplex
// { y >= 0, sum y <= 1 - p rho1 } with the standard sort-and-threshold
// rule. A final cleanup pass pins the sum constraint so feasibility holds
// exactly in floating point, and feasible inputs are returned unchanged.
inline Vector omega_project(const Vector& alpha, const OmegaSpace& omega) {
  if (alpha.size() != omega.p + 1)
    throw ConfigError("omega_project: alpha has wrong length");
  if (omega.contains(alpha)) return alpha;

  Vector out = alpha;
  out[0] = std::clamp(alpha[0], omega.rho1, omega.rho2);
  const int p = omega.p;
  if (p == 0) return out;

  const double budget = 1.0 - p * omega.rho1;
  std::vector<double> y(p);
  for (int j = 0; j < p; ++j) y[j] = alpha[j + 1] - omega.rho1;

  double plus_sum = 0.0;
  for (double v : y) plus_sum += std::max(v, 0.0);
  if (plus_sum <= budget) {
    for (int j = 0; j < p; ++j) out[j + 1] = omega.rho1 + std::max(y[j], 0.0);
    return out;
  }

  // Project onto { y >= 0, sum y = budget }.
  std::vector<double> sorted(y);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  int k = 0;
  for (int j = 0; j < p; ++j) {
    cum += sorted[j];
    const double cand = (cum - budget) / (j + 1);
    if (sorted[j] - cand > 0.0) {
      theta = cand;
      k = j + 1;
    }
  }
  (void)k;
  double s = 0.0;
  for (int j = 0; j < p; ++j) {
    y[j] = std::max(y[j] - theta, 0.0);
    s += y[j];
  }
  // Rounding cleanup: pull any excess out of the largest component so the
  // sum constraint holds exactly.
  if (s > budget) {
    int arg = 0;
    for (int j = 1; j < p; ++j)
      if (y[j] > y[arg]) arg = j;
    y[arg] -= s - budget;
    if (y[arg] < 0.0) y[arg] = 0.0;
  }
  for (int j = 0; j < p; ++j) out[j + 1] = omega.rho1 + y[j];
  // The shifted sum p*rho1 + sum y and the direct sum of out can round
  // differently; shave the largest tail entry until the direct sum passes.
  for (int guard = 0; guard < 4; ++guard) {
    double direct = 0.0;
    for (int j = 1; j <= p; ++j) direct += out[j];
    if (direct <= 1.0) break;
    int arg = 1;
    for (int j = 2; j <= p; ++j)
      if (out[j] > out[arg]) arg = j;
    out[arg] = std::max(omega.rho1,
                        std::nextafter(out[arg] - (direct - 1.0), 0.0));
  }
  return out;
}

}  // namespace tvarch
