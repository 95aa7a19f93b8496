#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tvarch/errors.hpp"

namespace tvarch {

enum class CurveFamily { Constant, Polynomial, Sinusoid, PiecewiseLinear };

inline const char* to_string(CurveFamily f) {
  switch (f) {
    case CurveFamily::Constant: return "constant";
    case CurveFamily::Polynomial: return "polynomial";
    case CurveFamily::Sinusoid: return "sinusoid";
    case CurveFamily::PiecewiseLinear: return "piecewise-linear";
  }
  return "?";
}

// One time-varying coefficient a_j(.) from a closed set of families, so a
// curve is fully described by its coefficient list and round-trips through
// config files.
//
//   constant          coeffs = {c}
//   polynomial        coeffs = {c0, .., ck}, k <= 6, value = sum ci u^i
//   sinusoid          coeffs = {a, b, c, k}, value = a + b cos(2 pi k u)
//                                                    + c sin(2 pi k u)
//   piecewise-linear  coeffs = {u0, v0, u1, v1, ...}, knots strictly
//                     increasing, constant extension outside the knot range
class ParameterCurve {
 public:
  ParameterCurve(CurveFamily family, std::vector<double> coeffs)
      : family_(family), coeffs_(std::move(coeffs)) {
    validate();
  }

  static ParameterCurve constant(double c) {
    return ParameterCurve(CurveFamily::Constant, {c});
  }
  static ParameterCurve polynomial(std::vector<double> c) {
    return ParameterCurve(CurveFamily::Polynomial, std::move(c));
  }
  static ParameterCurve sinusoid(double a, double b, double c, int k = 1) {
    return ParameterCurve(CurveFamily::Sinusoid,
                          {a, b, c, static_cast<double>(k)});
  }
  static ParameterCurve linear(double at0, double at1) {
    return ParameterCurve(CurveFamily::PiecewiseLinear, {0.0, at0, 1.0, at1});
  }

  CurveFamily family() const { return family_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  // Highest derivative order available everywhere on the real line.
  int differentiable_to() const {
    return family_ == CurveFamily::PiecewiseLinear ? 1 : 3;
  }

  double value(double u) const { return eval(u, 0); }
  double d1(double u) const { return eval(u, 1); }
  double d2(double u) const { return eval(u, 2); }
  double d3(double u) const { return eval(u, 3); }

  double eval(double u, int order) const {
    if (order < 0 || order > 3)
      throw NotDifferentiable("derivative order must be 0..3");
    if (order > differentiable_to())
      throw NotDifferentiable(std::string(to_string(family_)) +
                              " curve has no derivative of order " +
                              std::to_string(order));
    switch (family_) {
      case CurveFamily::Constant:
        return order == 0 ? coeffs_[0] : 0.0;
      case CurveFamily::Polynomial:
        return eval_poly(u, order);
      case CurveFamily::Sinusoid:
        return eval_sinusoid(u, order);
      case CurveFamily::PiecewiseLinear:
        return eval_pwl(u, order);
    }
    return 0.0;
  }

  // Minimum of the curve over [0, 1]: exact for constant, sinusoid with a
  // full period in range, and piecewise-linear (knot values); a dense-grid
  // scan otherwise. Used by the assumption checks.
  double min_on_unit_interval(int grid = 1001) const {
    if (family_ == CurveFamily::Constant) return coeffs_[0];
    if (family_ == CurveFamily::PiecewiseLinear) {
      double m = std::min(value(0.0), value(1.0));
      for (std::size_t i = 0; i + 1 < coeffs_.size(); i += 2) {
        const double u = coeffs_[i];
        if (u >= 0.0 && u <= 1.0) m = std::min(m, coeffs_[i + 1]);
      }
      return m;
    }
    double m = value(0.0);
    for (int i = 1; i < grid; ++i)
      m = std::min(m, value(static_cast<double>(i) / (grid - 1)));
    return m;
  }

  double max_on_unit_interval(int grid = 1001) const {
    if (family_ == CurveFamily::Constant) return coeffs_[0];
    if (family_ == CurveFamily::PiecewiseLinear) {
      double m = std::max(value(0.0), value(1.0));
      for (std::size_t i = 0; i + 1 < coeffs_.size(); i += 2) {
        const double u = coeffs_[i];
        if (u >= 0.0 && u <= 1.0) m = std::max(m, coeffs_[i + 1]);
      }
      return m;
    }
    double m = value(0.0);
    for (int i = 1; i < grid; ++i)
      m = std::max(m, value(static_cast<double>(i) / (grid - 1)));
    return m;
  }

 private:
  void validate() const {
    switch (family_) {
      case CurveFamily::Constant:
        if (coeffs_.size() != 1)
          throw ConfigError("constant curve takes exactly one coefficient");
        break;
      case CurveFamily::Polynomial:
        if (coeffs_.empty() || coeffs_.size() > 7)
          throw ConfigError("polynomial curve degree must be 0..6");
        break;
      case CurveFamily::Sinusoid:
        if (coeffs_.size() != 4)
          throw ConfigError("sinusoid curve takes coefficients {a, b, c, k}");
        if (coeffs_[3] < 1.0 || coeffs_[3] != std::floor(coeffs_[3]))
          throw ConfigError("sinusoid frequency k must be a positive integer");
        break;
      case CurveFamily::PiecewiseLinear: {
        if (coeffs_.size() < 4 || coeffs_.size() % 2 != 0)
          throw ConfigError(
              "piecewise-linear curve takes knot/value pairs (>= 2 knots)");
        for (std::size_t i = 2; i + 1 < coeffs_.size(); i += 2)
          if (!(coeffs_[i] > coeffs_[i - 2]))
            throw ConfigError("piecewise-linear knots must be increasing");
        break;
      }
    }
  }

  double eval_poly(double u, int order) const {
    // Horner on the `order`-times differentiated coefficients.
    double acc = 0.0;
    const int n = static_cast<int>(coeffs_.size());
    for (int i = n - 1; i >= order; --i) {
      double fall = 1.0;
      for (int s = 0; s < order; ++s) fall *= static_cast<double>(i - s);
      acc = acc * u + fall * coeffs_[i];
    }
    return acc;
  }

  double eval_sinusoid(double u, int order) const {
    const double w = 2.0 * std::numbers::pi * coeffs_[3];
    const double b = coeffs_[1], c = coeffs_[2];
    const double cw = std::cos(w * u), sw = std::sin(w * u);
    switch (order) {
      case 0: return coeffs_[0] + b * cw + c * sw;
      case 1: return w * (-b * sw + c * cw);
      case 2: return w * w * (-b * cw - c * sw);
      default: return w * w * w * (b * sw - c * cw);
    }
  }

  double eval_pwl(double u, int order) const {
    const std::size_t m = coeffs_.size() / 2;
    auto knot = [&](std::size_t i) { return coeffs_[2 * i]; };
    auto val = [&](std::size_t i) { return coeffs_[2 * i + 1]; };
    if (u <= knot(0)) return order == 0 ? val(0) : 0.0;
    if (u >= knot(m - 1)) return order == 0 ? val(m - 1) : 0.0;
    std::size_t seg = 0;
    while (seg + 2 < m && u >= knot(seg + 1)) ++seg;
    const double slope =
        (val(seg + 1) - val(seg)) / (knot(seg + 1) - knot(seg));
    if (order == 1) return slope;  // right-derivative at knots
    return val(seg) + slope * (u - knot(seg));
  }

  CurveFamily family_;
  std::vector<double> coeffs_;
};

}  // namespace tvarch
