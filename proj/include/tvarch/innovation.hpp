#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "tvarch/errors.hpp"
#include "tvarch/rng.hpp"

namespace tvarch {

enum class InnovationFamily { Gaussian, StudentT, TwoPoint };

// Innovation law of the multiplicative noise Z_t: mean 0, variance 1 by
// construction for every supported family.
//
//   gaussian    standard normal
//   student-t   t with df > 8 degrees of freedom, scaled by sqrt((df-2)/df)
//   two-point   +1 / -1 with probability 1/2 each
class InnovationLaw {
 public:
  static InnovationLaw gaussian() { return InnovationLaw(InnovationFamily::Gaussian, 0.0); }
  static InnovationLaw student_t(double df) {
    if (!(df > 8.0))
      throw ConfigError("student-t innovations require df > 8");
    return InnovationLaw(InnovationFamily::StudentT, df);
  }
  static InnovationLaw two_point() { return InnovationLaw(InnovationFamily::TwoPoint, 0.0); }

  static InnovationLaw parse(const std::string& name, double df = 0.0) {
    if (name == "gaussian") return gaussian();
    if (name == "student-t") return student_t(df);
    if (name == "two-point") return two_point();
    throw ConfigError("unknown innovation law: " + name);
  }

  InnovationFamily family() const { return family_; }
  double df() const { return df_; }

  std::string name() const {
    switch (family_) {
      case InnovationFamily::Gaussian: return "gaussian";
      case InnovationFamily::StudentT: return "student-t";
      case InnovationFamily::TwoPoint: return "two-point";
    }
    return "?";
  }

  // One standardized draw for time index t, consuming the per-index slot
  // sequence of `stream` from slot 0.
  double draw(const CounterStream& stream, long long t) const {
    switch (family_) {
      case InnovationFamily::Gaussian:
        return stream.gaussian(t, 0);
      case InnovationFamily::TwoPoint:
        return (stream.bits(t, 0) >> 63) ? 1.0 : -1.0;
      case InnovationFamily::StudentT: {
        const double z = stream.gaussian(t, 0);
        const double chi2 = 2.0 * gamma_variate(stream, t, 0.5 * df_, 1);
        const double tvar = z / std::sqrt(chi2 / df_);
        return tvar * std::sqrt((df_ - 2.0) / df_);
      }
    }
    return 0.0;
  }

  // E|Z|^r for real r >= 0, +infinity where the moment diverges.
  double abs_moment(double r) const {
    switch (family_) {
      case InnovationFamily::TwoPoint:
        return 1.0;
      case InnovationFamily::Gaussian:
        // E|Z|^r = 2^(r/2) Gamma((r+1)/2) / sqrt(pi)
        return std::exp(0.5 * r * std::numbers::ln2 +
                        std::lgamma(0.5 * (r + 1.0)) -
                        0.5 * std::log(std::numbers::pi));
      case InnovationFamily::StudentT: {
        if (r >= df_) return std::numeric_limits<double>::infinity();
        // E|T|^r = df^(r/2) Gamma((r+1)/2) Gamma((df-r)/2)
        //          / (sqrt(pi) Gamma(df/2)), then standardized.
        const double log_t = 0.5 * r * std::log(df_) +
                             std::lgamma(0.5 * (r + 1.0)) +
                             std::lgamma(0.5 * (df_ - r)) -
                             0.5 * std::log(std::numbers::pi) -
                             std::lgamma(0.5 * df_);
        return std::exp(log_t + 0.5 * r * std::log((df_ - 2.0) / df_));
      }
    }
    return 0.0;
  }

  // E Z^(2k) in closed form (infinite where it diverges).
  double even_moment(int k) const {
    if (k < 0) throw UnsupportedLaw("negative moment order");
    switch (family_) {
      case InnovationFamily::TwoPoint:
        return 1.0;
      case InnovationFamily::Gaussian: {
        double m = 1.0;  // (2k-1)!!
        for (int i = 1; i <= k; ++i) m *= 2.0 * i - 1.0;
        return m;
      }
      case InnovationFamily::StudentT: {
        if (2.0 * k >= df_) return std::numeric_limits<double>::infinity();
        // (2k-1)!! (df-2)^k / prod_{i=1..k} (df - 2i)
        double m = 1.0;
        for (int i = 1; i <= k; ++i)
          m *= (2.0 * i - 1.0) * (df_ - 2.0) / (df_ - 2.0 * i);
        return m;
      }
    }
    return 0.0;
  }

  // var(Z^2) = E Z^4 - 1; equals 2 for the Gaussian, 0 for two-point.
  double var_z2() const { return even_moment(2) - 1.0; }

 private:
  InnovationLaw(InnovationFamily f, double df) : family_(f), df_(df) {}
  InnovationFamily family_;
  double df_;
};

}  // namespace tvarch
