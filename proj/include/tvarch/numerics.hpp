#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace tvarch {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Compensated (Kahan) scalar accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// Elementwise-compensated vector accumulator.
class KahanVector {
 public:
  explicit KahanVector(Eigen::Index n)
      : sum_(Vector::Zero(n)), c_(Vector::Zero(n)) {}
  void add(const Vector& x) {
    for (Eigen::Index i = 0; i < sum_.size(); ++i) {
      const double y = x[i] - c_[i];
      const double t = sum_[i] + y;
      c_[i] = (t - sum_[i]) - y;
      sum_[i] = t;
    }
  }
  const Vector& value() const { return sum_; }

 private:
  Vector sum_, c_;
};

class KahanMatrix {
 public:
  KahanMatrix(Eigen::Index r, Eigen::Index c)
      : sum_(Matrix::Zero(r, c)), c_(Matrix::Zero(r, c)) {}
  void add(const Matrix& x) {
    for (Eigen::Index j = 0; j < sum_.cols(); ++j)
      for (Eigen::Index i = 0; i < sum_.rows(); ++i) {
        const double y = x(i, j) - c_(i, j);
        const double t = sum_(i, j) + y;
        c_(i, j) = (t - sum_(i, j)) - y;
        sum_(i, j) = t;
      }
  }
  const Matrix& value() const { return sum_; }

 private:
  Matrix sum_, c_;
};

namespace detail {

inline double adaptive_simpson_step(const std::function<double(double)>& f,
                                    double a, double b, double fa, double fm,
                                    double fb, double whole, double tol,
                                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol,
                               depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol,
                               depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature on [a, b]. The integrand is split across an
// initial 64-interval panel so kinks at dyadic points are resolved exactly.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
  const int panels = 64;
  const double h = (b - a) / panels;
  KahanSum total;
  for (int i = 0; i < panels; ++i) {
    const double x0 = a + i * h;
    const double x1 = a + (i + 1) * h;
    const double m = 0.5 * (x0 + x1);
    const double f0 = f(x0);
    const double fm = f(m);
    const double f1 = f(x1);
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total.add(detail::adaptive_simpson_step(f, x0, x1, f0, fm, f1, whole,
                                            tol / panels, 24));
  }
  return total.value();
}

// Inverse standard normal CDF, Wichura's algorithm AS 241 (PPND16).
// Accurate to about 1e-16 relative for p in (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    return std::numeric_limits<double>::quiet_NaN();
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return (q < 0.0) ? -val : val;
}

// Standard normal CDF via erfc.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace tvarch
