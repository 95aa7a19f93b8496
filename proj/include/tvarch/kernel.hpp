#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tvarch/errors.hpp"
#include "tvarch/numerics.hpp"

namespace tvarch {

enum class KernelFamily { Rectangular, Epanechnikov, Triangular };

inline const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Rectangular: return "rectangular";
    case KernelFamily::Epanechnikov: return "epanechnikov";
    case KernelFamily::Triangular: return "triangular";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(const std::string& s) {
  if (s == "rectangular") return KernelFamily::Rectangular;
  if (s == "epanechnikov") return KernelFamily::Epanechnikov;
  if (s == "triangular") return KernelFamily::Triangular;
  throw ConfigError("unknown kernel family: " + s);
}

// Kernel value on the fixed support [-1/2, 1/2]; zero outside. The closed
// family list keeps every member symmetric, of bounded variation, and with
// unit mass by construction.
inline double kernel_value(KernelFamily f, double x) {
  if (x < -0.5 || x > 0.5) return 0.0;
  switch (f) {
    case KernelFamily::Rectangular: return 1.0;
    case KernelFamily::Epanechnikov: return 1.5 * (1.0 - 4.0 * x * x);
    case KernelFamily::Triangular: return 2.0 * (1.0 - 2.0 * std::abs(x));
  }
  return 0.0;
}

struct KernelMoments {
  double w1 = 0.0;    // integral of W
  double xw = 0.0;    // integral of x W(x)
  double w2 = 0.0;    // integral of W(x)^2
  double w2nd = 0.0;  // integral of x^2 W(x)
};

inline KernelMoments kernel_moments(KernelFamily f) {
  KernelMoments m;
  m.w1 = integrate([f](double x) { return kernel_value(f, x); }, -0.5, 0.5);
  m.xw = integrate([f](double x) { return x * kernel_value(f, x); }, -0.5, 0.5);
  m.w2 = integrate([f](double x) { double w = kernel_value(f, x); return w * w; },
                   -0.5, 0.5);
  m.w2nd = integrate([f](double x) { return x * x * kernel_value(f, x); },
                     -0.5, 0.5);
  return m;
}

// Kernel family plus bandwidth, with the moments cached at construction.
struct KernelSpec {
  KernelFamily family = KernelFamily::Rectangular;
  double b = 0.1;
  KernelMoments moments;

  KernelSpec(KernelFamily f, double bandwidth)
      : family(f), b(bandwidth), moments(kernel_moments(f)) {
    if (!(b > 0.0 && b < 1.0))
      throw ConfigError("bandwidth must lie in (0, 1)");
  }

  double value(double x) const { return kernel_value(family, x); }
  KernelSpec with_bandwidth(double bandwidth) const {
    return KernelSpec(family, bandwidth);
  }
};

enum class BoundaryPolicy { Strict, Renormalize };

// Discrete weights (1/(bN)) W((t0 - k)/(bN)) over k = p+1..N, stored as a
// dense block over the kernel support.
struct KernelWeights {
  long k_first = 0;
  std::vector<double> w;
  double sum = 0.0;
  bool renormalized = false;
  long t0 = 0;
  long N = 0;
  double b = 0.0;

  long k_last() const { return k_first + static_cast<long>(w.size()) - 1; }
  double at(long k) const {
    const long i = k - k_first;
    return (i >= 0 && i < static_cast<long>(w.size())) ? w[i] : 0.0;
  }
};

inline KernelWeights kernel_weights(const KernelSpec& kernel, long t0, long N,
                                    int p,
                                    BoundaryPolicy policy = BoundaryPolicy::Strict) {
  const double bN = kernel.b * static_cast<double>(N);
  const double half = 0.5 * bN;
  long lo = static_cast<long>(std::ceil(static_cast<double>(t0) - half));
  long hi = static_cast<long>(std::floor(static_cast<double>(t0) + half));
  bool clipped = false;
  if (lo < p + 1) { lo = p + 1; clipped = true; }
  if (hi > N) { hi = N; clipped = true; }
  if (policy == BoundaryPolicy::Strict && clipped)
    throw BoundaryViolation(
        "kernel support [t0 - bN/2, t0 + bN/2] leaves the sample at t0 = " +
        std::to_string(t0) + " (bN = " + std::to_string(bN) + ")");
  if (hi < lo)
    throw BoundaryViolation("kernel support is empty at t0 = " +
                            std::to_string(t0));

  KernelWeights out;
  out.k_first = lo;
  out.t0 = t0;
  out.N = N;
  out.b = kernel.b;
  out.w.resize(hi - lo + 1);
  KahanSum s;
  for (long k = lo; k <= hi; ++k) {
    const double x = (static_cast<double>(t0) - k) / bN;
    const double wk = kernel.value(x) / bN;
    out.w[k - lo] = wk;
    s.add(wk);
  }
  out.sum = s.value();
  if (clipped) {
    for (double& wk : out.w) wk /= out.sum;
    out.sum = 1.0;
    out.renormalized = true;
  }
  return out;
}

}  // namespace tvarch
