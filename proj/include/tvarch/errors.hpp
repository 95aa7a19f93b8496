#pragma once

#include <stdexcept>
#include <string>

namespace tvarch {

// Base class for all domain failures raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A model specification violates one of the structural inequalities
// (coefficient lower bound, coefficient decay, contraction, Lipschitz).
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(const std::string& inequality, double u)
      : Error(inequality + " (at u = " + std::to_string(u) + ")"),
        inequality_(inequality),
        location_(u) {}
  const std::string& inequality() const { return inequality_; }
  double location() const { return location_; }

 private:
  std::string inequality_;
  double location_;
};

// Innovation moments requested in closed form for a law that has none.
class UnsupportedLaw : public Error {
 public:
  using Error::Error;
};

// Derivative of a curve family requested beyond its smoothness.
class NotDifferentiable : public Error {
 public:
  using Error::Error;
};

// The parameter polytope is empty (p * rho1 > 1).
class InfeasibleOmega : public Error {
 public:
  using Error::Error;
};

// Kernel support clipped by the sample boundary in strict mode.
class BoundaryViolation : public Error {
 public:
  using Error::Error;
};

// Plug-in information matrix too ill-conditioned for standard errors.
class SingularSigma : public Error {
 public:
  using Error::Error;
};

// Finite-difference stencil for the bias leaves (0, 1).
class StencilOutOfRange : public Error {
 public:
  using Error::Error;
};

// Config file could not be parsed or fails semantic validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Too many Monte Carlo replications failed (> 1%).
class ExperimentFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace tvarch
