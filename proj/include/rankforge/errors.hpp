#pragma once

#include <stdexcept>
#include <string>

namespace rankforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input: non-finite entries, dimension mismatch, bad parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The spectral gap needed to define a projector split vanished.
/// Carries the two tied singular values.
class DegenerateSpectrum : public Error {
 public:
  DegenerateSpectrum(double lambda_m, double lambda_m1, const std::string& what)
      : Error(what), lambda_m(lambda_m), lambda_m1(lambda_m1) {}
  double lambda_m;
  double lambda_m1;
};

/// The covariance matrix is rank deficient or too ill-conditioned to invert.
class SingularGamma : public Error {
 public:
  SingularGamma(double condition, const std::string& what)
      : Error(what), condition(condition) {}
  double condition;
};

/// Alternating minimization ran out of iterations while still decreasing.
class OptimizerDidNotConverge : public Error {
 public:
  OptimizerDidNotConverge(double gradient_norm, int iterations,
                          const std::string& what)
      : Error(what), gradient_norm(gradient_norm), iterations(iterations) {}
  double gradient_norm;
  int iterations;
};

/// Non-finite values appeared during an optimization.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

/// The constraint Jacobian lost rank at the evaluation point.
class NonsingularityViolated : public Error {
 public:
  using Error::Error;
};

/// More than the tolerated fraction of bootstrap replicates failed.
class BootstrapUnstable : public Error {
 public:
  BootstrapUnstable(long failed, long total, const std::string& what)
      : Error(what), failed(failed), total(total) {}
  long failed;
  long total;
};

/// Slicing could not partition the responses (too few distinct values).
class DegenerateSlicing : public Error {
 public:
  using Error::Error;
};

}  // namespace rankforge
