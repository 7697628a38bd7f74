#pragma once
// Error taxonomy for the library. Each CLI exit code maps onto one family:
//   ValidationError -> exit 2 (bad problem data, unsupported configuration)
//   NumericalError  -> exit 3 (solver/quadrature failures at runtime)
// Anything else (usage, unknown flags) is handled by the CLI layer itself.

#include <complex>
#include <stdexcept>
#include <string>

namespace utpde {

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg)
      : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// The spectral-system entries carry negative powers of the spectral
// parameter, so evaluation exactly at zero is a pole of the formulas.
class SingularPointError : public NumericalError {
 public:
  SingularPointError()
      : NumericalError("spectral functions are singular at lambda = 0") {}
};

// The characteristic determinant vanished (or nearly so) at the requested
// spectral point; carries the offending point for diagnostics.
class NearSingularError : public NumericalError {
 public:
  explicit NearSingularError(std::complex<double> lambda, double absdet)
      : NumericalError("characteristic determinant nearly singular at lambda=(" +
                       std::to_string(lambda.real()) + "," +
                       std::to_string(lambda.imag()) + "), |det|=" +
                       std::to_string(absdet)),
        lambda_(lambda),
        absdet_(absdet) {}
  std::complex<double> lambda() const { return lambda_; }
  double absdet() const { return absdet_; }

 private:
  std::complex<double> lambda_;
  double absdet_;
};

}  // namespace utpde
