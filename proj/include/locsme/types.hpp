#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace locsme {

using cx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Materializes a matrix whose lower triangle holds Hermitian data into a
/// dense exactly-Hermitian matrix. Eigen's blocked rank updates can leave
/// sub-ulp imaginary dust on the diagonal; a Hermitian diagonal is real.
inline CMatrix hermitian_from_lower(const CMatrix& lower) {
  CMatrix h = lower.selfadjointView<Eigen::Lower>();
  h.diagonal() = h.diagonal().real().cast<cx>();
  return h;
}

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument or parameter (dimension mismatch, out-of-range value).
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

/// Operation applied to a state that cannot support it (e.g. empty accumulator).
class StateError : public Error {
 public:
  explicit StateError(const std::string& msg) : Error(msg) {}
};

/// Hermitian linear solve failed (singular / indefinite beyond tolerance).
class SolverError : public Error {
 public:
  explicit SolverError(const std::string& msg) : Error(msg) {}
};

/// Numerically degenerate estimate (zero projection, zero-norm matrix).
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& msg) : Error(msg) {}
};

/// SINR evaluation produced a non-finite value.
class EvalError : public Error {
 public:
  explicit EvalError(const std::string& msg) : Error(msg) {}
};

/// Configuration parse or validation failure.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace locsme
