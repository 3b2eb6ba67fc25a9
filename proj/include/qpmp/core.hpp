#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qpmp {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Failure categories raised by the library. The CLI maps them onto exit codes.
enum class ErrorCode {
  InvalidDimension,
  Hermiticity,
  Shape,
  NegativeRate,
  StateValidity,
  Propagation,
  Precondition,
  NotApplicable,
  DegenerateSpectrum,
  NumericalRank,
  Config,
  Parameter,
  Bracket,
  EnumerationSize,
  Format,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::Hermiticity: return "hermiticity";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::NegativeRate: return "negative-rate";
    case ErrorCode::StateValidity: return "state-validity";
    case ErrorCode::Propagation: return "propagation";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::NotApplicable: return "not-applicable";
    case ErrorCode::DegenerateSpectrum: return "degenerate-spectrum";
    case ErrorCode::NumericalRank: return "numerical-rank";
    case ErrorCode::Config: return "config";
    case ErrorCode::Parameter: return "parameter";
    case ErrorCode::Bracket: return "bracket";
    case ErrorCode::EnumerationSize: return "enumeration-size";
    case ErrorCode::Format: return "format";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace qpmp
