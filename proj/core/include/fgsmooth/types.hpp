#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fgs {

template <class T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Floating-point format a solve executes in. Every arithmetic operation
/// inside a solver runs in the selected precision; inputs are rounded to
/// binary32 up front when Single is requested.
enum class Precision { Single, Double };

inline const char* precision_name(Precision p) {
  return p == Precision::Single ? "single" : "double";
}

enum class ErrorCode {
  RankDeficient,
  NotPositiveDefinite,
  SingularCovariance,
  DimensionMismatch,
  IllPosed,
  NonUnaryFactor,
  ScheduleMismatch,
  NonFiniteJacobian,
  SolverFailure,
};

inline const char* error_token(ErrorCode c) {
  switch (c) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IllPosed: return "IllPosed";
    case ErrorCode::NonUnaryFactor: return "NonUnaryFactor";
    case ErrorCode::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorCode::NonFiniteJacobian: return "NonFiniteJacobian";
    case ErrorCode::SolverFailure: return "SolverFailure";
  }
  return "SolverFailure";
}

/// Thrown by kernels and solvers. token() is the stable machine-parsable
/// name the CLI prints on stderr.
class SolveError : public std::runtime_error {
 public:
  SolveError(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_token(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const { return code_; }
  const char* token() const { return error_token(code_); }

 private:
  ErrorCode code_;
};

/// Problem-file syntax or consistency error (CLI exit code 1).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& detail)
      : std::runtime_error("ParseError: " + detail) {}
};

}  // namespace fgs
