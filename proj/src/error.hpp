#pragma once

#include <stdexcept>
#include <string>

namespace qsym {

// Numeric values match the process exit codes of the command-line tool.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Config = 2,
  NumericalAbort = 3,
  SignCollapse = 4,
  NoOverlap = 5,
  Io = 6,
  Convergence = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::InvalidArgument, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorCode::Config, what) {}
};

struct NumericalAbort : Error {
  explicit NumericalAbort(const std::string& what) : Error(ErrorCode::NumericalAbort, what) {}
};

/// The symmetry-weighted normalization <W_I> is statistically indistinguishable
/// from zero, so any ratio built on it is meaningless.
struct SignCollapse : Error {
  SignCollapse(const std::string& what, double mean, double stderr_)
      : Error(ErrorCode::SignCollapse, what), mean_weight(mean), stderr_weight(stderr_) {}
  double mean_weight;
  double stderr_weight;
};

struct NoOverlap : Error {
  explicit NoOverlap(const std::string& what) : Error(ErrorCode::NoOverlap, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCode::Io, what) {}
};

struct ConvergenceFailure : Error {
  ConvergenceFailure(const std::string& what, double previous, double last)
      : Error(ErrorCode::Convergence, what), previous_estimate(previous), last_estimate(last) {}
  double previous_estimate;
  double last_estimate;
};

}  // namespace qsym
