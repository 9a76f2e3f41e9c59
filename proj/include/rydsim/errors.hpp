#pragma once

#include <stdexcept>
#include <string>

namespace rydsim {

/// Failure classes. Values are stable: they are the C API status codes and
/// the CLI exit codes.
enum class ErrorCode : int {
  kOk = 0,
  kConfig = 2,
  kSolver = 3,
  kIo = 4,
  kDomain = 5,
  kInternal = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCode::kDomain, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

/// Numerical failures. `kind` distinguishes the solver failure modes.
class SolverError : public Error {
 public:
  enum class Kind {
    kSingular,
    kNotTridiagonal,
    kNoConvergence,
    kStepFailure,
    kNotBracketed,
    kIllConditioned,
  };

  SolverError(Kind kind, const std::string& what) : Error(ErrorCode::kSolver, what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace rydsim
