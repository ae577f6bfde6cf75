// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace bdp {

// Mirrors bdp_status in the C header; values must stay in sync.
enum class ErrorCode : int {
  invalid_argument = 1,
  config = 2,
  bound_violation = 3,
  not_applicable = 4,
  numerical = 5,
  truncation = 6,
  io = 7,
  internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::invalid_argument, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::config, what) {}
};

/// A rate rule produced a value outside its declared RateBounds (or a
/// negative / non-finite value). Every certificate consumes the bounds, so
/// this is always fatal.
class BoundViolation : public Error {
 public:
  explicit BoundViolation(const std::string& what)
      : Error(ErrorCode::bound_violation, what) {}
};

/// The rate bounds do not satisfy the hypothesis of a certificate. This is a
/// legitimate answer, not a computational failure.
class NotApplicable : public Error {
 public:
  explicit NotApplicable(const std::string& what)
      : Error(ErrorCode::not_applicable, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCode::numerical, what) {}
};

/// Probability mass on the truncation boundary exceeded the configured limit.
class TruncationError : public Error {
 public:
  explicit TruncationError(const std::string& what)
      : Error(ErrorCode::truncation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

}  // namespace bdp
