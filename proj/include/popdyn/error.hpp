#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace popdyn {

enum class ErrorCode {
  NonSquare,
  NegativeEntry,
  ZeroRow,
  EmptyTargets,
  NoConvergence,
  NotUnique,
  Overflow,
  DimensionMismatch,
  ZeroTotalAttention,
  IndexOutOfRange,
  InvalidArgument,
  HypothesisViolated,
  StabilityConditionUnmet,
  SingularSystem,
  DomainError,
  TooShort,
  AmbiguousRegime,
  UnknownProtocol,
  VerificationFailed,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Error raised by every library operation. `at()` carries the time step or
/// power index at which the failure happened when that is meaningful.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> at = std::nullopt)
      : std::runtime_error(message), code_(code), at_(at) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> at() const noexcept { return at_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> at_;
};

}  // namespace popdyn
