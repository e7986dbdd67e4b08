#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slmg {

enum class ErrorKind {
  NegativeEntry,
  NotNormalized,
  DimensionMismatch,
  IndexOutOfRange,
  UnsupportedDivergence,
  EmptyItem,
  DegenerateAgreement,
  MissingGold,
  InsufficientAnnotators,
  MissingCounts,
  PoolTooSmall,
  BadFractions,
  MalformedInput,
  InvalidArgument,
  EmptyData,
  UnknownSchedule,
  Io,
  InvariantViolation,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every library failure is reported through this type; `kind()` identifies
/// the failure class so callers (and the CLI exit-code mapping) can branch.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace slmg
