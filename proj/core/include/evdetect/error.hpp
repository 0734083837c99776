#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evdetect {

enum class ErrorCode {
  // series
  EmptySeries,
  NegativeValue,
  NonFiniteValue,
  MalformedRow,
  NonUniformTimestamps,
  SchemaMismatch,
  IoFailure,
  // features
  IndexOutOfRange,
  EmptyWindow,
  InvalidSample,
  InvalidConfig,
  // synth
  InvalidParams,
  LengthMismatch,
  TimestampMismatch,
  // models
  ShapeMismatch,
  NonBinaryLabels,
  UntrainedModel,
  UnsupportedVersion,
  CorruptModel,
  // evaluation
  InsufficientFeeders,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. `location()` carries the offending sample index
/// or 1-based file line when the error is tied to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> location = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> location_;
};

}  // namespace evdetect
