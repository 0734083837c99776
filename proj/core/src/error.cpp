#include "evdetect/error.hpp"

namespace evdetect {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonUniformTimestamps: return "NonUniformTimestamps";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::InvalidSample: return "InvalidSample";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TimestampMismatch: return "TimestampMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonBinaryLabels: return "NonBinaryLabels";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::InsufficientFeeders: return "InsufficientFeeders";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message,
                    std::optional<std::size_t> location) {
  std::string out(to_string(code));
  if (location) {
    out += "(" + std::to_string(*location) + ")";
  }
  if (!message.empty()) {
    out += ": " + message;
  }
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> location)
    : std::runtime_error(compose(code, message, location)),
      code_(code),
      location_(location) {}

}  // namespace evdetect
