#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hats {

enum class ErrorCode {
  NonMonotonicTimestamps,
  OutOfBoundsPixel,
  InvalidPolarity,
  NegativeTimestamp,
  InvalidGeometry,
  InvalidArgument,
  MalformedHeader,
  TruncatedRecord,
  Io,
  SingleClassInput,
  DimensionMismatch,
  EmptyInput,
  LengthMismatch,
  EmptyDataset,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::OutOfBoundsPixel: return "OutOfBoundsPixel";
    case ErrorCode::InvalidPolarity: return "InvalidPolarity";
    case ErrorCode::NegativeTimestamp: return "NegativeTimestamp";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::Io: return "Io";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
  }
  return "Unknown";
}

/// Every failure raised by the library. `index()` carries the offending
/// record position when the failure is tied to one event or line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }
  /// what() without the leading code name.
  std::string_view message() const noexcept { return std::string_view(what()).substr(to_string(code_).size() + 2); }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace hats
