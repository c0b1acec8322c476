#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iotad {

enum class ErrorCode {
  kWrongFieldCount,
  kNonNumericField,
  kEmptyField,
  kRateOutOfRange,
  kUnknownLabel,
  kIo,
  kInvalidArgument,
  kUnseenCategory,
  kShapeMismatch,
  kKernelTooWide,
  kCalledBeforeForward,
  kDimensionMismatch,
  kKTooLarge,
  kEmptyTrainingSet,
  kEmptyModel,
  kDivergence,
  kLengthMismatch,
  kCodeOutOfRange,
  kEmptyMatrix,
  kUnknownConfigKey,
  kBundleFormat,
  kSchemaMismatch,
};

std::string_view to_string(ErrorCode code);

/// Base exception for the library. The code identifies the contract that was
/// violated; `column` and `line` are filled in by the parsers.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Error(ErrorCode code, const std::string& message, std::string column,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(message),
        code_(code),
        column_(std::move(column)),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::string>& column() const noexcept { return column_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::string> column_;
  std::optional<std::size_t> line_;
};

}  // namespace iotad
