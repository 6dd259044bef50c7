#pragma once

#include <stdexcept>
#include <string>

namespace bmi {

// Error categories double as CLI exit codes.
enum class ErrorCategory : int {
  Usage = 2,
  Io = 3,
  Format = 4,
  Validation = 5,
  Calibration = 6,
  Network = 7,
  Protocol = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorCategory::Format, what) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

// Recording-specific format failures, kept distinct so callers can tell them apart.
struct MalformedHeaderError : FormatError {
  using FormatError::FormatError;
};

struct ChannelCountError : FormatError {
  using FormatError::FormatError;
};

struct NonMonotonicTimestampError : FormatError {
  NonMonotonicTimestampError(const std::string& what, std::size_t row)
      : FormatError(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

struct UnknownGestureError : ValidationError {
  using ValidationError::ValidationError;
};

struct CalibrationError : Error {
  explicit CalibrationError(const std::string& what) : Error(ErrorCategory::Calibration, what) {}
};

struct WindowTooShortError : CalibrationError {
  using CalibrationError::CalibrationError;
};

struct DegenerateCalibrationError : CalibrationError {
  using CalibrationError::CalibrationError;
};

struct UnsupportedInputError : ValidationError {
  using ValidationError::ValidationError;
};

struct NetworkError : Error {
  explicit NetworkError(const std::string& what) : Error(ErrorCategory::Network, what) {}
};

struct ProtocolError : Error {
  explicit ProtocolError(const std::string& what) : Error(ErrorCategory::Protocol, what) {}
};

}  // namespace bmi
