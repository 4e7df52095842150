#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maskbot {

enum class ErrorCode {
  kDegenerateAim,
  kBehindCamera,
  kNonPositiveDepth,
  kDegenerateConfiguration,
  kInsufficientPairs,
  kPointAtInfinity,
  kNonPositiveWidth,
  kNotConverged,
  kUnreachable,
  kInvalidDetection,
  kDegeneratePoints,
  kOutsideHull,
  kFaceBehindProjector,
  kParseError,
  kValidationError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Iterative solver gave up; carries the residual of the best iterate.
class NotConverged : public Error {
 public:
  NotConverged(double residual, const std::string& what)
      : Error(ErrorCode::kNotConverged, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + message),
        line_(line),
        message_(message) {}

  int line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  int line_;
  std::string message_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, std::string constraint)
      : Error(ErrorCode::kValidationError, field + " must be " + constraint),
        field_(std::move(field)),
        constraint_(std::move(constraint)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string field_;
  std::string constraint_;
};

}  // namespace maskbot
