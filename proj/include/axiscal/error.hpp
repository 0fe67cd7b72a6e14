#ifndef AXISCAL_ERROR_HPP
#define AXISCAL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace axiscal {

enum class ErrorCode {
  ImageTooSmall,
  NoForeground,
  ShapeMismatch,
  IndexOutOfRange,
  EmptyStack,
  DomainError,
  DegenerateSlope,
  NoCrossing,
  TooFewPoints,
  Degenerate,
  EmptyDataset,
  MissingWeights,
  InvalidArgument,
  IoError,
  FormatError,
};

constexpr const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::NoForeground: return "NoForeground";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateSlope: return "DegenerateSlope";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MissingWeights: return "MissingWeights";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

/// Exception type thrown by every axiscal operation. The code is stable and
/// machine readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace axiscal

#endif  // AXISCAL_ERROR_HPP
