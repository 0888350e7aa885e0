#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rigidcal {

enum class ErrorCode {
  kInvalidArgument,
  kPreconditionViolated,
  kDegenerateInput,
  kNotAtRest,
  kCoverageGap,
  kNoOverlap,
  kIllConditioned,
  kInsufficientExcitation,
  kFrameMismatch,
  kNoConvergence,
  kTooSparse,
  kIo,
  kParse,
};

std::string_view to_string(ErrorCode code);

/// Single exception type carried through the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kNotAtRest: return "NotAtRest";
    case ErrorCode::kCoverageGap: return "CoverageGap";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kInsufficientExcitation: return "InsufficientExcitation";
    case ErrorCode::kFrameMismatch: return "FrameMismatch";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kTooSparse: return "TooSparse";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
  }
  return "Unknown";
}

}  // namespace rigidcal
