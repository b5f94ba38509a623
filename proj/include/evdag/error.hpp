#pragma once

#include <stdexcept>
#include <string>

namespace evdag {

// Error codes used for the single-line machine-parseable CLI output
// ("error: <code> <message>").
enum class ErrorCode {
  Config,     // bad option, bad config key, inconsistent dimensions
  Parse,      // malformed input line
  Integrity,  // span/text mismatch, inconsistent annotation
  Structure,  // dangling reference, invalid graph or event structure
  Format,     // bad magic bytes, truncated model file
  Version,    // model file version not supported
  Io,         // unreadable/unwritable path
  Internal,   // broken invariant (a bug, not user input)
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Integrity: return "E_INTEGRITY";
    case ErrorCode::Structure: return "E_STRUCTURE";
    case ErrorCode::Format: return "E_FORMAT";
    case ErrorCode::Version: return "E_VERSION";
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Internal: return "E_INTERNAL";
  }
  return "E_INTERNAL";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }
  std::string line() const {
    return std::string("error: ") + error_code_name(code_) + " " + what();
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

} // namespace evdag
