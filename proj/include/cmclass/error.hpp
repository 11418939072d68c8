#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmclass {

enum class ErrorCode {
  InvalidArgument,
  InvalidGrid,
  GridMismatch,
  EmptySet,
  EmptyDomain,
  NotContained,
  NotConnected,
  OutsideDomain,
  NotTubeConnected,
  RepairFailed,
  NotCompactlyInside,
  NoConvergence,
  SupportViolation,
  InfeasibleInit,
  TraceCorrupt,
  FormatError,
  MarginViolation,
  UnknownKey,
  MissingKey,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::NotContained: return "NotContained";
    case ErrorCode::NotConnected: return "NotConnected";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::NotTubeConnected: return "NotTubeConnected";
    case ErrorCode::RepairFailed: return "RepairFailed";
    case ErrorCode::NotCompactlyInside: return "NotCompactlyInside";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::InfeasibleInit: return "InfeasibleInit";
    case ErrorCode::TraceCorrupt: return "TraceCorrupt";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::MarginViolation: return "MarginViolation";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MissingKey: return "MissingKey";
  }
  return "Unknown";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace cmclass
