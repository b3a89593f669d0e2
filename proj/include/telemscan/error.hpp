#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace telemscan {

enum class ErrorCode {
  FileNotFound,
  IoError,
  MalformedHeader,
  RaggedRow,
  BadNumber,
  NonFiniteValue,
  NonBinaryCommand,
  NonMonotonicIndex,
  DuplicateIndex,
  InvalidRange,
  OverlappingLabels,
  UnknownClass,
  InsufficientHistory,
  DegenerateFit,
  WrongWindowLength,
  AlignmentGap,
  EmptyCandidate,
  DegenerateWindow,
  SampleTooSmall,
  DegenerateSample,
  CoverageMismatch,
  UnknownSequence,
  ConfigError,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::BadNumber: return "BadNumber";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonBinaryCommand: return "NonBinaryCommand";
    case ErrorCode::NonMonotonicIndex: return "NonMonotonicIndex";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::OverlappingLabels: return "OverlappingLabels";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::WrongWindowLength: return "WrongWindowLength";
    case ErrorCode::AlignmentGap: return "AlignmentGap";
    case ErrorCode::EmptyCandidate: return "EmptyCandidate";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::CoverageMismatch: return "CoverageMismatch";
    case ErrorCode::UnknownSequence: return "UnknownSequence";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Exception carrying a stable error code. The message is prefixed with the
/// code name so log lines stay greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace telemscan
