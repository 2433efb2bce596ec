#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace binpick {

enum class ErrorCode {
  InvalidArgument,
  EmptyInstance,
  FragmentedInstance,
  DegeneratePointSet,
  TooFewItems,
  EmptyRegion,
  NonConvergence,
  PlacementFailure,
  DimensionMismatch,
  EmptyBin,
  WidthOutOfRange,
  NoItems,
  NothingToSingulate,
  NoAccessiblePoint,
  InvalidConfig,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as binpick::Error; the C API maps the code to a status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyInstance: return "EmptyInstance";
    case ErrorCode::FragmentedInstance: return "FragmentedInstance";
    case ErrorCode::DegeneratePointSet: return "DegeneratePointSet";
    case ErrorCode::TooFewItems: return "TooFewItems";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyBin: return "EmptyBin";
    case ErrorCode::WidthOutOfRange: return "WidthOutOfRange";
    case ErrorCode::NoItems: return "NoItems";
    case ErrorCode::NothingToSingulate: return "NothingToSingulate";
    case ErrorCode::NoAccessiblePoint: return "NoAccessiblePoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace binpick
