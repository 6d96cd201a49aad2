// errors.hpp - error kinds raised by the relaxation library.
//
// Every failure is an `relax::Error` carrying a machine-readable kind, so the
// CLI can print a single parseable line and pick an exit code.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relax {

enum class ErrorKind {
  // chain construction
  RowSumError,
  NotReversible,
  Reducible,
  DegeneratePi,
  EigensolveFailure,
  DimensionMismatch,
  InvalidSize,
  InvalidLaziness,
  NonRealizable,
  // trajectories
  ZeroProjection,
  DeadTrajectory,
  InvalidProfile,
  // rigidity / thermodynamics
  NoSlowMode,
  InvalidArguments,
  TooShort,
  PreconditionUnmet,
  NotADistribution,
  Degenerate,
  NonConvergent,
  DeadMode,
  // power iteration
  OutOfRange,
  InvalidRho,
  StreamEnded,
  TauCollapse,
  // acceleration
  InvalidInterval,
  SlowModeSuppressed,
  // first passage
  InvalidState,
  BadStart,
  // cli / io
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RowSumError: return "RowSumError";
    case ErrorKind::NotReversible: return "NotReversible";
    case ErrorKind::Reducible: return "Reducible";
    case ErrorKind::DegeneratePi: return "DegeneratePi";
    case ErrorKind::EigensolveFailure: return "EigensolveFailure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidSize: return "InvalidSize";
    case ErrorKind::InvalidLaziness: return "InvalidLaziness";
    case ErrorKind::NonRealizable: return "NonRealizable";
    case ErrorKind::ZeroProjection: return "ZeroProjection";
    case ErrorKind::DeadTrajectory: return "DeadTrajectory";
    case ErrorKind::InvalidProfile: return "InvalidProfile";
    case ErrorKind::NoSlowMode: return "NoSlowMode";
    case ErrorKind::InvalidArguments: return "InvalidArguments";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::PreconditionUnmet: return "PreconditionUnmet";
    case ErrorKind::NotADistribution: return "NotADistribution";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::DeadMode: return "DeadMode";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::InvalidRho: return "InvalidRho";
    case ErrorKind::StreamEnded: return "StreamEnded";
    case ErrorKind::TauCollapse: return "TauCollapse";
    case ErrorKind::InvalidInterval: return "InvalidInterval";
    case ErrorKind::SlowModeSuppressed: return "SlowModeSuppressed";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::BadStart: return "BadStart";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace relax
