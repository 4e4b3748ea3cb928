#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lri {

enum class Errc {
  CycleDetected,
  UnreachableComponent,
  DanglingEdge,
  InvalidField,
  UnknownComponent,
  UnknownEdge,
  MissingAmplification,
  ScheduleOutOfRange,
  IncompatibleTarget,
  NotBypassable,
  ZeroBaseline,
  ZeroObservability,
  EmptyCatalog,
  NoEligibleTargets,
  ArityMismatch,
  NoFeasibleSolution,
  InvalidShares,
  NonContiguousBatch,
  InsufficientHistory,
  NoSnapshotAvailable,
  ParseError,
  SchemaError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::UnreachableComponent: return "UnreachableComponent";
    case Errc::DanglingEdge: return "DanglingEdge";
    case Errc::InvalidField: return "InvalidField";
    case Errc::UnknownComponent: return "UnknownComponent";
    case Errc::UnknownEdge: return "UnknownEdge";
    case Errc::MissingAmplification: return "MissingAmplification";
    case Errc::ScheduleOutOfRange: return "ScheduleOutOfRange";
    case Errc::IncompatibleTarget: return "IncompatibleTarget";
    case Errc::NotBypassable: return "NotBypassable";
    case Errc::ZeroBaseline: return "ZeroBaseline";
    case Errc::ZeroObservability: return "ZeroObservability";
    case Errc::EmptyCatalog: return "EmptyCatalog";
    case Errc::NoEligibleTargets: return "NoEligibleTargets";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::NoFeasibleSolution: return "NoFeasibleSolution";
    case Errc::InvalidShares: return "InvalidShares";
    case Errc::NonContiguousBatch: return "NonContiguousBatch";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::NoSnapshotAvailable: return "NoSnapshotAvailable";
    case Errc::ParseError: return "ParseError";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `subject()` carries the offending
/// name (field path, component id, cycle listing) so callers can match on it
/// without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, const std::string& message = {})
      : std::runtime_error(format(code, subject, message)),
        code_(code),
        subject_(std::move(subject)) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }
  [[nodiscard]] const std::string& subject() const noexcept { return subject_; }

 private:
  static std::string format(Errc code, const std::string& subject, const std::string& message) {
    std::string out(to_string(code));
    out += "(" + subject + ")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  Errc code_;
  std::string subject_;
};

}  // namespace lri
