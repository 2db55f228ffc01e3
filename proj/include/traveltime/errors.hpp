#pragma once

#include <stdexcept>
#include <string>

namespace traveltime {

enum class Errc {
  DuplicateEdge,
  DanglingSuccessor,
  NonPositiveLength,
  Disconnected,
  NoSuccessor,
  NonConvergent,
  TooFewTrips,
  InvalidLevel,
  EmptyTraining,
  NoEligibleTrips,
  NonPositiveVariance,
  DegenerateVariance,
  RankDeficient,
  IdMismatch,
  EmptyInput,
  NonAdjacentJump,
  BadFormat,
  BadConfig,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DuplicateEdge: return "DuplicateEdge";
    case Errc::DanglingSuccessor: return "DanglingSuccessor";
    case Errc::NonPositiveLength: return "NonPositiveLength";
    case Errc::Disconnected: return "Disconnected";
    case Errc::NoSuccessor: return "NoSuccessor";
    case Errc::NonConvergent: return "NonConvergent";
    case Errc::TooFewTrips: return "TooFewTrips";
    case Errc::InvalidLevel: return "InvalidLevel";
    case Errc::EmptyTraining: return "EmptyTraining";
    case Errc::NoEligibleTrips: return "NoEligibleTrips";
    case Errc::NonPositiveVariance: return "NonPositiveVariance";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::IdMismatch: return "IdMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NonAdjacentJump: return "NonAdjacentJump";
    case Errc::BadFormat: return "BadFormat";
    case Errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace traveltime
