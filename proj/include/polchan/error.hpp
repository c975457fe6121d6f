#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polchan {

enum class ErrorKind {
  NonPhysical,
  NonPhysicalChannel,
  NotDephasing,
  NotCompletelyPositive,
  InvalidSpectrum,
  IncompleteKraus,
  OutOfRange,
  FitDiverged,
  TargetNotCP,
  InsufficientData,
  NonConvergence,
  InvalidArgument,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPhysical: return "NonPhysical";
    case ErrorKind::NonPhysicalChannel: return "NonPhysicalChannel";
    case ErrorKind::NotDephasing: return "NotDephasing";
    case ErrorKind::NotCompletelyPositive: return "NotCompletelyPositive";
    case ErrorKind::InvalidSpectrum: return "InvalidSpectrum";
    case ErrorKind::IncompleteKraus: return "IncompleteKraus";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::TargetNotCP: return "TargetNotCP";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// True for errors caused by bad user input rather than a numerical failure.
constexpr bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPhysical:
    case ErrorKind::NonPhysicalChannel:
    case ErrorKind::NotCompletelyPositive:
    case ErrorKind::InvalidSpectrum:
    case ErrorKind::IncompleteKraus:
    case ErrorKind::OutOfRange:
    case ErrorKind::TargetNotCP:
    case ErrorKind::InsufficientData:
    case ErrorKind::InvalidArgument:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace polchan
