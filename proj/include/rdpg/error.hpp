#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdpg {

enum class ErrorKind {
  InvalidArgument,
  DomainError,
  InvalidDistribution,
  NotPSD,
  RankDeficient,
  NotSymmetric,
  TooLarge,
  NoConvergence,
  DegenerateStart,
  RankDeficientCross,
  DegenerateSpectrum,
  NonPositiveVariance,
  SingularDelta,
  SingularSigma,
  EmptyBlock,
  TooFewReplicates,
  BadDimension,
  DegeneratePoints,
  TooManyClasses,
  Config,
  Io,
  Internal,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateStart: return "DegenerateStart";
    case ErrorKind::RankDeficientCross: return "RankDeficientCross";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorKind::SingularDelta: return "SingularDelta";
    case ErrorKind::SingularSigma: return "SingularSigma";
    case ErrorKind::EmptyBlock: return "EmptyBlock";
    case ErrorKind::TooFewReplicates: return "TooFewReplicates";
    case ErrorKind::BadDimension: return "BadDimension";
    case ErrorKind::DegeneratePoints: return "DegeneratePoints";
    case ErrorKind::TooManyClasses: return "TooManyClasses";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures of the numerics rather than of the inputs.
  bool is_numerical() const noexcept {
    switch (kind_) {
      case ErrorKind::NoConvergence:
      case ErrorKind::DegenerateStart:
      case ErrorKind::RankDeficientCross:
      case ErrorKind::DegenerateSpectrum:
      case ErrorKind::NonPositiveVariance:
      case ErrorKind::SingularDelta:
      case ErrorKind::SingularSigma:
      case ErrorKind::DegeneratePoints:
      case ErrorKind::NotPSD:
      case ErrorKind::Internal:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, std::vector<double> values,
                     std::vector<double> residuals)
      : Error(ErrorKind::NoConvergence, what),
        values_(std::move(values)),
        residuals_(std::move(residuals)) {}

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> values_;
  std::vector<double> residuals_;
};

}  // namespace rdpg
