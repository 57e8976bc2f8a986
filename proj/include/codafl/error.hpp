#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace codafl {

enum class ErrorCode {
  DegenerateHistogram,
  DimensionMismatch,
  DegenerateWeights,
  InvalidDistribution,
  InvalidClusterCount,
  InvalidDistanceMatrix,
  InvalidAssignment,
  InvalidParameter,
  EmptyCluster,
  InfeasibleTarget,
  UnreachableAccuracy,
  CyclicDependency,
  UnknownTask,
  NoFeasibleCluster,
  InvalidAction,
  InstanceTooLarge,
  InvalidSchedule,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::InvalidClusterCount: return "InvalidClusterCount";
    case ErrorCode::InvalidDistanceMatrix: return "InvalidDistanceMatrix";
    case ErrorCode::InvalidAssignment: return "InvalidAssignment";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorCode::UnreachableAccuracy: return "UnreachableAccuracy";
    case ErrorCode::CyclicDependency: return "CyclicDependency";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::NoFeasibleCluster: return "NoFeasibleCluster";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::InvalidSchedule: return "InvalidSchedule";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// Every failure in the library surfaces as codafl::Error; code() tells callers
// (and the CLI's exit-code mapping) which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class CyclicDependencyError : public Error {
 public:
  CyclicDependencyError(std::vector<int> cycle, const std::string& message)
      : Error(ErrorCode::CyclicDependency, message), cycle_(std::move(cycle)) {}

  // Task ids along the cycle; the first id is repeated at the end.
  const std::vector<int>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<int> cycle_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace codafl
