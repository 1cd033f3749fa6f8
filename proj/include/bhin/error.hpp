#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bhin {

enum class ErrorKind {
  kUnknownNodeType,
  kEmptyGraph,
  kMalformedRecord,
  kIsolatedType,
  kDeadEnd,
  kNonFiniteLoss,
  kDegenerateRatio,
  kShapeMismatch,
  kCorruptCheckpoint,
  kVersionMismatch,
  kInfeasibleSplit,
  kInsufficientCandidates,
  kSingleClass,
  kMissingHistory,
  kInfeasibleSpec,
  kInvalidArgument,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this one exception type; callers
// that need to branch on the failure inspect kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}
  // Same failure with extra context appended to the message.
  Error(const Error& base, std::string_view suffix)
      : std::runtime_error(std::string(base.what()) + std::string(suffix)), kind_(base.kind()) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bhin
