#include "bhin/error.hpp"

#include <cmath>
#include <numbers>

#include "bhin/rng.hpp"

namespace bhin {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnknownNodeType: return "UnknownNodeType";
    case ErrorKind::kEmptyGraph: return "EmptyGraph";
    case ErrorKind::kMalformedRecord: return "MalformedRecord";
    case ErrorKind::kIsolatedType: return "IsolatedType";
    case ErrorKind::kDeadEnd: return "DeadEnd";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kDegenerateRatio: return "DegenerateRatio";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::kVersionMismatch: return "VersionMismatch";
    case ErrorKind::kInfeasibleSplit: return "InfeasibleSplit";
    case ErrorKind::kInsufficientCandidates: return "InsufficientCandidates";
    case ErrorKind::kSingleClass: return "SingleClass";
    case ErrorKind::kMissingHistory: return "MissingHistory";
    case ErrorKind::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "IoError";
  }
  return "Error";
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace bhin
