#include "srir/error.hpp"

namespace srir {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kUnsupportedGeometry: return "unsupported-geometry";
    case ErrorCode::kReference: return "reference";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kDegreeZero: return "degree-zero";
    case ErrorCode::kUnsupportedScene: return "unsupported-scene";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kInsufficientDecay: return "insufficient-decay";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kInfeasibleScene: return "infeasible-scene";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace srir
