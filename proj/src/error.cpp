#include "p2pfl/error.hpp"

namespace p2pfl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotSquare: return "NotSquare";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNegativeWeight: return "NegativeWeight";
    case ErrorCode::kNotStochastic: return "NotStochastic";
    case ErrorCode::kNotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::kPeriodic: return "Periodic";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kEigenFailure: return "EigenFailure";
    case ErrorCode::kInvalidParameterSet: return "InvalidParameterSet";
    case ErrorCode::kInvalidModel: return "InvalidModel";
    case ErrorCode::kUnboundedKL: return "UnboundedKL";
    case ErrorCode::kNotGloballyLearnable: return "NotGloballyLearnable";
    case ErrorCode::kZeroLikelihoodAllTheta: return "ZeroLikelihoodAllTheta";
    case ErrorCode::kWeightMismatch: return "WeightMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularPrecision: return "SingularPrecision";
    case ErrorCode::kInvalidInputs: return "InvalidInputs";
    case ErrorCode::kInvalidScenario: return "InvalidScenario";
  }
  return "Unknown";
}

}  // namespace p2pfl
