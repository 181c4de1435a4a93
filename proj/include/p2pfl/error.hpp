#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace p2pfl {

enum class ErrorCode {
  kNotSquare,
  kNonFinite,
  kNegativeWeight,
  kNotStochastic,
  kNotStronglyConnected,
  kPeriodic,
  kNoConvergence,
  kEigenFailure,
  kInvalidParameterSet,
  kInvalidModel,
  kUnboundedKL,
  kNotGloballyLearnable,
  kZeroLikelihoodAllTheta,
  kWeightMismatch,
  kDimensionMismatch,
  kSingularPrecision,
  kInvalidInputs,
  kInvalidScenario,
};

std::string_view to_string(ErrorCode code);

// Every library failure carries a code so callers (the CLI in particular) can
// map error classes onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

  /// Same error class with `context` prepended to the message.
  Error with_context(const std::string& context) const {
    return Error(code_, context + ": " + message_);
  }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace p2pfl
