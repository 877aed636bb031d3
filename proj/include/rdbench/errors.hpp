#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdbench {

enum class ErrorCode {
  // input / structural
  MissingFile,
  MalformedFile,
  NonNumericCell,
  NonFiniteValue,
  DuplicateTicker,
  DuplicateDate,
  InsufficientObservations,
  MissingTicker,
  InconsistentNesting,
  EmptyLevel,
  UnmappedStock,
  InvalidTree,
  InvalidArgument,
  // numerical / model
  DegenerateBenchmark,
  DegeneratePortfolioVariance,
  EmptyBlock,
  InvalidVariance,
  InvalidBeta,
  NegativeSpecificVariance,
  InadmissibleBetaDispersion,
  DegenerateModel,
  SingularCovariance,
  SingularFactorSystem,
  DegenerateRegression,
  DegenerateConstraints,
  LongOnlyViolation,
  NoConvergence,
};

std::string_view to_string(ErrorCode code);

/// Broad failure class; the CLI maps these onto process exit codes.
enum class ErrorCategory { Input, Model, Convergence };

ErrorCategory category(ErrorCode code);

/// Process exit status for a failure: 2 input, 3 model, 4 convergence.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rdbench
