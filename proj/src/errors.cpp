#include "rdbench/errors.hpp"

namespace rdbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateTicker: return "DuplicateTicker";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::InsufficientObservations: return "InsufficientObservations";
    case ErrorCode::MissingTicker: return "MissingTicker";
    case ErrorCode::InconsistentNesting: return "InconsistentNesting";
    case ErrorCode::EmptyLevel: return "EmptyLevel";
    case ErrorCode::UnmappedStock: return "UnmappedStock";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateBenchmark: return "DegenerateBenchmark";
    case ErrorCode::DegeneratePortfolioVariance: return "DegeneratePortfolioVariance";
    case ErrorCode::EmptyBlock: return "EmptyBlock";
    case ErrorCode::InvalidVariance: return "InvalidVariance";
    case ErrorCode::InvalidBeta: return "InvalidBeta";
    case ErrorCode::NegativeSpecificVariance: return "NegativeSpecificVariance";
    case ErrorCode::InadmissibleBetaDispersion: return "InadmissibleBetaDispersion";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingularFactorSystem: return "SingularFactorSystem";
    case ErrorCode::DegenerateRegression: return "DegenerateRegression";
    case ErrorCode::DegenerateConstraints: return "DegenerateConstraints";
    case ErrorCode::LongOnlyViolation: return "LongOnlyViolation";
    case ErrorCode::NoConvergence: return "NoConvergence";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile:
    case ErrorCode::MalformedFile:
    case ErrorCode::NonNumericCell:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::DuplicateTicker:
    case ErrorCode::DuplicateDate:
    case ErrorCode::InsufficientObservations:
    case ErrorCode::MissingTicker:
    case ErrorCode::InconsistentNesting:
    case ErrorCode::EmptyLevel:
    case ErrorCode::UnmappedStock:
    case ErrorCode::InvalidTree:
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Input;
    case ErrorCode::NoConvergence:
      return ErrorCategory::Convergence;
    default:
      return ErrorCategory::Model;
  }
}

int exit_code(ErrorCode code) {
  switch (category(code)) {
    case ErrorCategory::Input: return 2;
    case ErrorCategory::Model: return 3;
    case ErrorCategory::Convergence: return 4;
  }
  return 1;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace rdbench
