#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdbench/data_model.hpp"

namespace rdbench {

/// Dense symmetric N x N covariance aligned with the panel tickers.
struct CovarianceMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> tickers;

  Eigen::Index size() const { return values.rows(); }
};

/// Result of regressing every row of a panel on one benchmark series with an
/// intercept: R_is = alpha_i + beta_i F_s + eps_is.
struct RegressionBetas {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::MatrixXd residuals;  // N x T
};

struct PortfolioBetas {
  Eigen::VectorXd beta;
  double sigma_f2 = 0.0;  // w' C w
};

/// Row-demeaned sample covariance with the unbiased (T - 1) denominator.
CovarianceMatrix sample_covariance(const ReturnsPanel& panel);

/// Serial regression betas of every stock against `bench_returns` (length T).
RegressionBetas serial_betas(const ReturnsPanel& panel, const Eigen::VectorXd& bench_returns);

/// Betas induced by holding `weights`: (C w) / (w' C w).
PortfolioBetas betas_from_weights(const CovarianceMatrix& cov, const Eigen::VectorXd& weights);

/// Per-stock sample volatilities sqrt(C_ii).
Eigen::VectorXd volatilities(const CovarianceMatrix& cov);

}  // namespace rdbench
