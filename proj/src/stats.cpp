#include "rdbench/stats.hpp"

#include <cmath>

#include "rdbench/errors.hpp"

namespace rdbench {

CovarianceMatrix sample_covariance(const ReturnsPanel& panel) {
  const Eigen::Index periods = static_cast<Eigen::Index>(panel.num_periods());
  if (periods < 2) {
    throw Error(ErrorCode::InsufficientObservations, "covariance needs T >= 2");
  }
  const Eigen::MatrixXd& r = panel.values();
  const Eigen::MatrixXd centered = r.colwise() - r.rowwise().mean();
  Eigen::MatrixXd c = (centered * centered.transpose()) / static_cast<double>(periods - 1);
  // The product is symmetric up to rounding; make it exactly so.
  c = 0.5 * (c + c.transpose()).eval();
  return {std::move(c), panel.tickers()};
}

RegressionBetas serial_betas(const ReturnsPanel& panel, const Eigen::VectorXd& bench_returns) {
  const Eigen::Index periods = static_cast<Eigen::Index>(panel.num_periods());
  if (bench_returns.size() != periods) {
    throw Error(ErrorCode::InvalidArgument, "benchmark series has " + std::to_string(bench_returns.size()) +
                                                " periods, panel has " + std::to_string(periods));
  }
  const double f_mean = bench_returns.mean();
  const Eigen::VectorXd f_tilde = bench_returns.array() - f_mean;
  const double f_ss = f_tilde.squaredNorm();
  if (!(f_ss > 0.0)) {
    throw Error(ErrorCode::DegenerateBenchmark, "benchmark series has zero sample variance");
  }

  const Eigen::MatrixXd& r = panel.values();
  const Eigen::VectorXd r_mean = r.rowwise().mean();
  const Eigen::MatrixXd r_tilde = r.colwise() - r_mean;

  RegressionBetas out;
  out.beta = (r_tilde * f_tilde) / f_ss;
  out.alpha = r_mean - out.beta * f_mean;
  out.residuals = r_tilde - out.beta * f_tilde.transpose();
  return out;
}

PortfolioBetas betas_from_weights(const CovarianceMatrix& cov, const Eigen::VectorXd& weights) {
  if (weights.size() != cov.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight vector length does not match the covariance");
  }
  const Eigen::VectorXd cw = cov.values * weights;
  const double variance = weights.dot(cw);
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw Error(ErrorCode::DegeneratePortfolioVariance, "portfolio variance w'Cw is not positive");
  }
  return {cw / variance, variance};
}

Eigen::VectorXd volatilities(const CovarianceMatrix& cov) {
  return cov.values.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace rdbench
