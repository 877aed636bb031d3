#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rdbench/data_model.hpp"
#include "rdbench/risk_model.hpp"
#include "rdbench/stats.hpp"

namespace rdbench {

/// Long-only benchmark weights, normalized so that sum_i w_i beta_i = 1.
struct BenchmarkResult {
  Eigen::VectorXd weights;
  double sigma_f2 = 0.0;
  Eigen::VectorXd gamma;               // per level-1 cluster suppression factor
  std::vector<Eigen::VectorXd> lambda; // lambda[l-1] for levels l = 1..P+1
};

/// Benchmark weights of the nested model via the factorized product formula.
/// No matrix is inverted: the cost is linear in N plus the cluster counts.
BenchmarkResult benchmark_weights(const RussianDollModel& model);

struct DenseWeights {
  Eigen::VectorXd weights;
  double sigma_f2 = 0.0;
};

/// w = sigma_F^2 Gamma^{-1} beta with sigma_F^{-2} = beta' Gamma^{-1} beta, by a
/// direct dense Cholesky solve.
DenseWeights benchmark_weights_oracle(const CovarianceMatrix& gamma, const BetaVector& beta);

/// Weights and intermediates for a general factor model
/// Gamma = diag(xi2) + Omega phi Omega', computed through the Woodbury inverse.
struct FactorModelWeights {
  Eigen::VectorXd weights;
  double sigma_f2 = 0.0;
  Eigen::VectorXd lambda;         // Omega' (beta / xi2)
  double theta = 0.0;             // sum beta^2 / xi2
  Eigen::VectorXd upsilon;        // Omega Q^{-1} lambda
  Eigen::VectorXd upsilon_tilde;  // same with the beta-direction projected out, divided by xi2
};

FactorModelWeights general_factor_weights(const Eigen::VectorXd& xi2, const Eigen::MatrixXd& omega,
                                          const Eigen::MatrixXd& phi, const BetaVector& beta);

enum class BetaMode { ProportionalToSigma, ObservedCapped, Explicit };

struct BetaSpec {
  BetaMode mode = BetaMode::ProportionalToSigma;
  double kappa_max = 1.0;
  double kappa_min = 1.0;
  /// Lower cap floor as a fraction of the median beta-hat.
  double floor_fraction = 0.05;
  Eigen::VectorXd explicit_values;  // Explicit mode only

  void validate() const;
};

/// Median and mean absolute deviation about the median.
struct RobustCenter {
  double median = 0.0;
  double mad = 0.0;
};

RobustCenter median_and_mad(std::span<const double> values);

/// Caps and floors beta-hat outliers at median +/- kappa * MAD, with the
/// lower cap floored at floor_fraction * median.
Eigen::VectorXd cap_and_floor(const Eigen::VectorXd& beta_hat, double kappa_max, double kappa_min,
                              double floor_fraction = 0.05);

BetaVector make_betas(const ReturnsPanel& panel, const BetaSpec& spec,
                      const std::optional<Eigen::VectorXd>& index_returns = std::nullopt);

}  // namespace rdbench
