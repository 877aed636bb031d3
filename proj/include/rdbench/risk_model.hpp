#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rdbench/data_model.hpp"
#include "rdbench/stats.hpp"

namespace rdbench {

/// Bounds on the fraction of each unit's total volatility that is left as
/// specific risk: z_min * sd <= specific sd <= z_max * sd.
struct ThetaFitConfig {
  double z_min = 0.1;
  double z_max = 0.9;

  void validate() const;
};

/// Full output of a single-block factor-variance fit.
struct ThetaFit {
  double theta = 0.0;       // clamped value actually used
  double theta_star = 0.0;  // unconstrained least-squares value
  double theta_min = 0.0;
  double theta_max = 0.0;
  bool singleton = false;   // M = 1 closed form was used
};

/// Least-squares fit of the single factor variance theta in
/// Y = diag(a^2) + theta * b b' against the off-diagonal correlations of the
/// symmetric block X, holding diag(Y) = diag(X). The result is
/// min(max(theta*, theta_min), theta_max); the order matters when the bounds
/// cross (theta_min > theta_max), in which case theta_max wins.
ThetaFit fit_theta_detailed(const Eigen::MatrixXd& block, const Eigen::VectorXd& loadings,
                            const ThetaFitConfig& config);

double fit_theta(const Eigen::MatrixXd& block, const Eigen::VectorXd& loadings, const ThetaFitConfig& config);

/// How a level's covariance is contracted onto the next, coarser level before
/// its diagonal is rescaled to the fitted cluster variances.
enum class Aggregation {
  /// Plain membership sums, X~ = M' X M (matches the published reference code).
  Unweighted,
  /// Loading-weighted sums, X~ = M' diag(b) X diag(b) M.
  LoadingWeighted,
};

struct RiskModelConfig {
  ThetaFitConfig theta;
  /// Optional per-level overrides; entry l configures the fit of the
  /// level-(l+1) cluster variances from level-l units (l = 0..P).
  std::vector<ThetaFitConfig> per_level;
  /// true: fit a single "market" variance on top of level P. false: level P
  /// cluster factors are left uncorrelated (top variance zero).
  bool mkt_fac = true;
  Aggregation aggregation = Aggregation::Unweighted;
  /// Reject level-1 clusters whose stock beta-hat spread makes
  /// theta_min > theta_max instead of silently clamping.
  bool strict_beta_range = true;

  const ThetaFitConfig& for_level(std::size_t l) const;
};

/// Nested factor model over a multilevel classification. Level l covariance
/// of clusters is diag(zeta2[l-1]) + chi[l-1]^2 * (level l+1 covariance
/// expanded by membership); stocks load on their level-1 cluster with beta.
struct RussianDollModel {
  ClassificationTree tree;
  BetaVector beta;
  Eigen::VectorXd xi2;                              // stock specific variances
  std::vector<Eigen::VectorXd> zeta2;               // zeta2[l-1]: level-l specific variances
  double top_var = 0.0;                             // market variance, 0 when !mkt_fac
  std::vector<double> chi;                          // chi[l-1]: loading of level l onto l+1
  std::vector<Eigen::VectorXd> fitted_cluster_var;  // [l]: fitted variances of level-(l+1) clusters
  RiskModelConfig config;

  std::size_t num_levels() const { return tree.num_levels(); }
};

RussianDollModel build_russian_doll(const CovarianceMatrix& cov, const ClassificationTree& tree,
                                    const BetaVector& beta, const RiskModelConfig& config = {});

/// Expands the nested model into the dense N x N stock covariance.
CovarianceMatrix assemble_dense(const RussianDollModel& model);

/// Beta-hat = beta / sigma, the quantity whose spread governs admissibility.
Eigen::VectorXd normalized_betas(const BetaVector& beta, const CovarianceMatrix& cov);

/// sqrt((1 - z_min^2) / (1 - z_max^2)): the largest max/min beta-hat ratio a
/// level-1 cluster may have before theta_min exceeds theta_max.
double admissible_beta_ratio(const ThetaFitConfig& config);

nlohmann::json to_json(const RiskModelConfig& config);
RiskModelConfig risk_model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RussianDollModel& model);
RussianDollModel russian_doll_from_json(const nlohmann::json& j);

}  // namespace rdbench
