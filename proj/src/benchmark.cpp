#include "rdbench/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdbench/errors.hpp"

namespace rdbench {

BenchmarkResult benchmark_weights(const RussianDollModel& model) {
  const std::size_t num_levels = model.num_levels();
  const auto& tree = model.tree;
  const Eigen::VectorXd& beta = model.beta.values();
  const Eigen::VectorXd& xi2 = model.xi2;
  if (xi2.size() != beta.size() || model.zeta2.size() != num_levels || model.chi.size() != num_levels) {
    throw Error(ErrorCode::DegenerateModel, "model arrays are inconsistent with its classification");
  }
  if ((xi2.array() <= 0.0).any()) {
    throw Error(ErrorCode::DegenerateModel, "stock specific variances must be positive");
  }

  BenchmarkResult out;
  out.lambda.reserve(num_levels + 1);

  // Level-1 aggregates: sum of beta^2 / xi^2 over each cluster's stocks.
  const auto& stock_parent = tree.parent_map(1);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(tree.num_clusters(1));
  for (Eigen::Index i = 0; i < beta.size(); ++i) lambda(stock_parent[i]) += beta(i) * beta(i) / xi2(i);
  out.lambda.push_back(lambda);

  // Per-level suppression factors 1 / (1 + zeta^2 Lambda), and Lambda one level up.
  std::vector<Eigen::VectorXd> factor;
  factor.reserve(num_levels + 1);
  for (std::size_t l = 1; l <= num_levels; ++l) {
    const Eigen::VectorXd& current = out.lambda.back();
    const Eigen::VectorXd f = (1.0 + model.zeta2[l - 1].array() * current.array()).inverse();
    const Eigen::Index next_units = l < num_levels ? tree.num_clusters(l + 1) : 1;
    const double chi2 = model.chi[l - 1] * model.chi[l - 1];
    Eigen::VectorXd next = Eigen::VectorXd::Zero(next_units);
    for (Eigen::Index a = 0; a < current.size(); ++a) {
      const int up = l < num_levels ? tree.parent_map(l + 1)[a] : 0;
      next(up) += chi2 * current(a) * f(a);
    }
    factor.push_back(f);
    out.lambda.push_back(next);
  }
  const double top_factor = 1.0 / (1.0 + model.top_var * out.lambda.back()(0));

  // Multiply the factors along each level-1 cluster's ancestor chain, top down.
  Eigen::VectorXd chain = Eigen::VectorXd::Constant(1, top_factor);
  for (std::size_t l = num_levels; l >= 1; --l) {
    const Eigen::VectorXd& f = factor[l - 1];
    Eigen::VectorXd below(f.size());
    for (Eigen::Index a = 0; a < f.size(); ++a) {
      const int up = l < num_levels ? tree.parent_map(l + 1)[a] : 0;
      below(a) = f(a) * chain(up);
    }
    chain = std::move(below);
  }
  out.gamma = std::move(chain);
  if (!(out.gamma.array() > 0.0).all()) {
    throw Error(ErrorCode::DegenerateModel, "cluster factor gamma is not positive");
  }

  const double inv_sigma = out.lambda.front().dot(out.gamma);
  if (!(inv_sigma > 0.0) || !std::isfinite(inv_sigma)) {
    throw Error(ErrorCode::DegenerateModel, "benchmark variance is degenerate");
  }
  out.sigma_f2 = 1.0 / inv_sigma;

  out.weights.resize(beta.size());
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    out.weights(i) = out.sigma_f2 * beta(i) / xi2(i) * out.gamma(stock_parent[i]);
  }
  out.weights /= out.weights.dot(beta);
  return out;
}

DenseWeights benchmark_weights_oracle(const CovarianceMatrix& gamma, const BetaVector& beta) {
  if (gamma.size() != static_cast<Eigen::Index>(beta.size())) {
    throw Error(ErrorCode::InvalidArgument, "beta vector is not aligned with the covariance");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(gamma.values);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, "covariance is not positive definite");
  }
  const Eigen::VectorXd solved = llt.solve(beta.values());
  const double quad = beta.values().dot(solved);
  if (!(quad > 0.0) || !std::isfinite(quad)) {
    throw Error(ErrorCode::SingularCovariance, "beta' Gamma^-1 beta is not positive");
  }
  const double sigma_f2 = 1.0 / quad;
  return {sigma_f2 * solved, sigma_f2};
}

FactorModelWeights general_factor_weights(const Eigen::VectorXd& xi2, const Eigen::MatrixXd& omega,
                                          const Eigen::MatrixXd& phi, const BetaVector& beta) {
  const Eigen::Index n = xi2.size();
  const Eigen::Index k = omega.cols();
  if (static_cast<Eigen::Index>(beta.size()) != n || omega.rows() != n || phi.rows() != k || phi.cols() != k) {
    throw Error(ErrorCode::InvalidArgument, "factor model inputs have inconsistent shapes");
  }
  if ((xi2.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidVariance, "specific variances must be positive");
  }

  const Eigen::VectorXd& b = beta.values();
  const Eigen::VectorXd inv_xi2 = xi2.cwiseInverse();
  const Eigen::VectorXd scaled_beta = b.cwiseProduct(inv_xi2);

  FactorModelWeights out;
  out.theta = b.dot(scaled_beta);
  out.lambda = omega.transpose() * scaled_beta;

  Eigen::VectorXd q_lambda = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    const Eigen::LLT<Eigen::MatrixXd> phi_llt(phi);
    if (phi_llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularFactorSystem, "factor covariance is not positive definite");
    }
    const Eigen::MatrixXd q = phi_llt.solve(Eigen::MatrixXd::Identity(k, k)) +
                              omega.transpose() * inv_xi2.asDiagonal() * omega;
    const Eigen::LLT<Eigen::MatrixXd> q_llt(q);
    if (q_llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularFactorSystem, "Q = phi^-1 + Omega' Xi^-1 Omega is singular");
    }
    q_lambda = q_llt.solve(out.lambda);
  }

  out.upsilon = omega * q_lambda;
  const double inv_sigma = out.theta - out.lambda.dot(q_lambda);
  if (!(inv_sigma > 0.0) || !std::isfinite(inv_sigma)) {
    throw Error(ErrorCode::SingularFactorSystem, "beta' Gamma^-1 beta is not positive");
  }
  out.sigma_f2 = 1.0 / inv_sigma;
  out.weights = out.sigma_f2 * (b - out.upsilon).cwiseProduct(inv_xi2);

  const Eigen::MatrixXd omega_tilde =
      inv_xi2.asDiagonal() * (omega - b * (out.lambda.transpose() / out.theta));
  out.upsilon_tilde = omega_tilde * q_lambda;
  return out;
}

// ---------------------------------------------------------------------------
// Beta construction

void BetaSpec::validate() const {
  if (mode == BetaMode::ObservedCapped && !(kappa_max > 0.0 && kappa_min > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "kappa_max and kappa_min must be positive");
  }
  if (!(floor_fraction > 0.0 && floor_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "floor_fraction must lie in (0, 1)");
  }
}

RobustCenter median_and_mad(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double mad = 0.0;
  for (double v : sorted) mad += std::abs(v - median);
  return {median, mad / static_cast<double>(n)};
}

Eigen::VectorXd cap_and_floor(const Eigen::VectorXd& beta_hat, double kappa_max, double kappa_min,
                              double floor_fraction) {
  const auto center = median_and_mad(std::span<const double>(beta_hat.data(), beta_hat.size()));
  if (!(center.median > 0.0)) {
    throw Error(ErrorCode::InvalidBeta, "median observed beta-hat is not positive");
  }
  const double upper = center.median + kappa_max * center.mad;
  const double lower = std::max(center.median - kappa_min * center.mad, floor_fraction * center.median);
  return beta_hat.cwiseMax(lower).cwiseMin(upper);
}

BetaVector make_betas(const ReturnsPanel& panel, const BetaSpec& spec,
                      const std::optional<Eigen::VectorXd>& index_returns) {
  spec.validate();
  if (spec.mode == BetaMode::Explicit) {
    if (spec.explicit_values.size() != static_cast<Eigen::Index>(panel.num_stocks())) {
      throw Error(ErrorCode::InvalidArgument, "explicit betas are not aligned with the panel");
    }
    return BetaVector(spec.explicit_values);
  }

  const Eigen::MatrixXd& r = panel.values();
  const Eigen::MatrixXd centered = r.colwise() - r.rowwise().mean();
  const Eigen::VectorXd sigma =
      (centered.rowwise().squaredNorm() / static_cast<double>(panel.num_periods() - 1)).cwiseSqrt();
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma(i) > 0.0)) {
      throw Error(ErrorCode::InvalidBeta, "ticker " + panel.tickers()[i] + " has zero volatility");
    }
  }

  if (spec.mode == BetaMode::ProportionalToSigma) return BetaVector(sigma);

  if (!index_returns) {
    throw Error(ErrorCode::InvalidArgument, "observed-capped betas need an index return series");
  }
  const RegressionBetas observed = serial_betas(panel, *index_returns);
  const Eigen::VectorXd beta_hat = observed.beta.cwiseQuotient(sigma);
  const Eigen::VectorXd capped = cap_and_floor(beta_hat, spec.kappa_max, spec.kappa_min, spec.floor_fraction);
  return BetaVector(capped.cwiseProduct(sigma));
}

}  // namespace rdbench
