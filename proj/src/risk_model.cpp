#include "rdbench/risk_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdbench/errors.hpp"

namespace rdbench {

void ThetaFitConfig::validate() const {
  if (!(z_min >= 0.0 && z_min < z_max && z_max <= 1.0)) {
    std::ostringstream msg;
    msg << "need 0 <= z_min < z_max <= 1, got z_min=" << z_min << " z_max=" << z_max;
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
}

const ThetaFitConfig& RiskModelConfig::for_level(std::size_t l) const {
  return l < per_level.size() ? per_level[l] : theta;
}

ThetaFit fit_theta_detailed(const Eigen::MatrixXd& block, const Eigen::VectorXd& loadings,
                            const ThetaFitConfig& config) {
  config.validate();
  const Eigen::Index m = block.rows();
  if (m == 0) throw Error(ErrorCode::EmptyBlock, "theta fit on an empty block");
  if (block.cols() != m || loadings.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "theta fit block and loadings have mismatched sizes");
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    if (!(block(a, a) > 0.0) || !std::isfinite(block(a, a))) {
      throw Error(ErrorCode::InvalidVariance, "theta fit block has a nonpositive diagonal entry");
    }
    if (!(loadings(a) != 0.0) || !std::isfinite(loadings(a))) {
      throw Error(ErrorCode::InvalidBeta, "theta fit loadings must be finite and nonzero");
    }
  }

  const double keep_max = 1.0 - config.z_max * config.z_max;
  const double keep_min = 1.0 - config.z_min * config.z_min;

  ThetaFit fit;
  if (m == 1) {
    // A lone unit carries no off-diagonal information: give it the largest
    // specific share allowed.
    const double b2 = loadings(0) * loadings(0);
    fit.theta = keep_max * block(0, 0) / b2;
    fit.theta_star = fit.theta;
    fit.theta_min = fit.theta;
    fit.theta_max = keep_min * block(0, 0) / b2;
    fit.singleton = true;
    return fit;
  }

  const Eigen::VectorXd sd = block.diagonal().cwiseSqrt();
  const Eigen::VectorXd b_hat = loadings.cwiseQuotient(sd);
  const Eigen::VectorXd b_hat2 = b_hat.cwiseAbs2();

  double numerator = 0.0;
  double denominator = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index c = 0; c < m; ++c) {
      if (a == c) continue;
      const double corr = block(a, c) / (sd(a) * sd(c));
      numerator += b_hat(a) * corr * b_hat(c);
      denominator += b_hat2(a) * b_hat2(c);
    }
  }

  fit.theta_star = numerator / denominator;
  fit.theta_min = keep_max / b_hat2.minCoeff();
  fit.theta_max = keep_min / b_hat2.maxCoeff();
  fit.theta = std::min(std::max(fit.theta_star, fit.theta_min), fit.theta_max);
  return fit;
}

double fit_theta(const Eigen::MatrixXd& block, const Eigen::VectorXd& loadings, const ThetaFitConfig& config) {
  return fit_theta_detailed(block, loadings, config).theta;
}

Eigen::VectorXd normalized_betas(const BetaVector& beta, const CovarianceMatrix& cov) {
  return beta.values().cwiseQuotient(volatilities(cov));
}

double admissible_beta_ratio(const ThetaFitConfig& config) {
  return std::sqrt((1.0 - config.z_min * config.z_min) / (1.0 - config.z_max * config.z_max));
}

namespace {

std::string unit_label(const ClassificationTree& tree, std::size_t level, int unit) {
  return level == 0 ? tree.tickers()[unit] : tree.cluster_name(level, unit);
}

}  // namespace

RussianDollModel build_russian_doll(const CovarianceMatrix& cov, const ClassificationTree& tree,
                                    const BetaVector& beta, const RiskModelConfig& config) {
  validate_tree(tree, std::span<const std::string>(cov.tickers));
  if (static_cast<Eigen::Index>(beta.size()) != cov.size()) {
    throw Error(ErrorCode::InvalidArgument, "beta vector is not aligned with the covariance");
  }
  config.theta.validate();
  for (const auto& c : config.per_level) c.validate();

  const std::size_t num_levels = tree.num_levels();
  RussianDollModel model{tree, beta, {}, {}, 0.0, std::vector<double>(num_levels, 1.0), {}, config};

  Eigen::MatrixXd x = cov.values;
  Eigen::VectorXd b = beta.values();

  for (std::size_t l = 0; l <= num_levels; ++l) {
    const bool top = l == num_levels;
    const auto units = static_cast<std::size_t>(tree.num_clusters(l));
    std::vector<int> parent(units, 0);
    std::vector<std::vector<int>> groups;
    if (top) {
      groups.emplace_back(units);
      for (std::size_t u = 0; u < units; ++u) groups[0][u] = static_cast<int>(u);
    } else {
      parent = tree.parent_map(l + 1);
      groups = tree.members(l + 1);
    }
    const ThetaFitConfig& fit_config = config.for_level(l);

    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups.size()));
    std::ostringstream inadmissible;
    for (std::size_t a = 0; a < groups.size(); ++a) {
      if (top && !config.mkt_fac) continue;
      const auto& idx = groups[a];
      const ThetaFit fit = fit_theta_detailed(x(idx, idx), b(idx), fit_config);
      if (l == 0 && config.strict_beta_range && !fit.singleton && fit.theta_min > fit.theta_max) {
        const Eigen::VectorXd b_hat = b(idx).cwiseQuotient(x(idx, idx).diagonal().cwiseSqrt());
        inadmissible << " [" << tree.cluster_name(1, static_cast<int>(a)) << ":";
        for (std::size_t k = 0; k < idx.size(); ++k) {
          inadmissible << ' ' << tree.tickers()[idx[k]] << "=" << b_hat(static_cast<Eigen::Index>(k));
        }
        inadmissible << ']';
      }
      fitted(static_cast<Eigen::Index>(a)) = fit.theta;
    }
    if (!inadmissible.str().empty()) {
      std::ostringstream msg;
      msg << "beta-hat spread within a level-1 cluster exceeds the admissible ratio "
          << admissible_beta_ratio(fit_config) << "; offending beta-hat values:" << inadmissible.str();
      throw Error(ErrorCode::InadmissibleBetaDispersion, msg.str());
    }

    Eigen::VectorXd specific(static_cast<Eigen::Index>(units));
    std::ostringstream negative;
    for (std::size_t u = 0; u < units; ++u) {
      const auto i = static_cast<Eigen::Index>(u);
      specific(i) = x(i, i) - b(i) * b(i) * fitted(parent[u]);
      if (!(specific(i) > 0.0)) {
        negative << ' ' << unit_label(tree, l, static_cast<int>(u));
        if (l == 0) negative << "(beta-hat=" << b(i) / std::sqrt(x(i, i)) << ")";
      }
    }
    if (!negative.str().empty()) {
      throw Error(ErrorCode::NegativeSpecificVariance,
                  "nonpositive specific variance at level " + std::to_string(l) + " for:" + negative.str());
    }

    if (l == 0) {
      model.xi2 = specific;
    } else {
      model.zeta2.push_back(specific);
    }
    model.fitted_cluster_var.push_back(fitted);
    if (top) {
      model.top_var = fitted(0);
      break;
    }

    // Contract onto the next level, then rescale so the diagonal equals the
    // fitted cluster variances.
    const auto next = static_cast<Eigen::Index>(groups.size());
    Eigen::MatrixXd membership = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units), next);
    for (std::size_t u = 0; u < units; ++u) {
      membership(static_cast<Eigen::Index>(u), parent[u]) =
          config.aggregation == Aggregation::LoadingWeighted ? b(static_cast<Eigen::Index>(u)) : 1.0;
    }
    Eigen::MatrixXd contracted = membership.transpose() * x * membership;
    Eigen::VectorXd scale(next);
    for (Eigen::Index a = 0; a < next; ++a) {
      if (!(contracted(a, a) > 0.0)) {
        throw Error(ErrorCode::InvalidVariance, "aggregated variance of level-" + std::to_string(l + 1) +
                                                    " cluster " + tree.cluster_name(l + 1, static_cast<int>(a)) +
                                                    " is not positive");
      }
      scale(a) = std::sqrt(fitted(a) / contracted(a, a));
    }
    x = scale.asDiagonal() * contracted * scale.asDiagonal();
    x = 0.5 * (x + x.transpose()).eval();
    b = Eigen::VectorXd::Ones(next);
  }
  return model;
}

CovarianceMatrix assemble_dense(const RussianDollModel& model) {
  const std::size_t num_levels = model.num_levels();
  const auto& tree = model.tree;

  // Start from the level-P cluster covariance and expand downwards.
  const Eigen::Index top_units = tree.num_clusters(num_levels);
  const double chi_top = model.chi[num_levels - 1];
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Constant(top_units, top_units, chi_top * chi_top * model.top_var);
  gamma.diagonal() += model.zeta2[num_levels - 1];

  for (std::size_t l = num_levels - 1; l >= 1; --l) {
    const auto& parent = tree.parent_map(l + 1);
    const Eigen::Index units = tree.num_clusters(l);
    const double chi2 = model.chi[l - 1] * model.chi[l - 1];
    Eigen::MatrixXd lower(units, units);
    for (Eigen::Index a = 0; a < units; ++a) {
      for (Eigen::Index c = 0; c < units; ++c) lower(a, c) = chi2 * gamma(parent[a], parent[c]);
    }
    lower.diagonal() += model.zeta2[l - 1];
    gamma = std::move(lower);
  }

  const auto& parent = tree.parent_map(1);
  const Eigen::VectorXd& beta = model.beta.values();
  const Eigen::Index n = beta.size();
  Eigen::MatrixXd dense(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) dense(i, j) = beta(i) * beta(j) * gamma(parent[i], parent[j]);
  }
  dense.diagonal() += model.xi2;
  return {std::move(dense), tree.tickers()};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json theta_json(const ThetaFitConfig& c) { return {{"z_min", c.z_min}, {"z_max", c.z_max}}; }

ThetaFitConfig theta_from_json(const nlohmann::json& j) {
  return {j.value("z_min", 0.1), j.value("z_max", 0.9)};
}

}  // namespace

nlohmann::json to_json(const RiskModelConfig& config) {
  nlohmann::json per_level = nlohmann::json::array();
  for (const auto& c : config.per_level) per_level.push_back(theta_json(c));
  return {{"z_min", config.theta.z_min},
          {"z_max", config.theta.z_max},
          {"per_level", per_level},
          {"mkt_fac", config.mkt_fac},
          {"aggregation", config.aggregation == Aggregation::Unweighted ? "unweighted" : "loading-weighted"},
          {"strict_beta_range", config.strict_beta_range}};
}

RiskModelConfig risk_model_config_from_json(const nlohmann::json& j) {
  RiskModelConfig config;
  config.theta = theta_from_json(j);
  if (j.contains("per_level")) {
    for (const auto& c : j.at("per_level")) config.per_level.push_back(theta_from_json(c));
  }
  config.mkt_fac = j.value("mkt_fac", true);
  const auto aggregation = j.value("aggregation", std::string("unweighted"));
  if (aggregation == "unweighted") {
    config.aggregation = Aggregation::Unweighted;
  } else if (aggregation == "loading-weighted") {
    config.aggregation = Aggregation::LoadingWeighted;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown aggregation \"" + aggregation + "\"");
  }
  config.strict_beta_range = j.value("strict_beta_range", true);
  return config;
}

nlohmann::json to_json(const RussianDollModel& model) {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t l = 1; l <= model.num_levels(); ++l) {
    const auto& lvl = model.tree.level(l);
    levels.push_back({{"num_clusters", lvl.num_clusters},
                      {"parent", lvl.parent},
                      {"names", lvl.names},
                      {"zeta2", vector_json(model.zeta2[l - 1])},
                      {"chi", model.chi[l - 1]}});
  }
  nlohmann::json fitted = nlohmann::json::array();
  for (const auto& f : model.fitted_cluster_var) fitted.push_back(vector_json(f));
  return {{"tickers", model.tree.tickers()},
          {"beta", vector_json(model.beta.values())},
          {"xi2", vector_json(model.xi2)},
          {"levels", levels},
          {"top_var", model.top_var},
          {"fitted_cluster_var", fitted},
          {"config", to_json(model.config)}};
}

RussianDollModel russian_doll_from_json(const nlohmann::json& j) {
  std::vector<ClassificationLevel> levels;
  std::vector<Eigen::VectorXd> zeta2;
  std::vector<double> chi;
  for (const auto& lvl : j.at("levels")) {
    levels.push_back({lvl.at("num_clusters").get<int>(), lvl.at("parent").get<std::vector<int>>(),
                      lvl.at("names").get<std::vector<std::string>>()});
    zeta2.push_back(vector_from_json(lvl.at("zeta2")));
    chi.push_back(lvl.at("chi").get<double>());
  }
  std::vector<Eigen::VectorXd> fitted;
  for (const auto& f : j.at("fitted_cluster_var")) fitted.push_back(vector_from_json(f));

  ClassificationTree tree(j.at("tickers").get<std::vector<std::string>>(), std::move(levels));
  validate_tree(tree, std::span<const std::string>(tree.tickers()));
  return {std::move(tree),
          BetaVector(vector_from_json(j.at("beta"))),
          vector_from_json(j.at("xi2")),
          std::move(zeta2),
          j.at("top_var").get<double>(),
          std::move(chi),
          std::move(fitted),
          risk_model_config_from_json(j.at("config"))};
}

}  // namespace rdbench
