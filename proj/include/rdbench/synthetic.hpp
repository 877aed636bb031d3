#pragma once

#include <cstdint>
#include <vector>

#include "rdbench/data_model.hpp"

namespace rdbench {

/// Hierarchical block-correlation panel. Two stocks whose lowest common
/// cluster sits at level l have correlation rho[l-1]; stocks in different
/// top-level clusters have correlation market_corr.
struct SyntheticSpec {
  int num_stocks = 16;
  int num_periods = 500;
  std::vector<int> clusters{4};     // K per level, finest first, non-increasing
  std::vector<double> rho{0.4};     // planted correlation per level, non-increasing
  double market_corr = 0.1;         // at most rho.back()
  double vol_log_mean = -3.912;     // log(0.02)
  double vol_log_sd = 0.3;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SyntheticData {
  ReturnsPanel panel;
  ClassificationTree tree;
  Eigen::VectorXd sigma;        // drawn volatilities
  Eigen::MatrixXd correlation;  // planted correlation matrix
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Planted expected returns alpha * sigma_i * z_i, z standard normal from a
/// stream seeded with `seed`.
Eigen::VectorXd synthetic_signal(const Eigen::VectorXd& sigma, double alpha, std::uint64_t seed);

}  // namespace rdbench
