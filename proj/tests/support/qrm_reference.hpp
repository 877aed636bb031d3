#pragma once

// Literal transliteration of the published qrm.benchmark routine on dense
// 0/1 membership matrices. Deliberately shares no code with the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace rdtest {

inline Eigen::MatrixXd calc_load(const Eigen::MatrixXd& load, const Eigen::MatrixXd& load1) {
  const Eigen::VectorXd x = load1.colwise().sum().transpose();
  Eigen::MatrixXd out = load1.transpose() * load;
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= x(r);
  return out;
}

inline double calc_theta(Eigen::MatrixXd x, Eigen::VectorXd b, double z_min, double z_max) {
  if (x.size() == 1) return (1 - z_max * z_max) * x(0, 0) / (b(0) * b(0));
  const Eigen::VectorXd s = x.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) /= s(i) * s(j);
  }
  b = b.cwiseQuotient(s);
  const Eigen::VectorXd b2 = b.cwiseAbs2();
  const double t_min = (1 - z_max * z_max) / b2.minCoeff();
  const double t_max = (1 - z_min * z_min) / b2.maxCoeff();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) *= b(i) * b(j);
  }
  const double num = x.sum() - x.trace();
  const double den = b2.sum() * b2.sum() - b2.cwiseAbs2().sum();
  double t = num / den;
  t = std::min(std::max(t, t_min), t_max);
  return t;
}

/// `ind[l]` is the N x K^(l+1) membership matrix of level l+1; `cov` is the
/// sample covariance (the routine's cov(t(ret))).
inline Eigen::VectorXd qrm_benchmark(const Eigen::MatrixXd& cov, std::vector<Eigen::MatrixXd> ind,
                                     const Eigen::VectorXd& beta, bool mkt_fac = true, double z_min = 0.1,
                                     double z_max = 0.9) {
  ind.push_back(Eigen::MatrixXd::Ones(ind[0].rows(), 1));
  const std::size_t levels = ind.size();
  Eigen::MatrixXd x = cov;
  std::vector<Eigen::VectorXd> y, v;
  Eigen::VectorXd w = beta;
  Eigen::VectorXd b = beta;

  for (std::size_t lvl = 1; lvl <= levels; ++lvl) {
    Eigen::MatrixXd flm;
    if (lvl > 1) {
      flm = calc_load(ind[lvl - 1], ind[lvl - 2]);
      b = Eigen::VectorXd::Ones(flm.rows());
    } else {
      flm = ind[lvl - 1];
    }
    const Eigen::Index k = flm.cols();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd y1 = Eigen::VectorXd::Zero(flm.rows());
    Eigen::VectorXd v1 = Eigen::VectorXd::Zero(k);

    for (Eigen::Index a = 0; a < k; ++a) {
      std::vector<Eigen::Index> take;
      for (Eigen::Index r = 0; r < flm.rows(); ++r) {
        if (flm(r, a) == 1.0) take.push_back(r);
      }
      if (lvl == levels && !mkt_fac) {
        g(a) = 0;
      } else {
        g(a) = calc_theta(x(take, take), b(take), z_min, z_max);
      }
      for (Eigen::Index r : take) y1(r) = x(r, r) - b(r) * b(r) * g(a);
      double acc = 0.0;
      for (Eigen::Index r : take) {
        acc += lvl == 1 ? b(r) * b(r) / y1(r) : v[lvl - 2](r) / (1 + y1(r) * v[lvl - 2](r));
      }
      v1(a) = acc;
    }
    y.push_back(y1);
    v.push_back(v1);
    const Eigen::MatrixXd x1 = flm.transpose() * x * flm;
    const Eigen::VectorXd u = (g.array() / x1.diagonal().array()).sqrt();
    x = u.asDiagonal() * x1 * u.asDiagonal();
  }

  w = w.cwiseQuotient(y[0]);
  for (std::size_t lvl = 1; lvl <= levels - 1; ++lvl) {
    for (Eigen::Index a = 0; a < ind[lvl - 1].cols(); ++a) {
      for (Eigen::Index r = 0; r < w.size(); ++r) {
        if (ind[lvl - 1](r, a) == 1.0) w(r) /= 1 + y[lvl](a) * v[lvl - 1](a);
      }
    }
  }
  return w / w.dot(beta);
}

/// Membership matrices of a stock-to-cluster assignment per level.
inline std::vector<Eigen::MatrixXd> indicator_matrices(const std::vector<std::vector<int>>& stock_to_cluster,
                                                       const std::vector<int>& clusters) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t l = 0; l < stock_to_cluster.size(); ++l) {
    const auto& map = stock_to_cluster[l];
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(map.size()), clusters[l]);
    for (std::size_t i = 0; i < map.size(); ++i) m(static_cast<Eigen::Index>(i), map[i]) = 1.0;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace rdtest
