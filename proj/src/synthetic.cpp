#include "rdbench/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rdbench/errors.hpp"

namespace rdbench {

namespace {

// Box-Muller over mt19937_64 so the stream is identical on every platform
// (std::normal_distribution is implementation-defined).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::string padded(const std::string& prefix, int value, int width) {
  std::string digits_text = std::to_string(value);
  if (static_cast<int>(digits_text.size()) < width) digits_text.insert(0, width - digits_text.size(), '0');
  return prefix + digits_text;
}

int digits(int n) { return n < 10 ? 1 : 1 + digits(n / 10); }

}  // namespace

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (clusters.empty()) fail("at least one classification level is required");
  if (rho.size() != clusters.size()) fail("need one planted correlation per level");
  if (num_periods < 2) fail("need at least two periods");
  if (clusters.front() < 1) fail("cluster counts must be positive");
  if (num_stocks < 2 * clusters.front()) {
    std::ostringstream msg;
    msg << "N = " << num_stocks << " is less than 2 K1 = " << 2 * clusters.front();
    fail(msg.str());
  }
  for (std::size_t l = 0; l < clusters.size(); ++l) {
    if (clusters[l] < 1) fail("cluster counts must be positive");
    if (l > 0 && clusters[l] > clusters[l - 1]) fail("cluster counts must not increase with level");
    if (!(rho[l] > -1.0 && rho[l] < 1.0)) fail("planted correlations must lie in (-1, 1)");
    if (l > 0 && rho[l] > rho[l - 1]) fail("planted correlations must not increase with level");
  }
  if (!(market_corr >= 0.0 && market_corr <= rho.back())) {
    fail("market correlation must lie in [0, rho of the top level]");
  }
  if (!std::isfinite(vol_log_mean) || !(vol_log_sd >= 0.0) || !std::isfinite(vol_log_sd)) {
    fail("volatility log-normal parameters must be finite with sd >= 0");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int n = spec.num_stocks;
  const int t_count = spec.num_periods;
  const std::size_t p = spec.clusters.size();

  // cluster[l][i]: level-(l+1) cluster of stock i.
  std::vector<std::vector<int>> cluster(p, std::vector<int>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    cluster[0][i] = static_cast<int>(static_cast<long long>(i) * spec.clusters[0] / n);
  }
  for (std::size_t l = 1; l < p; ++l) {
    for (int i = 0; i < n; ++i) {
      const int below = cluster[l - 1][i];
      cluster[l][i] = static_cast<int>(static_cast<long long>(below) * spec.clusters[l] / spec.clusters[l - 1]);
    }
  }

  // Loadings on the market, each level's factor, and the idiosyncratic term.
  const double market_loading = std::sqrt(spec.market_corr);
  std::vector<double> level_loading(p);
  for (std::size_t l = 0; l < p; ++l) {
    const double next = l + 1 < p ? spec.rho[l + 1] : spec.market_corr;
    level_loading[l] = std::sqrt(spec.rho[l] - next);
  }
  const double own_loading = std::sqrt(1.0 - spec.rho[0]);

  NormalStream normal(spec.seed);
  Eigen::VectorXd sigma(n);
  for (int i = 0; i < n; ++i) sigma(i) = std::exp(spec.vol_log_mean + spec.vol_log_sd * normal.next());

  Eigen::MatrixXd values(n, t_count);
  std::vector<std::vector<double>> factors(p);
  for (std::size_t l = 0; l < p; ++l) factors[l].resize(static_cast<std::size_t>(spec.clusters[l]));
  for (int t = 0; t < t_count; ++t) {
    const double market = normal.next();
    for (auto& level : factors) {
      for (double& f : level) f = normal.next();
    }
    for (int i = 0; i < n; ++i) {
      double z = market_loading * market + own_loading * normal.next();
      for (std::size_t l = 0; l < p; ++l) z += level_loading[l] * factors[l][cluster[l][i]];
      values(i, t) = sigma(i) * z;
    }
  }

  std::vector<std::string> tickers(static_cast<std::size_t>(n));
  std::vector<std::string> dates(static_cast<std::size_t>(t_count));
  for (int i = 0; i < n; ++i) tickers[i] = padded("S", i, std::max(3, digits(n - 1)));
  for (int t = 0; t < t_count; ++t) dates[t] = padded("t", t + 1, std::max(4, digits(t_count)));

  std::vector<std::vector<std::string>> labels(p, std::vector<std::string>(static_cast<std::size_t>(n)));
  for (std::size_t l = 0; l < p; ++l) {
    const std::string prefix = "L" + std::to_string(l + 1) + "_";
    for (int i = 0; i < n; ++i) {
      labels[l][i] = padded(prefix, cluster[l][i], digits(spec.clusters[l] - 1));
    }
  }

  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double c = spec.market_corr;
      if (i == j) {
        c = 1.0;
      } else {
        for (std::size_t l = 0; l < p; ++l) {
          if (cluster[l][i] == cluster[l][j]) {
            c = spec.rho[l];
            break;
          }
        }
      }
      corr(i, j) = c;
    }
  }

  ClassificationTree tree = ClassificationTree::from_labels(tickers, labels);
  return {ReturnsPanel(std::move(tickers), std::move(dates), std::move(values)), std::move(tree), sigma,
          std::move(corr)};
}

Eigen::VectorXd synthetic_signal(const Eigen::VectorXd& sigma, double alpha, std::uint64_t seed) {
  if (!std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "signal scale must be finite");
  NormalStream normal(seed);
  Eigen::VectorXd out(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) out(i) = alpha * sigma(i) * normal.next();
  return out;
}

}  // namespace rdbench
