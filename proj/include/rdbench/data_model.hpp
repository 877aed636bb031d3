#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rdbench {

/// Labeled N x T panel of per-period returns. Row order is canonical: every
/// vector or matrix produced downstream is aligned to tickers().
class ReturnsPanel {
 public:
  ReturnsPanel(std::vector<std::string> tickers, std::vector<std::string> dates,
               Eigen::MatrixXd values);

  const std::vector<std::string>& tickers() const { return tickers_; }
  const std::vector<std::string>& dates() const { return dates_; }
  const Eigen::MatrixXd& values() const { return values_; }

  std::size_t num_stocks() const { return tickers_.size(); }
  std::size_t num_periods() const { return dates_.size(); }

 private:
  std::vector<std::string> tickers_;
  std::vector<std::string> dates_;
  Eigen::MatrixXd values_;
};

/// One level of a nested classification: the map from level-(l-1) units
/// (stocks when l = 1) onto the K^(l) clusters of level l.
struct ClassificationLevel {
  int num_clusters = 0;
  std::vector<int> parent;  // -1 marks an unmapped unit
  std::vector<std::string> names;

  bool operator==(const ClassificationLevel&) const = default;
};

/// Multilevel stock -> cluster hierarchy, most granular level first.
///
/// Levels are numbered 1..P. Level 0 denotes the stocks themselves. The
/// constructor only stores its input; validate_tree() enforces invariants.
class ClassificationTree {
 public:
  ClassificationTree() = default;
  ClassificationTree(std::vector<std::string> tickers, std::vector<ClassificationLevel> levels);

  /// Builds a tree from per-level cluster labels given per stock, inferring
  /// the nesting. Clusters are numbered by first appearance in stock order.
  static ClassificationTree from_labels(std::vector<std::string> tickers,
                                        const std::vector<std::vector<std::string>>& labels);

  const std::vector<std::string>& tickers() const { return tickers_; }
  std::size_t num_stocks() const { return tickers_.size(); }
  std::size_t num_levels() const { return levels_.size(); }

  /// K^(level); level 0 yields N.
  int num_clusters(std::size_t level) const;

  /// Level definition for level in 1..P.
  const ClassificationLevel& level(std::size_t level) const;

  /// G^(level-1): units of level-1 onto clusters of `level` (1..P).
  const std::vector<int>& parent_map(std::size_t level) const { return this->level(level).parent; }

  /// Composed map from stocks onto clusters of `level` (0..P).
  std::vector<int> stock_to_cluster(std::size_t level) const;

  /// For each cluster of `level`, the level-(level-1) units it contains.
  std::vector<std::vector<int>> members(std::size_t level) const;

  /// Cluster label, falling back to "L<level>_<id>" when none was given.
  std::string cluster_name(std::size_t level, int cluster) const;

  bool operator==(const ClassificationTree&) const = default;

 private:
  std::vector<std::string> tickers_;
  std::vector<ClassificationLevel> levels_;
};

/// Strictly positive betas aligned with the panel tickers.
class BetaVector {
 public:
  explicit BetaVector(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

 private:
  Eigen::VectorXd values_;
};

struct TreeWarning {
  enum class Kind { SingletonCluster };
  Kind kind = Kind::SingletonCluster;
  std::size_t level = 0;
  int cluster = 0;
  std::string name;

  bool operator==(const TreeWarning&) const = default;
};

/// Checks the structural invariants of `tree` against the canonical ticker
/// order. Hard violations throw; soft issues come back as warnings.
std::vector<TreeWarning> validate_tree(const ClassificationTree& tree,
                                       std::span<const std::string> tickers);
std::vector<TreeWarning> validate_tree(const ClassificationTree& tree, const ReturnsPanel& panel);

ReturnsPanel load_returns_csv(const std::filesystem::path& path);
ClassificationTree load_classification_csv(const std::filesystem::path& path, const ReturnsPanel& panel);

void write_returns_csv(const ReturnsPanel& panel, const std::filesystem::path& path);
void write_classification_csv(const ClassificationTree& tree, const std::filesystem::path& path);

/// Reads "ticker,<value>" rows (header required) and aligns them to
/// `tickers`. Used for explicit betas and expected-return signals.
Eigen::VectorXd load_ticker_vector_csv(const std::filesystem::path& path,
                                       std::span<const std::string> tickers,
                                       const std::string& column = {});

/// Reads a single-row or single-column series of T values keyed by date:
/// "date,value" rows, aligned to `dates`.
Eigen::VectorXd load_date_series_csv(const std::filesystem::path& path,
                                     std::span<const std::string> dates);

}  // namespace rdbench
