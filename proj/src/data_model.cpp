#include "rdbench/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "csv.hpp"
#include "rdbench/errors.hpp"

namespace rdbench {

namespace {

void require_unique(const std::vector<std::string>& labels, ErrorCode code, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second) {
      throw Error(code, std::string(what) + " \"" + label + "\" appears more than once");
    }
  }
}

std::unordered_map<std::string, std::size_t> index_of(std::span<const std::string> labels) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], i);
  return index;
}

}  // namespace

// ---------------------------------------------------------------------------
// ReturnsPanel

ReturnsPanel::ReturnsPanel(std::vector<std::string> tickers, std::vector<std::string> dates,
                           Eigen::MatrixXd values)
    : tickers_(std::move(tickers)), dates_(std::move(dates)), values_(std::move(values)) {
  if (tickers_.size() < 2) {
    throw Error(ErrorCode::InsufficientObservations,
                "panel needs at least 2 tickers, got " + std::to_string(tickers_.size()));
  }
  if (dates_.size() < 2) {
    throw Error(ErrorCode::InsufficientObservations,
                "panel needs at least 2 periods, got " + std::to_string(dates_.size()));
  }
  if (static_cast<std::size_t>(values_.rows()) != tickers_.size() ||
      static_cast<std::size_t>(values_.cols()) != dates_.size()) {
    throw Error(ErrorCode::InvalidArgument, "panel values shape does not match labels");
  }
  require_unique(tickers_, ErrorCode::DuplicateTicker, "ticker");
  require_unique(dates_, ErrorCode::DuplicateDate, "date");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index s = 0; s < values_.cols(); ++s) {
      if (!std::isfinite(values_(i, s))) {
        throw Error(ErrorCode::NonFiniteValue, "return for " + tickers_[i] + " at " + dates_[s] +
                                                   " is not finite");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ClassificationTree

ClassificationTree::ClassificationTree(std::vector<std::string> tickers,
                                       std::vector<ClassificationLevel> levels)
    : tickers_(std::move(tickers)), levels_(std::move(levels)) {}

ClassificationTree ClassificationTree::from_labels(std::vector<std::string> tickers,
                                                   const std::vector<std::vector<std::string>>& labels) {
  const std::size_t n = tickers.size();
  std::vector<ClassificationLevel> levels;
  levels.reserve(labels.size());

  // Cluster index of every stock at the previous level (stocks themselves at level 0).
  std::vector<int> prev_of_stock(n);
  for (std::size_t i = 0; i < n; ++i) prev_of_stock[i] = static_cast<int>(i);
  int prev_count = static_cast<int>(n);

  for (std::size_t l = 0; l < labels.size(); ++l) {
    const auto& column = labels[l];
    if (column.size() != n) {
      throw Error(ErrorCode::InvalidArgument, "level " + std::to_string(l + 1) + " has " +
                                                  std::to_string(column.size()) + " labels for " +
                                                  std::to_string(n) + " stocks");
    }
    ClassificationLevel level;
    level.parent.assign(static_cast<std::size_t>(prev_count), -1);
    std::unordered_map<std::string, int> id_of;
    std::vector<int> of_stock(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& label = column[i];
      if (label.empty()) {
        throw Error(ErrorCode::EmptyLevel,
                    "ticker " + tickers[i] + " has an empty label at level " + std::to_string(l + 1));
      }
      auto [it, inserted] = id_of.emplace(label, level.num_clusters);
      if (inserted) {
        level.names.push_back(label);
        ++level.num_clusters;
      }
      const int cluster = it->second;
      of_stock[i] = cluster;
      int& parent = level.parent[static_cast<std::size_t>(prev_of_stock[i])];
      if (parent >= 0 && parent != cluster) {
        const std::string child = l == 0 ? tickers[i] : levels.back().names[prev_of_stock[i]];
        throw Error(ErrorCode::InconsistentNesting,
                    "level-" + std::to_string(l) + " unit \"" + child + "\" is placed under both \"" +
                        level.names[parent] + "\" and \"" + label + "\" at level " + std::to_string(l + 1));
      }
      parent = cluster;
    }
    prev_of_stock = std::move(of_stock);
    prev_count = level.num_clusters;
    levels.push_back(std::move(level));
  }
  return ClassificationTree(std::move(tickers), std::move(levels));
}

int ClassificationTree::num_clusters(std::size_t level) const {
  return level == 0 ? static_cast<int>(tickers_.size()) : this->level(level).num_clusters;
}

const ClassificationLevel& ClassificationTree::level(std::size_t level) const {
  if (level == 0 || level > levels_.size()) {
    throw Error(ErrorCode::InvalidArgument, "level " + std::to_string(level) + " is outside 1.." +
                                                std::to_string(levels_.size()));
  }
  return levels_[level - 1];
}

std::vector<int> ClassificationTree::stock_to_cluster(std::size_t level) const {
  std::vector<int> map(tickers_.size());
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<int>(i);
  for (std::size_t l = 1; l <= level; ++l) {
    const auto& parent = parent_map(l);
    for (auto& unit : map) unit = unit < 0 ? -1 : parent.at(static_cast<std::size_t>(unit));
  }
  return map;
}

std::vector<std::vector<int>> ClassificationTree::members(std::size_t level) const {
  const auto& lvl = this->level(level);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(lvl.num_clusters));
  for (std::size_t unit = 0; unit < lvl.parent.size(); ++unit) {
    const int cluster = lvl.parent[unit];
    if (cluster >= 0 && cluster < lvl.num_clusters) out[cluster].push_back(static_cast<int>(unit));
  }
  return out;
}

std::string ClassificationTree::cluster_name(std::size_t level, int cluster) const {
  const auto& lvl = this->level(level);
  if (cluster >= 0 && static_cast<std::size_t>(cluster) < lvl.names.size() && !lvl.names[cluster].empty()) {
    return lvl.names[cluster];
  }
  return "L" + std::to_string(level) + "_" + std::to_string(cluster);
}

// ---------------------------------------------------------------------------
// BetaVector

BetaVector::BetaVector(Eigen::VectorXd values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_(i)) || values_(i) <= 0.0) {
      std::ostringstream msg;
      msg << "beta[" << i << "] = " << values_(i) << " is not strictly positive";
      throw Error(ErrorCode::InvalidBeta, msg.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Validation

std::vector<TreeWarning> validate_tree(const ClassificationTree& tree, std::span<const std::string> tickers) {
  if (tree.num_levels() < 1) throw Error(ErrorCode::InvalidTree, "classification has no levels");
  if (tree.num_stocks() != tickers.size() ||
      !std::equal(tickers.begin(), tickers.end(), tree.tickers().begin())) {
    throw Error(ErrorCode::InvalidTree, "classification tickers are not aligned with the panel");
  }

  std::vector<TreeWarning> warnings;
  int prev_count = static_cast<int>(tree.num_stocks());
  for (std::size_t l = 1; l <= tree.num_levels(); ++l) {
    const auto& lvl = tree.level(l);
    if (lvl.num_clusters < 1) {
      throw Error(ErrorCode::EmptyLevel, "level " + std::to_string(l) + " has no clusters");
    }
    if (lvl.parent.size() != static_cast<std::size_t>(prev_count)) {
      throw Error(ErrorCode::InvalidTree, "level " + std::to_string(l) + " maps " +
                                              std::to_string(lvl.parent.size()) + " units, expected " +
                                              std::to_string(prev_count));
    }
    if (lvl.num_clusters > prev_count) {
      throw Error(ErrorCode::InvalidTree, "level " + std::to_string(l) + " has more clusters than level " +
                                              std::to_string(l - 1));
    }
    std::vector<int> sizes(static_cast<std::size_t>(lvl.num_clusters), 0);
    for (std::size_t unit = 0; unit < lvl.parent.size(); ++unit) {
      const int cluster = lvl.parent[unit];
      if (cluster < 0 || cluster >= lvl.num_clusters) {
        if (l == 1) {
          throw Error(ErrorCode::UnmappedStock, "ticker " + tree.tickers()[unit] + " has no level-1 cluster");
        }
        throw Error(ErrorCode::InvalidTree, "cluster " + tree.cluster_name(l - 1, static_cast<int>(unit)) +
                                                " has no parent at level " + std::to_string(l));
      }
      ++sizes[cluster];
    }
    for (int a = 0; a < lvl.num_clusters; ++a) {
      if (sizes[a] == 0) {
        throw Error(ErrorCode::InvalidTree, "cluster " + tree.cluster_name(l, a) + " at level " +
                                                std::to_string(l) + " is empty");
      }
      if (sizes[a] == 1) {
        warnings.push_back({TreeWarning::Kind::SingletonCluster, l, a, tree.cluster_name(l, a)});
      }
    }
    prev_count = lvl.num_clusters;
  }
  return warnings;
}

std::vector<TreeWarning> validate_tree(const ClassificationTree& tree, const ReturnsPanel& panel) {
  return validate_tree(tree, std::span<const std::string>(panel.tickers()));
}

// ---------------------------------------------------------------------------
// CSV ingestion

ReturnsPanel load_returns_csv(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::MalformedFile, "'" + path.string() + "' is empty");

  auto header = csv::split(lines.front().text);
  if (header.size() < 3) {
    throw Error(ErrorCode::InsufficientObservations,
                "'" + path.string() + "' has fewer than 2 date columns (T < 2)");
  }
  std::vector<std::string> dates(header.begin() + 1, header.end());
  require_unique(dates, ErrorCode::DuplicateDate, "date");

  std::vector<std::string> tickers;
  std::vector<std::vector<double>> rows;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    auto cells = csv::split(line.text);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::MalformedFile, "row " + std::to_string(line.number) + " has " +
                                                std::to_string(cells.size()) + " cells, header has " +
                                                std::to_string(header.size()));
    }
    if (cells[0].empty()) {
      throw Error(ErrorCode::MalformedFile, "row " + std::to_string(line.number) + " has an empty ticker");
    }
    if (!seen.insert(cells[0]).second) {
      throw Error(ErrorCode::DuplicateTicker, "ticker \"" + cells[0] + "\" appears more than once (row " +
                                                  std::to_string(line.number) + ")");
    }
    std::vector<double> row(dates.size());
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto value = csv::parse_double(cells[c]);
      if (!value) {
        throw Error(ErrorCode::NonNumericCell, "cell \"" + cells[c] + "\" at row " +
                                                   std::to_string(line.number) + ", column " +
                                                   std::to_string(c + 1) + " is not a number");
      }
      if (!std::isfinite(*value)) {
        throw Error(ErrorCode::NonFiniteValue, "cell at row " + std::to_string(line.number) + ", column " +
                                                   std::to_string(c + 1) + " is not finite");
      }
      row[c - 1] = *value;
    }
    tickers.push_back(std::move(cells[0]));
    rows.push_back(std::move(row));
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dates.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t s = 0; s < dates.size(); ++s) values(i, s) = rows[i][s];
  }
  return ReturnsPanel(std::move(tickers), std::move(dates), std::move(values));
}

ClassificationTree load_classification_csv(const std::filesystem::path& path, const ReturnsPanel& panel) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::MalformedFile, "'" + path.string() + "' is empty");
  const auto header = csv::split(lines.front().text);
  if (header.size() < 2) {
    throw Error(ErrorCode::MalformedFile, "'" + path.string() + "' needs columns ticker,level1[,...]");
  }
  const std::size_t num_levels = header.size() - 1;

  const auto row_of = index_of(panel.tickers());
  std::vector<std::vector<std::string>> labels(num_levels, std::vector<std::string>(panel.num_stocks()));
  std::vector<bool> found(panel.num_stocks(), false);

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    const auto cells = csv::split(line.text);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::MalformedFile, "row " + std::to_string(line.number) + " has " +
                                                std::to_string(cells.size()) + " cells, header has " +
                                                std::to_string(header.size()));
    }
    const auto it = row_of.find(cells[0]);
    if (it == row_of.end()) continue;  // tickers outside the panel universe are ignored
    if (found[it->second]) {
      throw Error(ErrorCode::DuplicateTicker, "ticker \"" + cells[0] + "\" appears more than once (row " +
                                                  std::to_string(line.number) + ")");
    }
    found[it->second] = true;
    for (std::size_t l = 0; l < num_levels; ++l) {
      if (cells[l + 1].empty()) {
        throw Error(ErrorCode::EmptyLevel, "row " + std::to_string(line.number) + " has an empty " +
                                               header[l + 1] + " label");
      }
      labels[l][it->second] = cells[l + 1];
    }
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (!found[i]) {
      throw Error(ErrorCode::MissingTicker, "ticker \"" + panel.tickers()[i] + "\" is missing from '" +
                                                path.string() + "'");
    }
  }

  auto tree = ClassificationTree::from_labels(panel.tickers(), labels);
  validate_tree(tree, panel);
  return tree;
}

void write_returns_csv(const ReturnsPanel& panel, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  out << "ticker";
  for (const auto& d : panel.dates()) out << ',' << d;
  out << '\n';
  for (std::size_t i = 0; i < panel.num_stocks(); ++i) {
    out << panel.tickers()[i];
    for (std::size_t s = 0; s < panel.num_periods(); ++s) {
      out << ',' << csv::format_double(panel.values()(i, s));
    }
    out << '\n';
  }
}

void write_classification_csv(const ClassificationTree& tree, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  out << "ticker";
  for (std::size_t l = 1; l <= tree.num_levels(); ++l) out << ",level" << l;
  out << '\n';
  std::vector<std::vector<int>> maps;
  for (std::size_t l = 1; l <= tree.num_levels(); ++l) maps.push_back(tree.stock_to_cluster(l));
  for (std::size_t i = 0; i < tree.num_stocks(); ++i) {
    out << tree.tickers()[i];
    for (std::size_t l = 1; l <= tree.num_levels(); ++l) out << ',' << tree.cluster_name(l, maps[l - 1][i]);
    out << '\n';
  }
}

Eigen::VectorXd load_ticker_vector_csv(const std::filesystem::path& path, std::span<const std::string> tickers,
                                       const std::string& column) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::MalformedFile, "'" + path.string() + "' is empty");
  const auto header = csv::split(lines.front().text);
  std::size_t col = 1;
  if (!column.empty()) {
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) {
      throw Error(ErrorCode::MalformedFile, "'" + path.string() + "' has no column \"" + column + "\"");
    }
    col = static_cast<std::size_t>(it - header.begin());
  }
  if (header.size() <= col || col == 0) {
    throw Error(ErrorCode::MalformedFile, "'" + path.string() + "' needs columns ticker,value");
  }

  const auto row_of = index_of(tickers);
  Eigen::VectorXd values(static_cast<Eigen::Index>(tickers.size()));
  std::vector<bool> found(tickers.size(), false);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = csv::split(lines[r].text);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::MalformedFile, "row " + std::to_string(lines[r].number) + " of '" + path.string() +
                                                "' has the wrong number of cells");
    }
    const auto it = row_of.find(cells[0]);
    if (it == row_of.end()) continue;
    if (found[it->second]) {
      throw Error(ErrorCode::DuplicateTicker, "ticker \"" + cells[0] + "\" appears more than once in '" +
                                                  path.string() + "'");
    }
    const auto value = csv::parse_double(cells[col]);
    if (!value) {
      throw Error(ErrorCode::NonNumericCell, "cell \"" + cells[col] + "\" at row " +
                                                 std::to_string(lines[r].number) + ", column " +
                                                 std::to_string(col + 1) + " is not a number");
    }
    if (!std::isfinite(*value) && !(column == "upper" && *value > 0)) {
      throw Error(ErrorCode::NonFiniteValue, "value for " + cells[0] + " in '" + path.string() + "' is not finite");
    }
    values(static_cast<Eigen::Index>(it->second)) = *value;
    found[it->second] = true;
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (!found[i]) {
      throw Error(ErrorCode::MissingTicker, "ticker \"" + tickers[i] + "\" is missing from '" + path.string() + "'");
    }
  }
  return values;
}

Eigen::VectorXd load_date_series_csv(const std::filesystem::path& path, std::span<const std::string> dates) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::MalformedFile, "'" + path.string() + "' is empty");
  const auto row_of = index_of(dates);
  Eigen::VectorXd values(static_cast<Eigen::Index>(dates.size()));
  std::vector<bool> found(dates.size(), false);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = csv::split(lines[r].text);
    if (cells.size() < 2) {
      throw Error(ErrorCode::MalformedFile, "row " + std::to_string(lines[r].number) + " of '" + path.string() +
                                                "' needs date,value");
    }
    const auto it = row_of.find(cells[0]);
    if (it == row_of.end()) continue;
    const auto value = csv::parse_double(cells[1]);
    if (!value || !std::isfinite(*value)) {
      throw Error(ErrorCode::NonNumericCell, "cell \"" + cells[1] + "\" at row " +
                                                 std::to_string(lines[r].number) + ", column 2 is not a number");
    }
    values(static_cast<Eigen::Index>(it->second)) = *value;
    found[it->second] = true;
  }
  for (std::size_t s = 0; s < found.size(); ++s) {
    if (!found[s]) {
      throw Error(ErrorCode::MissingTicker, "date \"" + dates[s] + "\" is missing from '" + path.string() + "'");
    }
  }
  return values;
}

}  // namespace rdbench
