#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "rdbench/benchmark.hpp"
#include "rdbench/overlay.hpp"
#include "rdbench/risk_model.hpp"

namespace rdbench {

/// ticker,weight,beta,xi2,gamma_cluster
void write_weights_csv(const std::filesystem::path& path, const RussianDollModel& model,
                       const BenchmarkResult& result);

/// ticker,w_star,w_prime,w_combined
void write_overlay_csv(const std::filesystem::path& path, std::span<const std::string> tickers,
                       const Eigen::VectorXd& w_star, const OverlayResult& result);

/// Pretty-printed with a trailing newline; key order is preserved by the
/// caller's object type.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

std::string to_string(TuneStatus status);
std::string to_string(ConstraintMode mode);

nlohmann::ordered_json overlay_summary(const OverlayResult& result);

}  // namespace rdbench
