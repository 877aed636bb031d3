#include "rdbench/report.hpp"

#include "csv.hpp"

namespace rdbench {

void write_weights_csv(const std::filesystem::path& path, const RussianDollModel& model,
                       const BenchmarkResult& result) {
  auto out = csv::open_output(path);
  const auto& tickers = model.tree.tickers();
  const auto& parent = model.tree.parent_map(1);
  out << "ticker,weight,beta,xi2,gamma_cluster\n";
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out << tickers[i] << ',' << csv::format_double(result.weights(k)) << ','
        << csv::format_double(model.beta[i]) << ',' << csv::format_double(model.xi2(k)) << ','
        << csv::format_double(result.gamma(parent[i])) << '\n';
  }
}

void write_overlay_csv(const std::filesystem::path& path, std::span<const std::string> tickers,
                       const Eigen::VectorXd& w_star, const OverlayResult& result) {
  auto out = csv::open_output(path);
  out << "ticker,w_star,w_prime,w_combined\n";
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out << tickers[i] << ',' << csv::format_double(w_star(k)) << ',' << csv::format_double(result.w_prime(k))
        << ',' << csv::format_double(result.combined(k)) << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  auto out = csv::open_output(path);
  out << doc.dump(2) << '\n';
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  auto out = csv::open_output(path);
  out << doc.dump(2) << '\n';
}

std::string to_string(TuneStatus status) {
  switch (status) {
    case TuneStatus::Interior: return "interior";
    case TuneStatus::BracketSaturated: return "bracket_saturated";
    case TuneStatus::ZeroOptimal: return "zero_optimal";
    case TuneStatus::NoSignal: return "no_signal";
  }
  return "unknown";
}

std::string to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::DollarNeutral: return "dollar-neutral";
    case ConstraintMode::ZeroExpectedCorrelation: return "zero-correlation";
    case ConstraintMode::OrthogonalToBenchmark: return "orthogonal";
  }
  return "unknown";
}

nlohmann::ordered_json overlay_summary(const OverlayResult& result) {
  nlohmann::ordered_json j;
  j["gamma_prime_opt"] = result.gamma_prime;
  j["status"] = to_string(result.status);
  j["sharpe_zero"] = result.sharpe_zero;
  j["sharpe_opt"] = result.sharpe_opt;
  j["rho"] = result.rho ? nlohmann::ordered_json(*result.rho) : nlohmann::ordered_json(nullptr);
  j["active_bounds"] = result.active_bounds;
  j["constraint_residual"] = result.constraint_residual;
  j["sleeve_sum"] = result.w_prime.sum();
  j["evaluations"] = result.evaluations;
  auto& curve = j["sharpe_curve"] = nlohmann::ordered_json::array();
  for (const auto& [gamma, sharpe] : result.sharpe_curve) curve.push_back({gamma, sharpe});
  return j;
}

}  // namespace rdbench
