#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rdbench {

/// Effective settings of one CLI run. A JSON config file uses the same keys;
/// command-line flags override it.
struct RunConfig {
  // inputs / outputs
  std::string returns;
  std::string classification;
  std::string out = ".";
  std::string model;  // overlay: model.json from an earlier benchmark run

  // betas
  std::string beta_mode = "sigma";  // sigma | capped | explicit
  std::string betas;                // explicit betas CSV
  std::string index_returns;        // capped mode index series CSV
  double kappa_max = 1.0;
  double kappa_min = 1.0;

  // risk model
  double z_min = 0.1;
  double z_max = 0.9;
  bool mkt_fac = true;
  bool strict_beta_range = true;
  std::string aggregation = "unweighted";  // unweighted | loading-weighted

  // overlay
  std::string signal;
  std::string bounds;
  std::vector<std::string> constraints{"dollar-neutral"};
  std::string normalize = "sum";  // benchmark scale for the overlay: sum (sum w* = 1) | beta (sum w* beta = 1)
  double band_z = 0.5;
  double gamma_max = 0.0;  // 0 picks a default from the problem
  double tol = 1e-6;
  bool residualize = false;

  // synth
  int n = 16;
  int t = 500;
  std::vector<int> clusters{4};
  std::vector<double> rho{0.4};
  double market_corr = 0.1;
  double vol_log_mean = -3.912;
  double vol_log_sd = 0.3;
  double alpha = 0.0;  // > 0 also writes a planted signal
  std::uint64_t seed = 42;
};

nlohmann::ordered_json to_json(const RunConfig& config);

/// Overlays the keys present in `j` onto `base`; unknown keys are an error.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

/// Entry point behind the rdbench binary. Returns the process exit status:
/// 0 success, 2 input error, 3 model error, 4 optimizer non-convergence.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args exclude the program name

}  // namespace rdbench
