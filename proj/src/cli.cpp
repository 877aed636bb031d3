#include "rdbench/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "csv.hpp"
#include "rdbench/benchmark.hpp"
#include "rdbench/data_model.hpp"
#include "rdbench/errors.hpp"
#include "rdbench/overlay.hpp"
#include "rdbench/report.hpp"
#include "rdbench/risk_model.hpp"
#include "rdbench/stats.hpp"
#include "rdbench/synthetic.hpp"

namespace rdbench {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

nlohmann::ordered_json to_json(const RunConfig& c) {
  ojson j;
  j["returns"] = c.returns;
  j["classification"] = c.classification;
  j["out"] = c.out;
  j["model"] = c.model;
  j["beta_mode"] = c.beta_mode;
  j["betas"] = c.betas;
  j["index_returns"] = c.index_returns;
  j["kappa_max"] = c.kappa_max;
  j["kappa_min"] = c.kappa_min;
  j["z_min"] = c.z_min;
  j["z_max"] = c.z_max;
  j["mkt_fac"] = c.mkt_fac;
  j["strict_beta_range"] = c.strict_beta_range;
  j["aggregation"] = c.aggregation;
  j["signal"] = c.signal;
  j["bounds"] = c.bounds;
  j["constraints"] = c.constraints;
  j["normalize"] = c.normalize;
  j["band_z"] = c.band_z;
  j["gamma_max"] = c.gamma_max;
  j["tol"] = c.tol;
  j["residualize"] = c.residualize;
  j["n"] = c.n;
  j["t"] = c.t;
  j["clusters"] = c.clusters;
  j["rho"] = c.rho;
  j["market_corr"] = c.market_corr;
  j["vol_log_mean"] = c.vol_log_mean;
  j["vol_log_sd"] = c.vol_log_sd;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedFile, "config must be a JSON object");
  const ojson known = to_json(base);
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
#define RDBENCH_FIELD(name) \
  if (key == #name) value.get_to(base.name);
      RDBENCH_FIELD(returns)
      RDBENCH_FIELD(classification)
      RDBENCH_FIELD(out)
      RDBENCH_FIELD(model)
      RDBENCH_FIELD(beta_mode)
      RDBENCH_FIELD(betas)
      RDBENCH_FIELD(index_returns)
      RDBENCH_FIELD(kappa_max)
      RDBENCH_FIELD(kappa_min)
      RDBENCH_FIELD(z_min)
      RDBENCH_FIELD(z_max)
      RDBENCH_FIELD(mkt_fac)
      RDBENCH_FIELD(strict_beta_range)
      RDBENCH_FIELD(aggregation)
      RDBENCH_FIELD(signal)
      RDBENCH_FIELD(bounds)
      RDBENCH_FIELD(constraints)
      RDBENCH_FIELD(normalize)
      RDBENCH_FIELD(band_z)
      RDBENCH_FIELD(gamma_max)
      RDBENCH_FIELD(tol)
      RDBENCH_FIELD(residualize)
      RDBENCH_FIELD(n)
      RDBENCH_FIELD(t)
      RDBENCH_FIELD(clusters)
      RDBENCH_FIELD(rho)
      RDBENCH_FIELD(market_corr)
      RDBENCH_FIELD(vol_log_mean)
      RDBENCH_FIELD(vol_log_sd)
      RDBENCH_FIELD(alpha)
      RDBENCH_FIELD(seed)
#undef RDBENCH_FIELD
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("config value has the wrong type: ") + e.what());
  }
  return base;
}

namespace {

ojson echo(const RunConfig& c, std::initializer_list<const char*> keys) {
  const ojson all = to_json(c);
  ojson out = ojson::object();
  for (const char* key : keys) out[key] = all.at(key);
  return out;
}

constexpr std::initializer_list<const char*> kBenchmarkKeys = {
    "returns", "classification", "beta_mode", "betas", "index_returns", "kappa_max", "kappa_min",
    "z_min",   "z_max",          "mkt_fac",   "strict_beta_range", "aggregation"};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path dir(c.out.empty() ? "." : c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create output directory '" + dir.string() + "'");
  return dir;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
}

RiskModelConfig risk_config(const RunConfig& c) {
  RiskModelConfig r;
  r.theta = {c.z_min, c.z_max};
  r.theta.validate();
  r.mkt_fac = c.mkt_fac;
  r.strict_beta_range = c.strict_beta_range;
  if (c.aggregation == "unweighted") {
    r.aggregation = Aggregation::Unweighted;
  } else if (c.aggregation == "loading-weighted") {
    r.aggregation = Aggregation::LoadingWeighted;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown aggregation '" + c.aggregation + "'");
  }
  return r;
}

BetaVector betas_for(const RunConfig& c, const ReturnsPanel& panel) {
  BetaSpec spec;
  spec.kappa_max = c.kappa_max;
  spec.kappa_min = c.kappa_min;
  std::optional<Eigen::VectorXd> index;
  if (c.beta_mode == "sigma") {
    spec.mode = BetaMode::ProportionalToSigma;
  } else if (c.beta_mode == "capped") {
    spec.mode = BetaMode::ObservedCapped;
    require(c.index_returns, "--index-returns");
    index = load_date_series_csv(c.index_returns, panel.dates());
  } else if (c.beta_mode == "explicit") {
    spec.mode = BetaMode::Explicit;
    require(c.betas, "--betas");
    spec.explicit_values = load_ticker_vector_csv(c.betas, panel.tickers());
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown beta mode '" + c.beta_mode + "'");
  }
  return make_betas(panel, spec, index);
}

struct Fitted {
  RussianDollModel model;
  std::vector<TreeWarning> warnings;
};

Fitted fit_from_inputs(const RunConfig& c) {
  require(c.returns, "--returns");
  require(c.classification, "--classification");
  const RiskModelConfig rc = risk_config(c);
  const ReturnsPanel panel = load_returns_csv(c.returns);
  const ClassificationTree tree = load_classification_csv(c.classification, panel);
  auto warnings = validate_tree(tree, panel);
  const BetaVector beta = betas_for(c, panel);
  return {build_russian_doll(sample_covariance(panel), tree, beta, rc), std::move(warnings)};
}

void print_warnings(const std::vector<TreeWarning>& warnings) {
  for (const auto& w : warnings) {
    std::cerr << "warning: level " << w.level << " cluster '" << w.name << "' has a single member\n";
  }
}

int cmd_benchmark(const RunConfig& c) {
  const Fitted fitted = fit_from_inputs(c);
  print_warnings(fitted.warnings);
  const RussianDollModel& model = fitted.model;
  const BenchmarkResult result = benchmark_weights(model);
  const fs::path dir = prepare_out(c);

  write_weights_csv(dir / "weights.csv", model, result);
  write_json(dir / "model.json", to_json(model));

  ojson summary;
  summary["num_stocks"] = model.tree.num_stocks();
  summary["num_levels"] = model.num_levels();
  auto& counts = summary["clusters_per_level"] = ojson::array();
  for (std::size_t l = 1; l <= model.num_levels(); ++l) counts.push_back(model.tree.num_clusters(l));
  summary["sigma_f2"] = result.sigma_f2;
  summary["weight_min"] = result.weights.minCoeff();
  summary["weight_max"] = result.weights.maxCoeff();
  summary["sum_w_beta"] = result.weights.dot(model.beta.values());
  summary["top_var"] = model.top_var;
  auto& warn = summary["warnings"] = ojson::array();
  for (const auto& w : fitted.warnings) warn.push_back({{"level", w.level}, {"cluster", w.name}, {"kind", "singleton"}});
  summary["config"] = echo(c, kBenchmarkKeys);
  write_json(dir / "benchmark.json", summary);

  std::cout << "N=" << model.tree.num_stocks() << " P=" << model.num_levels() << " K=[";
  for (std::size_t l = 1; l <= model.num_levels(); ++l) std::cout << (l > 1 ? "," : "") << model.tree.num_clusters(l);
  std::cout << "] sigma_F^2=" << fmt(result.sigma_f2) << " min_w=" << fmt(result.weights.minCoeff())
            << " max_w=" << fmt(result.weights.maxCoeff()) << '\n';
  return 0;
}

std::set<ConstraintMode> parse_modes(const std::vector<std::string>& names) {
  std::set<ConstraintMode> modes{ConstraintMode::DollarNeutral};
  for (const auto& name : names) {
    if (name == "dollar-neutral") {
      modes.insert(ConstraintMode::DollarNeutral);
    } else if (name == "zero-correlation") {
      modes.insert(ConstraintMode::ZeroExpectedCorrelation);
    } else if (name == "orthogonal") {
      modes.insert(ConstraintMode::OrthogonalToBenchmark);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown constraint mode '" + name + "'");
    }
  }
  return modes;
}

int cmd_overlay(const RunConfig& c) {
  require(c.signal, "--signal");
  RussianDollModel model = [&] {
    if (c.model.empty()) {
      Fitted fitted = fit_from_inputs(c);
      print_warnings(fitted.warnings);
      return std::move(fitted.model);
    }
    std::ifstream in(c.model);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + c.model + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedFile, "'" + c.model + "': " + e.what());
    }
    return russian_doll_from_json(j);
  }();

  const BenchmarkResult bench = benchmark_weights(model);
  const auto& tickers = model.tree.tickers();
  const std::set<ConstraintMode> modes = parse_modes(c.constraints);

  OverlayProblem problem;
  problem.gp = assemble_dense(model).values;
  if (c.normalize == "sum") {
    problem.w_star = bench.weights / bench.weights.sum();
  } else if (c.normalize == "beta") {
    problem.w_star = bench.weights;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown normalization '" + c.normalize + "'");
  }
  const Eigen::VectorXd signal = load_ticker_vector_csv(c.signal, tickers);
  if (c.residualize) {
    problem.expected = residualize(signal, problem.w_star);
    problem.sharpe_returns = signal;
  } else {
    problem.expected = signal;
  }
  if (c.bounds.empty()) {
    std::tie(problem.lower, problem.upper) = band_bounds(problem.w_star, c.band_z);
  } else {
    problem.lower = load_ticker_vector_csv(c.bounds, tickers, "lower");
    problem.upper = load_ticker_vector_csv(c.bounds, tickers, "upper");
  }
  problem.q = build_constraints(modes, problem.gp, problem.w_star);
  problem.validate();

  const double gamma_max = c.gamma_max > 0.0 ? c.gamma_max : default_gamma_max(problem);
  const OverlayResult result = tune_gamma(problem, gamma_max, c.tol);
  const bool kkt_ok = result.gamma_prime > 0.0 ? verify_kkt(problem, result.gamma_prime, result.w_prime).ok : true;

  const fs::path dir = prepare_out(c);
  write_overlay_csv(dir / "overlay.csv", tickers, problem.w_star, result);

  ojson summary = overlay_summary(result);
  summary["gamma_max"] = gamma_max;
  summary["kkt_ok"] = kkt_ok;
  auto& mode_names = summary["constraint_modes"] = ojson::array();
  for (ConstraintMode m : modes) mode_names.push_back(to_string(m));
  ojson config = echo(c, kBenchmarkKeys);
  const ojson all = to_json(c);
  for (const char* key : {"model", "signal", "bounds", "normalize", "constraints", "band_z", "gamma_max", "tol", "residualize"}) {
    config[key] = all.at(key);
  }
  summary["config"] = config;
  write_json(dir / "overlay.json", summary);

  std::cout << "gamma'=" << fmt(result.gamma_prime) << " (" << to_string(result.status) << ") S(0)="
            << fmt(result.sharpe_zero) << " S(opt)=" << fmt(result.sharpe_opt)
            << " active=" << result.active_bounds << '\n';
  return 0;
}

int cmd_synth(const RunConfig& c) {
  SyntheticSpec spec;
  spec.num_stocks = c.n;
  spec.num_periods = c.t;
  spec.clusters = c.clusters;
  spec.rho = c.rho;
  spec.market_corr = c.market_corr;
  spec.vol_log_mean = c.vol_log_mean;
  spec.vol_log_sd = c.vol_log_sd;
  spec.seed = c.seed;
  const SyntheticData data = generate_synthetic(spec);

  const fs::path dir = prepare_out(c);
  write_returns_csv(data.panel, dir / "returns.csv");
  write_classification_csv(data.tree, dir / "classification.csv");
  if (c.alpha > 0.0) {
    const Eigen::VectorXd e = synthetic_signal(data.sigma, c.alpha, c.seed ^ 0x9E3779B97F4A7C15ULL);
    auto out = csv::open_output(dir / "signal.csv");
    out << "ticker,expected\n";
    for (std::size_t i = 0; i < data.panel.num_stocks(); ++i) {
      out << data.panel.tickers()[i] << ',' << csv::format_double(e(static_cast<Eigen::Index>(i))) << '\n';
    }
  }
  std::cout << "wrote " << data.panel.num_stocks() << " x " << data.panel.num_periods() << " panel with "
            << data.tree.num_levels() << " level(s) to " << dir.string() << '\n';
  return 0;
}

int cmd_betas(const RunConfig& c) {
  require(c.returns, "--returns");
  const ReturnsPanel panel = load_returns_csv(c.returns);
  const BetaVector beta = betas_for(c, panel);
  const fs::path dir = prepare_out(c);
  auto out = csv::open_output(dir / "betas.csv");
  out << "ticker,beta\n";
  for (std::size_t i = 0; i < panel.num_stocks(); ++i) {
    out << panel.tickers()[i] << ',' << csv::format_double(beta[i]) << '\n';
  }
  std::cout << "wrote " << panel.num_stocks() << " betas (" << c.beta_mode << ") to " << dir.string() << '\n';
  return 0;
}

/// Pulls --config out of the argument list and applies the file.
RunConfig apply_config_file(std::vector<std::string>& args) {
  RunConfig config;
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string path;
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k + 2));
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open config '" + path + "'");
    try {
      config = run_config_from_json(nlohmann::json::parse(in), config);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedFile, "config '" + path + "': " + e.what());
    }
    --k;
  }
  return config;
}

}  // namespace

int run_cli(const std::vector<std::string>& input) {
  std::vector<std::string> args = input;
  try {
    RunConfig c = apply_config_file(args);

    CLI::App app{"Nested-factor benchmark weights and dollar-neutral overlays", "rdbench"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto add_out = [&](CLI::App* sub) { sub->add_option("--out", c.out, "Output directory"); };
    auto add_betas = [&](CLI::App* sub) {
      sub->add_option("--beta-mode", c.beta_mode, "sigma | capped | explicit");
      sub->add_option("--betas", c.betas, "CSV ticker,beta for explicit mode");
      sub->add_option("--index-returns", c.index_returns, "CSV date,return for capped mode");
      sub->add_option("--kappa-max", c.kappa_max);
      sub->add_option("--kappa-min", c.kappa_min);
    };
    auto add_model = [&](CLI::App* sub) {
      sub->add_option("--returns", c.returns, "CSV ticker,<dates...>");
      sub->add_option("--classification", c.classification, "CSV ticker,level1..levelP");
      add_betas(sub);
      sub->add_option("--z-min", c.z_min);
      sub->add_option("--z-max", c.z_max);
      sub->add_option("--mkt-fac", c.mkt_fac, "Fit a market variance on top (true/false)");
      sub->add_option("--strict-beta-range", c.strict_beta_range);
      sub->add_option("--aggregation", c.aggregation, "unweighted | loading-weighted");
    };

    CLI::App* bench = app.add_subcommand("benchmark", "Fit the nested model and write benchmark weights");
    add_model(bench);
    add_out(bench);

    CLI::App* overlay = app.add_subcommand("overlay", "Tune and write a dollar-neutral overlay");
    add_model(overlay);
    overlay->add_option("--model", c.model, "model.json from a benchmark run (skips refitting)");
    overlay->add_option("--signal", c.signal, "CSV ticker,expected_return");
    overlay->add_option("--bounds", c.bounds, "CSV ticker,lower,upper");
    overlay->add_option("--constraints", c.constraints, "dollar-neutral, zero-correlation, orthogonal")
        ->delimiter(',');
    overlay->add_option("--normalize", c.normalize, "Benchmark scale: sum | beta");
    overlay->add_option("--band-z", c.band_z);
    overlay->add_option("--gamma-max", c.gamma_max);
    overlay->add_option("--tol", c.tol);
    overlay->add_option("--residualize", c.residualize);
    add_out(overlay);

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic panel and classification");
    synth->add_option("--n", c.n);
    synth->add_option("--t", c.t);
    synth->add_option("--clusters", c.clusters, "Clusters per level, finest first")->delimiter(',');
    synth->add_option("--rho", c.rho, "Planted correlation per level")->delimiter(',');
    synth->add_option("--market-corr", c.market_corr);
    synth->add_option("--vol-log-mean", c.vol_log_mean);
    synth->add_option("--vol-log-sd", c.vol_log_sd);
    synth->add_option("--alpha", c.alpha, "Scale of a planted signal (0: none)");
    synth->add_option("--seed", c.seed);
    add_out(synth);

    CLI::App* betas = app.add_subcommand("betas", "Compute target betas only");
    betas->add_option("--returns", c.returns);
    add_betas(betas);
    add_out(betas);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }

    if (bench->parsed()) return cmd_benchmark(c);
    if (overlay->parsed()) return cmd_overlay(c);
    if (synth->parsed()) return cmd_synth(c);
    return cmd_betas(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args);
}

}  // namespace rdbench
