#include <doctest.h>

#include <iostream>
#include <sstream>

#include <json.hpp>

#include "rdbench/cli.hpp"
#include "rdbench/data_model.hpp"
#include "support/instances.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  CliRun r;
  r.code = rdbench::run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Column `name` of a CSV with a header row.
std::vector<double> column(const fs::path& path, const std::string& name) {
  std::istringstream in(rdtest::read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  const auto idx = std::find(header.begin(), header.end(), name) - header.begin();
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string cell;
    for (long k = 0; k <= idx; ++k) std::getline(ls, cell, ',');
    values.push_back(std::stod(cell));
  }
  return values;
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(rdtest::read_text(path)); }

fs::path synth(const fs::path& root, std::vector<std::string> extra = {}) {
  const fs::path dir = root / "data";
  std::vector<std::string> args{"synth", "--out", dir.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  REQUIRE(run(args).code == 0);
  return dir;
}

std::vector<std::string> inputs(const fs::path& data) {
  return {"--returns", (data / "returns.csv").string(), "--classification", (data / "classification.csv").string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("synth is byte-reproducible and validates its spec") {
    const fs::path root = rdtest::scratch_dir("cli_synth");
    for (const char* sub : {"a", "b"}) {
      REQUIRE(run({"synth", "--seed", "7", "--alpha", "0.3", "--out", (root / sub).string()}).code == 0);
    }
    for (const char* f : {"returns.csv", "classification.csv", "signal.csv"}) {
      CHECK(rdtest::read_text(root / "a" / f) == rdtest::read_text(root / "b" / f));
    }
    const CliRun bad = run({"synth", "--n", "3", "--clusters", "4", "--out", (root / "c").string()});
    CHECK(bad.code == 2);
    CHECK(!bad.err.empty());
  }

  TEST_CASE("benchmark on the default synthetic panel") {
    const fs::path root = rdtest::scratch_dir("cli_bench");
    const fs::path data = synth(root);
    const CliRun r = run(concat({"benchmark", "--out", (root / "b").string()}, inputs(data)));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("N=16 P=1 K=[4]") != std::string::npos);
    const auto w = column(root / "b" / "weights.csv", "weight");
    const auto beta = column(root / "b" / "weights.csv", "beta");
    REQUIRE(w.size() == 16);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i] > 0.0);
      sum += w[i] * beta[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    const auto side = read_json(root / "b" / "benchmark.json");
    CHECK(side["num_stocks"] == 16);
    CHECK(side["config"]["z_max"] == 0.9);

    REQUIRE(run(concat({"benchmark", "--out", (root / "b2").string()}, inputs(data))).code == 0);
    for (const char* f : {"weights.csv", "model.json", "benchmark.json"}) {
      CHECK(rdtest::read_text(root / "b" / f) == rdtest::read_text(root / "b2" / f));
    }
  }

  TEST_CASE("malformed returns exit 2 naming the cell") {
    const fs::path root = rdtest::scratch_dir("cli_bad");
    const fs::path data = synth(root);
    std::string text = rdtest::read_text(data / "returns.csv");
    const auto row = text.find("\nS003,");
    const auto cell = row + 6;
    text.replace(cell, text.find(',', cell) - cell, "abc");
    rdtest::write_text(data / "returns.csv", text);
    const CliRun r = run(concat({"benchmark", "--out", (root / "b").string()}, inputs(data)));
    CHECK(r.code == 2);
    CHECK(r.err.find("\"abc\"") != std::string::npos);
    CHECK(r.err.find("row 5, column 2") != std::string::npos);
  }

  TEST_CASE("beta-hat dispersion beyond the admissible ratio exits 3 naming tickers") {
    const fs::path root = rdtest::scratch_dir("cli_disp");
    const fs::path data = synth(root);
    REQUIRE(run(concat({"betas", "--out", (root / "s").string()}, {"--returns", (data / "returns.csv").string()}))
                .code == 0);
    std::string text = rdtest::read_text(root / "s" / "betas.csv");
    // Triple the first stock's beta: its beta-hat becomes 3 against 1.
    const auto start = text.find("\nS000,") + 6;
    const auto end = text.find('\n', start);
    const double b0 = std::stod(text.substr(start, end - start));
    std::ostringstream tripled;
    tripled.precision(17);
    tripled << 3 * b0;
    text.replace(start, end - start, tripled.str());
    rdtest::write_text(root / "betas.csv", text);
    const CliRun r = run(concat({"benchmark", "--beta-mode", "explicit", "--betas", (root / "betas.csv").string(),
                                 "--out", (root / "b").string()},
                                inputs(data)));
    CHECK(r.code == 3);
    CHECK(r.err.find("S000") != std::string::npos);
    CHECK(r.err.find("InadmissibleBetaDispersion") != std::string::npos);
  }

  TEST_CASE("betas subcommand writes sample volatilities") {
    const fs::path root = rdtest::scratch_dir("cli_betas");
    const fs::path data = synth(root);
    REQUIRE(run({"betas", "--returns", (data / "returns.csv").string(), "--out", (root / "s").string()}).code == 0);
    const auto beta = column(root / "s" / "betas.csv", "beta");
    const auto panel = rdbench::load_returns_csv(data / "returns.csv");
    const Eigen::VectorXd sigma = rdbench::volatilities(rdbench::sample_covariance(panel));
    REQUIRE(beta.size() == static_cast<std::size_t>(sigma.size()));
    for (std::size_t i = 0; i < beta.size(); ++i) CHECK(beta[i] == doctest::Approx(sigma(i)).epsilon(1e-14));
  }

  TEST_CASE("overlay with a zero signal leaves the benchmark unchanged") {
    const fs::path root = rdtest::scratch_dir("cli_zero");
    const fs::path data = synth(root);
    std::string signal = "ticker,expected\n";
    for (int i = 0; i < 16; ++i) signal += "S" + std::string(i < 10 ? "00" : "0") + std::to_string(i) + ",0\n";
    rdtest::write_text(root / "zero.csv", signal);
    const CliRun r = run(concat({"overlay", "--signal", (root / "zero.csv").string(), "--out", (root / "o").string()},
                                inputs(data)));
    REQUIRE(r.code == 0);
    for (double w : column(root / "o" / "overlay.csv", "w_prime")) CHECK(w == 0.0);
    CHECK(column(root / "o" / "overlay.csv", "w_combined") == column(root / "o" / "overlay.csv", "w_star"));
    CHECK(read_json(root / "o" / "overlay.json")["status"] == "no_signal");
  }

  TEST_CASE("overlay with a planted signal improves the Sharpe ratio") {
    const fs::path root = rdtest::scratch_dir("cli_alpha");
    const fs::path data = synth(root, {"--alpha", "0.5"});
    for (const std::string modes : {"dollar-neutral", "dollar-neutral,zero-correlation"}) {
      const fs::path out = root / modes;
      const CliRun r = run(concat({"overlay", "--signal", (data / "signal.csv").string(), "--constraints", modes,
                                   "--out", out.string()},
                                  inputs(data)));
      REQUIRE(r.code == 0);
      const auto j = read_json(out / "overlay.json");
      CHECK(j["sharpe_opt"].get<double>() >= j["sharpe_zero"].get<double>());
      CHECK(j["kkt_ok"] == true);
      CHECK(std::abs(j["sleeve_sum"].get<double>()) <= 1e-10);
      const auto w_star = column(out / "overlay.csv", "w_star");
      double total = 0.0;
      for (double w : w_star) total += w;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      for (double w : column(out / "overlay.csv", "w_combined")) CHECK(w >= 0.0);
      if (modes != "dollar-neutral") CHECK(std::abs(j["rho"].get<double>()) <= 1e-8);
    }
  }

  TEST_CASE("overlay from a saved model equals the inline run") {
    const fs::path root = rdtest::scratch_dir("cli_compose");
    const fs::path data = synth(root, {"--alpha", "0.5"});
    REQUIRE(run(concat({"benchmark", "--out", (root / "b").string()}, inputs(data))).code == 0);
    const std::vector<std::string> common{"overlay", "--signal", (data / "signal.csv").string()};
    REQUIRE(run(concat(common, concat({"--out", (root / "inline").string()}, inputs(data)))).code == 0);
    REQUIRE(run(concat(common, {"--model", (root / "b" / "model.json").string(), "--out", (root / "saved").string()}))
                .code == 0);
    CHECK(rdtest::read_text(root / "inline" / "overlay.csv") == rdtest::read_text(root / "saved" / "overlay.csv"));
    auto a = read_json(root / "inline" / "overlay.json");
    auto b = read_json(root / "saved" / "overlay.json");
    a.erase("config");
    b.erase("config");
    CHECK(a == b);
  }

  TEST_CASE("infeasible bounds exit 2") {
    const fs::path root = rdtest::scratch_dir("cli_bounds");
    const fs::path data = synth(root, {"--alpha", "0.5"});
    std::string bounds = "ticker,lower,upper\n";
    for (int i = 0; i < 16; ++i) {
      bounds += "S" + std::string(i < 10 ? "00" : "0") + std::to_string(i) + (i == 3 ? ",0,-0.001\n" : ",-0.001,0.001\n");
    }
    rdtest::write_text(root / "bounds.csv", bounds);
    const CliRun r = run(concat({"overlay", "--signal", (data / "signal.csv").string(), "--bounds",
                                 (root / "bounds.csv").string(), "--out", (root / "o").string()},
                                inputs(data)));
    CHECK(r.code == 2);
    CHECK(r.err.find("infeasible") != std::string::npos);
  }

  TEST_CASE("config files, flag overrides and argument errors") {
    const fs::path root = rdtest::scratch_dir("cli_config");
    rdtest::write_text(root / "cfg.json", R"({"seed": 7, "n": 12, "clusters": [3]})");
    REQUIRE(run({"synth", "--config", (root / "cfg.json").string(), "--out", (root / "a").string()}).code == 0);
    REQUIRE(run({"synth", "--seed", "7", "--n", "12", "--clusters", "3", "--out", (root / "b").string()}).code == 0);
    CHECK(rdtest::read_text(root / "a" / "returns.csv") == rdtest::read_text(root / "b" / "returns.csv"));
    REQUIRE(run({"synth", "--config", (root / "cfg.json").string(), "--n", "16", "--out", (root / "c").string()})
                .code == 0);
    CHECK(rdbench::load_returns_csv(root / "c" / "returns.csv").num_stocks() == 16);

    rdtest::write_text(root / "bad.json", R"({"sede": 7})");
    CHECK(run({"synth", "--config", (root / "bad.json").string(), "--out", (root / "d").string()}).code == 2);
    CHECK(run({"synth", "--no-such-flag"}).code == 2);
    CHECK(run({"benchmark", "--out", (root / "e").string()}).code == 2);
    CHECK(run({"--help"}).code == 0);

    rdbench::RunConfig cfg;
    cfg.seed = 99;
    cfg.constraints = {"dollar-neutral", "orthogonal"};
    const rdbench::RunConfig back = rdbench::run_config_from_json(rdbench::to_json(cfg));
    CHECK(back.seed == 99);
    CHECK(back.constraints == cfg.constraints);
    CHECK(rdbench::to_json(back) == rdbench::to_json(cfg));
  }
}
