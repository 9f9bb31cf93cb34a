#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "ddgkit/ddgkit.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ddgkit;

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_data = 2;
constexpr int exit_oracle = 3;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_report(const harness::EvaluationReport& report, const std::optional<fs::path>& out_dir) {
  std::cout << harness::report_text(report);
  if (!out_dir) return;
  fs::create_directories(*out_dir);
  csv::write_file(*out_dir / "report.json", harness::report_json(report));
  csv::write_file(*out_dir / "report.csv", harness::report_csv(report));
  csv::write_file(*out_dir / "report_long.csv", harness::report_long_csv(report));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddgkit: stability-change estimators from state-conditional likelihoods"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed for every random stream (overrides config files)");

  auto* score = app.add_subcommand("score", "Score dataset variants with every configured strategy");
  fs::path score_config;
  std::optional<fs::path> score_out;
  score->add_option("--config", score_config, "Run config (JSON)")->required();
  score->add_option("-o,--out", score_out, "Scores CSV (default: stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "Correlate scores with experimental targets");
  std::optional<fs::path> eval_config, eval_scores, eval_dataset, eval_out;
  std::string sign = "folding";
  std::size_t min_variants = 20, resamples = 100;
  bool singles_only = false, exclude_censored = false;
  evaluate->add_option("--config", eval_config, "Run config: score and evaluate in one step");
  evaluate->add_option("--scores", eval_scores, "Scores CSV written by `score`");
  evaluate->add_option("--dataset", eval_dataset, "Experimental dataset CSV");
  evaluate->add_option("--sign-convention", sign, "Dataset sign convention")->check(CLI::IsMember({"folding", "unfolding"}));
  evaluate->add_option("--min-variants", min_variants, "Minimum records for a per-protein row");
  evaluate->add_option("--bootstrap", resamples, "Bootstrap resamples");
  evaluate->add_flag("--singles-only", singles_only, "Drop multi-substitution records");
  evaluate->add_flag("--exclude-censored", exclude_censored, "Drop censored records");
  evaluate->add_option("--out-dir", eval_out, "Write report.json, report.csv and report_long.csv here");

  auto* oracle_cmd = app.add_subcommand("oracle", "Verify estimators on an exact lattice scenario");
  fs::path scenario_path;
  std::optional<fs::path> oracle_out;
  oracle_cmd->add_option("--scenario", scenario_path, "Scenario config (JSON)")->required();
  oracle_cmd->add_option("--out-dir", oracle_out, "Write tables, dataset, run config and report here");

  auto* report = app.add_subcommand("report", "Merge report.json files into one comparison table");
  std::vector<std::string> runs;
  std::optional<fs::path> report_out;
  report->add_option("runs", runs, "NAME=report.json pairs")->required();
  report->add_option("-o,--out", report_out, "Comparison CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*score) {
      auto config = harness::load_run_config(score_config);
      if (seed) config.seed = *seed;
      auto data = harness::load_config_dataset(config);
      auto scores = harness::compute_scores(config, data);
      auto text = harness::serialize_scores(scores);
      for (const auto& s : scores.skipped) std::cerr << "skipped " << s.strategy << ": " << s.reason << "\n";
      if (score_out) {
        csv::write_file(*score_out, text);
      } else {
        std::cout << text;
      }
    } else if (*evaluate) {
      if (eval_config) {
        auto config = harness::load_run_config(*eval_config);
        if (seed) config.seed = *seed;
        if (exclude_censored) config.exclude_censored = true;
        write_report(harness::run_strategy_matrix(config), eval_out);
      } else {
        if (!eval_scores || !eval_dataset) throw Error(ErrorKind::config, "evaluate needs --config or --scores with --dataset");
        auto data = load_experimental_dataset(*eval_dataset, parse_sign_convention(sign), min_variants, singles_only);
        auto scores = harness::load_scores(*eval_scores);
        write_report(harness::evaluate_scores(scores, data, {resamples, seed.value_or(0), exclude_censored}), eval_out);
      }
    } else if (*oracle_cmd) {
      auto scenario = oracle::load_scenario(scenario_path);
      if (seed) scenario.seed = scenario.plan.seed = *seed;
      auto result = oracle::run_scenario(scenario);
      std::cout << oracle::report_text(result);
      if (oracle_out) oracle::write_outputs(result, *oracle_out);
      if (!result.passed()) return exit_oracle;
    } else if (*report) {
      std::vector<std::pair<std::string, harness::EvaluationReport>> parsed;
      for (const auto& r : runs) {
        auto eq = r.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::config, "expected NAME=report.json, got '" + r + "'");
        parsed.emplace_back(r.substr(0, eq), harness::parse_report_json(read_text(r.substr(eq + 1))));
      }
      auto text = harness::comparison_csv(parsed);
      if (report_out) {
        csv::write_file(*report_out, text);
      } else {
        std::cout << text;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.category() == ErrorCategory::config ? exit_config : exit_data;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_data;
  }
  return exit_ok;
}
