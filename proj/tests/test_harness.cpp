#include <gtest/gtest.h>

#include <cstdlib>

#include "ddgkit/harness.hpp"
#include "ddgkit/oracle.hpp"
#include "test_util.hpp"

using namespace ddgkit;
using namespace ddgkit::harness;
using testutil::TempDir;
using testutil::write;

namespace {

// One protein, three single mutants, one folded structure.
// Scores are 1, 2, 3; targets 1, 3, 2.
struct SmallCase {
  TempDir dir;
  SmallCase() {
    write(dir / "table.csv",
          "ensemble_id,state,structure_id,sequence,log_likelihood\n"
          "e,F,S1,ACDE,-10\n"
          "e,F,S1,GCDE,-11\n"
          "e,F,S1,AGDE,-12\n"
          "e,F,S1,ACGE,-13\n");
    write(dir / "dataset.csv",
          "protein_id,wild_type_sequence,mutations,target,censored\n"
          "X,ACDE,A1G,1,0\n"
          "X,ACDE,C2G,3,0\n"
          "X,ACDE,D3G,2,0\n");
  }

  json config(std::vector<std::string> strategies = {"folded_single"}) const {
    return json{{"dataset", {{"path", "dataset.csv"}, {"min_variants_per_protein", 3}}},
                {"tables", {{"folded_single", {{"X", "table.csv"}}}}},
                {"strategies", strategies},
                {"bootstrap", {{"resamples", 50}}},
                {"seed", 3}};
  }
};

double plain_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size()), mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string("\"") + DDGKIT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(RunConfig, ParsesSmallCase) {
  SmallCase c;
  auto cfg = parse_run_config(c.config(), c.dir.path());
  EXPECT_EQ(cfg.strategies.size(), 1u);
  EXPECT_EQ(cfg.bootstrap_resamples, 50u);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.dataset.min_variants_per_protein, 3u);
}

TEST(RunConfig, Errors) {
  SmallCase c;
  auto dup = c.config({"folded_single", "folded_single"});
  EXPECT_DDG_ERROR(parse_run_config(dup, c.dir.path()), config);

  auto unknown = c.config({"folded_single", "nonsense"});
  EXPECT_DDG_ERROR(parse_run_config(unknown, c.dir.path()), config);

  auto extra = c.config();
  extra["colour"] = "blue";
  EXPECT_DDG_ERROR(parse_run_config(extra, c.dir.path()), config);

  auto missing = c.config();
  missing["tables"]["folded_single"]["X"] = "absent.csv";
  EXPECT_DDG_ERROR(parse_run_config(missing, c.dir.path()), config);

  auto role = c.config();
  role["tables"]["folded_triple"] = "table.csv";
  EXPECT_DDG_ERROR(parse_run_config(role, c.dir.path()), config);

  auto none = c.config();
  none["strategies"] = json::array();
  EXPECT_DDG_ERROR(parse_run_config(none, c.dir.path()), config);

  EXPECT_DDG_ERROR(load_run_config(c.dir / "nope.json"), config);
  write(c.dir / "broken.json", "{ not json");
  EXPECT_DDG_ERROR(load_run_config(c.dir / "broken.json"), config);
}

TEST(Harness, SmallCaseScoresAndSingleRow) {
  SmallCase c;
  auto cfg = parse_run_config(c.config(), c.dir.path());
  auto data = load_config_dataset(cfg);
  auto scores = compute_scores(cfg, data);
  ASSERT_EQ(scores.runs.size(), 1u);
  const auto& run = scores.runs[0].scores;
  ASSERT_EQ(run.size(), 3u);
  EXPECT_DOUBLE_EQ(run[0].result.value, 1.0);
  EXPECT_DOUBLE_EQ(run[1].result.value, 2.0);
  EXPECT_DOUBLE_EQ(run[2].result.value, 3.0);

  auto report = evaluate_scores(scores, data, {50, 3, false});
  ASSERT_EQ(report.rows.size(), 1u);
  const auto& row = report.rows[0];
  EXPECT_EQ(row.scope, "protein");
  EXPECT_EQ(row.protein_id, "X");
  EXPECT_EQ(row.censored, "included");
  EXPECT_EQ(row.n_variants, 3u);
  EXPECT_NEAR(row.pearson, plain_pearson({1, 2, 3}, {1, 3, 2}), 1e-15);
  EXPECT_NEAR(row.pearson, 0.5, 1e-15);
  EXPECT_NEAR(row.spearman, 0.5, 1e-15);
  EXPECT_GT(row.sem, 0.0);
}

TEST(Harness, MinVariantsSuppressesProteinRow) {
  SmallCase c;
  auto j = c.config();
  j["dataset"]["min_variants_per_protein"] = 4;
  auto report = run_strategy_matrix(parse_run_config(j, c.dir.path()));
  EXPECT_TRUE(report.rows.empty());
}

TEST(Harness, MissingInputsAreSkippedWithReason) {
  SmallCase c;
  auto cfg = parse_run_config(c.config({"folded_single", "folded_multi", "folded_single_pa", "sequence_only"}),
                              c.dir.path());
  auto report = run_strategy_matrix(cfg);
  ASSERT_EQ(report.skipped.size(), 3u);
  std::set<std::string> skipped;
  for (const auto& s : report.skipped) {
    skipped.insert(s.strategy);
    EXPECT_EQ(s.reason.rfind("missing input: ", 0), 0u) << s.reason;
  }
  EXPECT_EQ(skipped, (std::set<std::string>{"folded_multi", "folded_single_pa", "sequence_only"}));
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].strategy, "folded_single");
  EXPECT_NE(report_text(report).find("skipped folded_multi"), std::string::npos);
}

TEST(Harness, FoldedSingleRejectsSeveralStructures) {
  SmallCase c;
  write(c.dir / "table.csv",
        "ensemble_id,state,structure_id,sequence,log_likelihood\n"
        "e,F,S1,ACDE,-10\ne,F,S1,GCDE,-11\ne,F,S1,AGDE,-12\ne,F,S1,ACGE,-13\n"
        "e,F,S2,ACDE,-10\ne,F,S2,GCDE,-11\ne,F,S2,AGDE,-12\ne,F,S2,ACGE,-13\n");
  auto cfg = parse_run_config(c.config(), c.dir.path());
  EXPECT_DDG_ERROR(run_strategy_matrix(cfg), parse);

  // The same table serves as a multi-structure ensemble.
  auto j = c.config({"folded_multi"});
  j["tables"] = {{"folded_multi", {{"X", "table.csv"}}}};
  auto report = run_strategy_matrix(parse_run_config(j, c.dir.path()));
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_NEAR(report.rows[0].pearson, 0.5, 1e-15);
}

TEST(Harness, DeterministicAndJsonRoundTrip) {
  SmallCase c;
  auto cfg = parse_run_config(c.config(), c.dir.path());
  auto a = report_json(run_strategy_matrix(cfg));
  auto b = report_json(run_strategy_matrix(cfg));
  EXPECT_EQ(a, b);
  auto parsed = parse_report_json(a);
  EXPECT_EQ(report_json(parsed), a);
  EXPECT_EQ(parsed.orientation, score_orientation);

  cfg.seed = 4;
  EXPECT_NE(report_json(run_strategy_matrix(cfg)), a);
  EXPECT_DDG_ERROR(parse_report_json("{\"rows\": 3}"), parse);
}

TEST(Harness, CellSeedsDifferByKey) {
  EXPECT_NE(cell_seed(1, "a"), cell_seed(1, "b"));
  EXPECT_NE(cell_seed(1, "a"), cell_seed(2, "a"));
  EXPECT_EQ(cell_seed(9, "x|protein|P|included"), cell_seed(9, "x|protein|P|included"));
}

TEST(Harness, ScoresCsvRoundTrip) {
  SmallCase c;
  auto cfg = parse_run_config(c.config(), c.dir.path());
  auto data = load_config_dataset(cfg);
  auto scores = compute_scores(cfg, data);
  auto text = serialize_scores(scores);
  write(c.dir / "scores.csv", text);
  auto loaded = load_scores(c.dir / "scores.csv");
  EXPECT_EQ(serialize_scores(loaded), text);
  EvaluateOptions opts{50, 3, false};
  EXPECT_EQ(report_json(evaluate_scores(loaded, data, opts)), report_json(evaluate_scores(scores, data, opts)));

  write(c.dir / "bad.csv", csv::join(scores_header) + "\nfolded_single,X,A1G,whole_sequence,abc,0,0,0\n");
  EXPECT_DDG_ERROR(load_scores(c.dir / "bad.csv"), parse);
}

TEST(Harness, CensoredRowsBothWays) {
  TempDir dir;
  std::string table = "ensemble_id,state,structure_id,sequence,log_likelihood\ne,F,S,ACDE,0\n";
  std::string data = "protein_id,wild_type_sequence,mutations,target,censored\n";
  const char* muts[] = {"A1G", "A1K", "C2G", "C2K", "D3G", "D3K", "E4G", "E4K"};
  double lls[] = {-1, -2, -3, -4, -5, -6, -7, -8};
  double targets[] = {1.5, 1.0, 3.2, 4.1, 5.0, 6.3, 7.7, 9.0};
  for (int i = 0; i < 8; ++i) {
    auto v = parse_variant_spec(muts[i], Sequence("ACDE"));
    table += "e,F,S," + v.variant().str() + "," + csv::format_double(lls[i]) + "\n";
    data += std::string("X,ACDE,") + muts[i] + "," + csv::format_double(targets[i]) + (i == 7 ? ",1\n" : ",0\n");
  }
  write(dir / "t.csv", table);
  write(dir / "d.csv", data);
  json j = {{"dataset", {{"path", "d.csv"}, {"min_variants_per_protein", 5}}},
            {"tables", {{"folded_single", "t.csv"}}},
            {"strategies", {"folded_single"}}};
  auto report = run_strategy_matrix(parse_run_config(j, dir.path()));
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].censored, "included");
  EXPECT_EQ(report.rows[0].n_variants, 8u);
  EXPECT_EQ(report.rows[1].censored, "excluded");
  EXPECT_EQ(report.rows[1].n_variants, 7u);
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7}, y(targets, targets + 7);
  EXPECT_NEAR(report.rows[1].pearson, plain_pearson(x, y), 1e-14);

  j["dataset"]["exclude_censored"] = true;
  auto only = run_strategy_matrix(parse_run_config(j, dir.path()));
  ASSERT_EQ(only.rows.size(), 1u);
  EXPECT_EQ(only.rows[0].censored, "excluded");
}

TEST(Harness, ReportWriters) {
  SmallCase c;
  auto report = run_strategy_matrix(parse_run_config(c.config(), c.dir.path()));
  auto table = report_csv(report);
  EXPECT_EQ(table.substr(0, table.find('\n')), csv::join(report_csv_header));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  auto longer = report_long_csv(report);
  EXPECT_EQ(std::count(longer.begin(), longer.end(), '\n'), 4);
  auto merged = comparison_csv({{"a", report}, {"b", report}});
  EXPECT_EQ(std::count(merged.begin(), merged.end(), '\n'), 3);
  EXPECT_NE(merged.find("folded_single,a,protein,X"), std::string::npos);
  EXPECT_NE(merged.find("folded_single,b,protein,X"), std::string::npos);
}

TEST(Harness, OracleBackedConfigRecoversExactTargets) {
  TempDir dir;
  auto scenario = oracle::parse_scenario(
      json::parse(R"({"chain_length": 8, "classifier": {"kind": "hard"}, "family": {"wild_types": ["HPPHHPPH", "HPHHPHHP"]}, "seed": 5})"));
  auto result = oracle::run_scenario(scenario);
  ASSERT_TRUE(result.passed()) << oracle::report_text(result);
  oracle::write_outputs(result, dir.path());
  auto report = run_strategy_matrix(load_run_config(dir / "run.json"));
  bool seen = false;
  for (const auto& row : report.rows) {
    // Uniform family prior: folded-only scores rank variants exactly, ties included.
    if (row.strategy == "folded_multi" && row.scope == "protein") {
      EXPECT_EQ(row.spearman, 1.0) << row.protein_id;
    }
    if (row.strategy != "full_f_multi_u_multi") continue;
    seen = true;
    EXPECT_NEAR(row.pearson, 1.0, 1e-12) << row.scope << " " << row.protein_id;
    EXPECT_NEAR(row.spearman, 1.0, 1e-12) << row.scope << " " << row.protein_id;
  }
  EXPECT_TRUE(seen);
  EXPECT_TRUE(report.skipped.empty());
}

TEST(Cli, ExitCodes) {
  SmallCase c;
  auto log = c.dir / "log.txt";
  write(c.dir / "run.json", c.config().dump());
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };

  EXPECT_EQ(run_cli("evaluate --config " + q(c.dir / "run.json") + " --out-dir " + q(c.dir / "out"), log), 0)
      << testutil::read(log);
  EXPECT_TRUE(fs::exists(c.dir / "out" / "report.json"));
  EXPECT_TRUE(fs::exists(c.dir / "out" / "report.csv"));
  EXPECT_TRUE(fs::exists(c.dir / "out" / "report_long.csv"));

  EXPECT_EQ(run_cli("score --config " + q(c.dir / "run.json") + " -o " + q(c.dir / "scores.csv"), log), 0);
  EXPECT_EQ(run_cli("evaluate --scores " + q(c.dir / "scores.csv") + " --dataset " + q(c.dir / "dataset.csv") +
                        " --min-variants 3",
                    log),
            0)
      << testutil::read(log);
  EXPECT_NE(testutil::read(log).find("0.500"), std::string::npos);

  EXPECT_EQ(run_cli("report A=" + (c.dir / "out" / "report.json").string() + " -o " + q(c.dir / "cmp.csv"), log), 0);
  EXPECT_TRUE(fs::exists(c.dir / "cmp.csv"));

  write(c.dir / "dup.json", c.config({"folded_single", "folded_single"}).dump());
  EXPECT_EQ(run_cli("evaluate --config " + q(c.dir / "dup.json"), log), 1);
  EXPECT_EQ(run_cli("evaluate --bogus-flag", log), 1);

  write(c.dir / "table.csv", "ensemble_id,state,structure_id,sequence,log_likelihood\ne,F,S1,ACDE,oops\n");
  EXPECT_EQ(run_cli("evaluate --config " + q(c.dir / "run.json"), log), 2);

  write(c.dir / "ok.json", R"({"chain_length": 5, "family": {"wild_types": ["HPPHH"]}})");
  EXPECT_EQ(run_cli("oracle --scenario " + q(c.dir / "ok.json"), log), 0) << testutil::read(log);
  write(c.dir / "mc.json", R"({"chain_length": 5, "family": {"wild_types": ["HPPHH"]},
                               "plan": {"exhaustive": false, "n_folded": 1, "n_unfolded": 1},
                               "tolerances": {"sampled_identity": 1e-6}, "seed": 1})");
  EXPECT_EQ(run_cli("oracle --scenario " + q(c.dir / "mc.json"), log), 3) << testutil::read(log);
}
