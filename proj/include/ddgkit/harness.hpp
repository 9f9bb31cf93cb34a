#pragma once

// Dataset-level evaluation: score every variant with every configured
// strategy, then correlate against experimental targets with bootstrap
// standard errors, per protein and aggregated.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "ddgkit/dataset.hpp"
#include "ddgkit/estimators.hpp"
#include "ddgkit/frequency_model.hpp"
#include "ddgkit/likelihood_table.hpp"
#include "ddgkit/stats.hpp"
#include "ddgkit/unfolded.hpp"

namespace ddgkit::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* score_orientation =
    "score = estimated beta*ddG of folding (U->F, dimensionless); larger = more destabilising";

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// A table reference: one file for every protein, or one file per protein.
struct TableRef {
  std::optional<fs::path> shared;
  std::map<std::string, fs::path> per_protein;

  std::optional<fs::path> for_protein(const std::string& protein) const {
    auto it = per_protein.find(protein);
    if (it != per_protein.end()) return it->second;
    return shared;
  }
};

struct RunConfig {
  fs::path base_dir;  // relative paths resolve against this
  fs::path dataset_path;
  DatasetOptions dataset;
  bool exclude_censored = false;
  EvalMode mode = EvalMode::whole_sequence;
  std::map<std::string, TableRef> tables;  // folded_single, folded_multi, unfolded_mc, unfolded_fragment
  std::optional<fs::path> marginal_model;
  std::optional<fs::path> idp_counts;
  std::optional<fs::path> folded_sequence_model;
  std::optional<fs::path> unfolded_sequence_model;
  double pseudo_count = default_pseudo_count;
  std::size_t fragment_flank = 1;
  std::size_t mc_flank = 5;
  std::vector<Strategy> strategies;
  std::size_t bootstrap_resamples = 100;
  std::uint64_t seed = 0;
  double position_tolerance = default_position_tolerance;
};

inline const std::set<std::string> known_table_roles = {"folded_single", "folded_multi", "unfolded_mc",
                                                        "unfolded_fragment"};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorKind::config, what); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("field '") + key + "': " + e.what());
  }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::optional<fs::path> optional_path(const json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) config_error(std::string("field '") + key + "' must be a path string");
  return resolve(base, j[key].get<std::string>());
}

inline void require_exists(const fs::path& p) {
  if (!fs::exists(p)) config_error("file not found: " + p.string());
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  using namespace detail;
  if (!j.is_object()) config_error("run config must be a JSON object");
  static const std::set<std::string> allowed = {"dataset", "alphabet", "mode", "tables", "models", "fragment_flank",
                                                "mc_flank", "strategies", "bootstrap", "seed", "position_tolerance"};
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) config_error("unknown field '" + k + "'");
  }
  RunConfig c;
  c.base_dir = base_dir;
  if (j.contains("alphabet")) c.dataset.alphabet = Alphabet(get_or<std::string>(j, "alphabet", ""));

  if (!j.contains("dataset") || !j["dataset"].is_object()) config_error("missing 'dataset' object");
  const auto& d = j["dataset"];
  if (!d.contains("path") || !d["path"].is_string()) config_error("dataset.path must be a string");
  c.dataset_path = resolve(base_dir, d["path"].get<std::string>());
  require_exists(c.dataset_path);
  c.dataset.sign_convention = parse_sign_convention(get_or<std::string>(d, "sign_convention", "folding"));
  c.dataset.singles_only = get_or<bool>(d, "singles_only", false);
  c.dataset.min_variants_per_protein = get_or<std::size_t>(d, "min_variants_per_protein", 20);
  c.exclude_censored = get_or<bool>(d, "exclude_censored", false);

  c.mode = parse_eval_mode(get_or<std::string>(j, "mode", "whole_sequence"));

  if (j.contains("tables")) {
    if (!j["tables"].is_object()) config_error("'tables' must be an object");
    for (const auto& [role, ref] : j["tables"].items()) {
      if (!known_table_roles.count(role)) config_error("unknown table role '" + role + "'");
      TableRef t;
      if (ref.is_string()) {
        t.shared = resolve(base_dir, ref.get<std::string>());
        require_exists(*t.shared);
      } else if (ref.is_object()) {
        for (const auto& [protein, p] : ref.items()) {
          if (!p.is_string()) config_error("tables." + role + "." + protein + " must be a path string");
          t.per_protein[protein] = resolve(base_dir, p.get<std::string>());
          require_exists(t.per_protein[protein]);
        }
      } else {
        config_error("tables." + role + " must be a path or an object of paths");
      }
      c.tables[role] = std::move(t);
    }
  }

  if (j.contains("models")) {
    const auto& m = j["models"];
    if (!m.is_object()) config_error("'models' must be an object");
    static const std::set<std::string> model_keys = {"marginal", "idp_counts", "folded_sequence", "unfolded_sequence",
                                                     "pseudo_count"};
    for (const auto& [k, _] : m.items()) {
      if (!model_keys.count(k)) config_error("unknown model field '" + k + "'");
    }
    c.marginal_model = optional_path(m, "marginal", base_dir);
    c.idp_counts = optional_path(m, "idp_counts", base_dir);
    c.folded_sequence_model = optional_path(m, "folded_sequence", base_dir);
    c.unfolded_sequence_model = optional_path(m, "unfolded_sequence", base_dir);
    c.pseudo_count = get_or<double>(m, "pseudo_count", default_pseudo_count);
    for (const auto* p : {&c.marginal_model, &c.idp_counts, &c.folded_sequence_model, &c.unfolded_sequence_model}) {
      if (*p) require_exists(**p);
    }
  }

  c.fragment_flank = get_or<std::size_t>(j, "fragment_flank", 1);
  c.mc_flank = get_or<std::size_t>(j, "mc_flank", 5);
  c.position_tolerance = get_or<double>(j, "position_tolerance", default_position_tolerance);

  if (!j.contains("strategies") || !j["strategies"].is_array() || j["strategies"].empty()) {
    config_error("'strategies' must be a non-empty array");
  }
  std::set<std::string> seen;
  for (const auto& s : j["strategies"]) {
    if (!s.is_string()) config_error("strategy ids must be strings");
    auto id = s.get<std::string>();
    if (!seen.insert(id).second) config_error("duplicate strategy id '" + id + "'");
    c.strategies.push_back(parse_strategy(id));
  }

  if (j.contains("bootstrap")) {
    const auto& b = j["bootstrap"];
    if (!b.is_object()) config_error("'bootstrap' must be an object");
    c.bootstrap_resamples = get_or<std::size_t>(b, "resamples", 100);
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct VariantScore {
  std::string protein_id;
  std::string mutations;  // canonical code, positions ascending
  EstimatorResult result;
};

struct StrategyRun {
  Strategy strategy;
  std::vector<VariantScore> scores;  // aligned with the dataset records
};

struct SkippedEntry {
  std::string strategy;
  std::string scope;
  std::string protein_id;
  std::string reason;

  friend bool operator==(const SkippedEntry&, const SkippedEntry&) = default;
};

struct ScoreSet {
  std::vector<StrategyRun> runs;
  std::vector<SkippedEntry> skipped;
};

namespace detail {

/// Table-role and model requirements of each strategy.
struct Requirements {
  const char* folded = nullptr;      // "folded_single" or "folded_multi"
  const char* unfolded = nullptr;    // "unfolded_mc" or "unfolded_fragment"
  bool marginal = false;
  bool idp = false;
  bool sequence_models = false;
};

inline Requirements requirements(Strategy s) {
  switch (s) {
    case Strategy::folded_single: return {"folded_single"};
    case Strategy::folded_single_pa: return {"folded_single", nullptr, true};
    case Strategy::folded_multi: return {"folded_multi"};
    case Strategy::folded_multi_pa: return {"folded_multi", nullptr, true};
    case Strategy::full_f_single_u_multi: return {"folded_single", "unfolded_mc"};
    case Strategy::full_f_multi_u_multi: return {"folded_multi", "unfolded_mc"};
    case Strategy::hybrid_idp_f_single: return {"folded_single", nullptr, false, true};
    case Strategy::hybrid_idp_f_multi: return {"folded_multi", nullptr, false, true};
    case Strategy::hybrid_fragment_f_single: return {"folded_single", "unfolded_fragment"};
    case Strategy::hybrid_fragment_f_multi: return {"folded_multi", "unfolded_fragment"};
    case Strategy::sequence_only: return {nullptr, nullptr, false, false, true};
  }
  return {};
}

class Inputs {
 public:
  Inputs(const RunConfig& config) : config_(config) {}

  const LikelihoodTable& table(const fs::path& path) {
    auto key = path.lexically_normal().string();
    auto it = tables_.find(key);
    if (it == tables_.end()) {
      LoadOptions opts{config_.dataset.alphabet, config_.position_tolerance};
      it = tables_.emplace(key, std::make_unique<LikelihoodTable>(load_likelihood_table(path, opts))).first;
    }
    return *it->second;
  }

  const FrequencyModel& model(const fs::path& path) {
    auto key = path.lexically_normal().string();
    auto it = models_.find(key);
    if (it == models_.end()) {
      it = models_.emplace(key, std::make_unique<FrequencyModel>(
                                    load_frequency_model(path, config_.dataset.alphabet, config_.pseudo_count)))
               .first;
    }
    return *it->second;
  }

 private:
  const RunConfig& config_;
  std::map<std::string, std::unique_ptr<LikelihoodTable>> tables_;
  std::map<std::string, std::unique_ptr<FrequencyModel>> models_;
};

/// Sum of per-site terms, each evaluated with only that site mutated inside
/// its own window around the site.
template <typename PerSite>
double sum_over_sites(const VariantSpec& v, PerSite&& per_site) {
  double total = 0.0;
  for (const auto& m : v.mutations()) {
    auto single = apply_mutations(v.wild_type(), std::span<const Mutation>(&m, 1));
    total += per_site(m.position, single);
  }
  return total;
}

}  // namespace detail

/// Scores every dataset record with every configured strategy. Strategies
/// whose inputs are not configured are skipped with a reason.
inline ScoreSet compute_scores(const RunConfig& config, const ExperimentalDataset& data) {
  using detail::requirements;
  detail::Inputs inputs(config);
  ScoreSet out;
  const auto proteins = data.proteins();

  for (Strategy strategy : config.strategies) {
    const auto req = requirements(strategy);
    const std::string sid = to_string(strategy);
    std::vector<std::string> missing;
    auto need_table = [&](const char* role) {
      if (!role) return;
      auto it = config.tables.find(role);
      for (const auto& p : proteins) {
        if (it == config.tables.end() || !it->second.for_protein(p)) {
          missing.push_back(std::string("table '") + role + "' for protein " + p);
        }
      }
    };
    need_table(req.folded);
    need_table(req.unfolded);
    if (req.marginal && !config.marginal_model) missing.push_back("models.marginal");
    if (req.idp && !config.idp_counts && !config.unfolded_sequence_model) missing.push_back("models.idp_counts");
    if (req.sequence_models) {
      if (!config.folded_sequence_model && !config.marginal_model) missing.push_back("models.folded_sequence");
      if (!config.unfolded_sequence_model && !config.idp_counts) missing.push_back("models.unfolded_sequence");
    }
    if (!missing.empty()) {
      std::string reason = "missing input: " + missing.front();
      if (missing.size() > 1) reason += " (+" + std::to_string(missing.size() - 1) + " more)";
      out.skipped.push_back({sid, "strategy", "", reason});
      continue;
    }

    const FrequencyModel* marginal = config.marginal_model ? &inputs.model(*config.marginal_model) : nullptr;
    std::optional<IdpFrequencyModel> idp;
    if (req.idp || req.sequence_models) {
      if (config.unfolded_sequence_model) {
        idp = IdpFrequencyModel{inputs.model(*config.unfolded_sequence_model), config.unfolded_sequence_model->string()};
      } else if (config.idp_counts) {
        idp = load_idp_counts(*config.idp_counts, config.pseudo_count, config.dataset.alphabet);
      }
    }

    StrategyRun run{strategy, {}};
    for (const auto& rec : data.records()) {
      const auto& wt = rec.variant.wild_type();
      const auto mt = rec.variant.variant();
      const auto& mode = config.mode;

      auto folded_score = [&]() -> EnsembleScore {
        const auto& table = inputs.table(*config.tables.at(req.folded).for_protein(rec.protein_id));
        if (table.state() != State::folded) {
          throw Error(ErrorKind::state_mismatch, std::string(req.folded) + " table is not F-labelled");
        }
        if (std::string(req.folded) == "folded_single") {
          auto members = table.members_for(wt.str(), mode);
          if (members.size() > 1) {
            throw Error(ErrorKind::parse, "folded_single table has " + std::to_string(members.size()) +
                                              " structures for protein " + rec.protein_id + "; expected 1");
          }
        }
        return ensemble_log_ratio(table, wt, mt, mode);
      };

      EstimatorResult result;
      switch (strategy) {
        case Strategy::folded_single:
        case Strategy::folded_multi:
          result = ddg_folded_only(folded_score(), wt, mt, nullptr, false, mode, sid);
          break;
        case Strategy::folded_single_pa:
        case Strategy::folded_multi_pa:
          result = ddg_folded_only(folded_score(), wt, mt, marginal, true, mode, sid);
          break;
        case Strategy::hybrid_idp_f_single:
        case Strategy::hybrid_idp_f_multi:
          result = ddg_hybrid(folded_score(), idp->model, wt, mt, mode, sid);
          break;
        case Strategy::full_f_single_u_multi:
        case Strategy::full_f_multi_u_multi: {
          const auto& mc = inputs.table(*config.tables.at("unfolded_mc").for_protein(rec.protein_id));
          double unfolded = detail::sum_over_sites(rec.variant, [&](std::size_t site, const Sequence& single) {
            FragmentSpec spec{site, config.mc_flank};
            return unfolded_log_ratio_mc(mc, spec.extract(wt.str()), spec.extract(single.str()), mode).log_mean_ratio;
          });
          auto f = folded_score();
          result = make_result(sid, unfolded, f.log_mean_ratio, 0.0, mode);
          result.diagnostics["folded_mean_log_ratio"] = f.mean_log_ratio();
          break;
        }
        case Strategy::hybrid_fragment_f_single:
        case Strategy::hybrid_fragment_f_multi: {
          const auto& frag = inputs.table(*config.tables.at("unfolded_fragment").for_protein(rec.protein_id));
          double unfolded = detail::sum_over_sites(rec.variant, [&](std::size_t site, const Sequence& single) {
            FragmentSpec spec{site, config.fragment_flank};
            return unfolded_log_ratio_fragment(frag, rec.protein_id, spec, wt, single, mode);
          });
          result = make_result(sid, unfolded, folded_score().log_mean_ratio, 0.0, mode);
          break;
        }
        case Strategy::sequence_only: {
          const auto& folded_model = config.folded_sequence_model ? inputs.model(*config.folded_sequence_model) : *marginal;
          result = ddg_sequence_only(folded_model, idp->model, wt, mt);
          break;
        }
      }
      if (!std::isfinite(result.value)) {
        throw Error(ErrorKind::non_finite, sid + " produced a non-finite score for " + rec.protein_id + " " +
                                               rec.variant.code());
      }
      run.scores.push_back(VariantScore{rec.protein_id, rec.variant.code(), std::move(result)});
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scores file
// ---------------------------------------------------------------------------

inline const std::vector<std::string> scores_header = {"strategy", "protein_id", "mutations", "mode", "score",
                                                       "unfolded_term", "folded_term", "correction_term"};

inline std::string serialize_scores(const ScoreSet& set) {
  std::vector<std::string> lines;
  for (const auto& run : set.runs) {
    for (const auto& s : run.scores) {
      const auto& r = s.result;
      lines.push_back(std::string(to_string(run.strategy)) + "," + s.protein_id + "," + s.mutations + "," +
                      to_string(r.mode) + "," + csv::format_double(r.value) + "," +
                      csv::format_double(r.component(unfolded_term)) + "," +
                      csv::format_double(r.component(folded_term)) + "," +
                      csv::format_double(r.component(correction_term)));
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string out = csv::join(scores_header) + "\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

inline ScoreSet load_scores(const fs::path& path) {
  auto doc = csv::read_file(path);
  csv::require_header(doc, scores_header, path.string());
  std::map<Strategy, StrategyRun> runs;
  std::vector<Strategy> order;
  for (const auto& row : doc.rows) {
    const auto& f = row.fields;
    auto where = csv::location(path.string(), row.line);
    Strategy s;
    try {
      s = parse_strategy(f[0]);
    } catch (const Error&) {
      throw Error(ErrorKind::parse, where + ": unknown strategy '" + f[0] + "'");
    }
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!csv::parse_double(f[4 + k], v[k]) || !std::isfinite(v[k])) {
        throw Error(ErrorKind::parse, where + ": bad number '" + f[4 + k] + "'");
      }
    }
    auto r = make_result(f[0], v[1], v[2], v[3], parse_eval_mode(f[3]));
    r.value = v[0];
    if (!runs.count(s)) {
      order.push_back(s);
      runs[s] = StrategyRun{s, {}};
    }
    runs[s].scores.push_back(VariantScore{f[1], f[2], std::move(r)});
  }
  ScoreSet out;
  for (Strategy s : order) out.runs.push_back(std::move(runs[s]));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string strategy;
  std::string scope;       // "protein", "pooled" or "mean_of_proteins"
  std::string protein_id;  // empty for aggregate scopes
  std::string censored;    // "included" or "excluded"
  double pearson = 0.0;
  double spearman = 0.0;
  double sem = 0.0;
  std::size_t n_variants = 0;
  std::size_t redraws = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvaluationReport {
  std::string orientation = score_orientation;
  std::size_t bootstrap_resamples = 100;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::vector<SkippedEntry> skipped;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

inline void to_json(json& j, const ReportRow& r) {
  j = json{{"strategy", r.strategy}, {"scope", r.scope},       {"protein_id", r.protein_id},
           {"censored", r.censored}, {"pearson", r.pearson},   {"spearman", r.spearman},
           {"sem", r.sem},           {"n_variants", r.n_variants}, {"redraws", r.redraws}};
}

inline void from_json(const json& j, ReportRow& r) {
  j.at("strategy").get_to(r.strategy);
  j.at("scope").get_to(r.scope);
  j.at("protein_id").get_to(r.protein_id);
  j.at("censored").get_to(r.censored);
  j.at("pearson").get_to(r.pearson);
  j.at("spearman").get_to(r.spearman);
  j.at("sem").get_to(r.sem);
  j.at("n_variants").get_to(r.n_variants);
  j.at("redraws").get_to(r.redraws);
}

inline void to_json(json& j, const SkippedEntry& s) {
  j = json{{"strategy", s.strategy}, {"scope", s.scope}, {"protein_id", s.protein_id}, {"reason", s.reason}};
}

inline void from_json(const json& j, SkippedEntry& s) {
  j.at("strategy").get_to(s.strategy);
  j.at("scope").get_to(s.scope);
  j.at("protein_id").get_to(s.protein_id);
  j.at("reason").get_to(s.reason);
}

inline void to_json(json& j, const EvaluationReport& r) {
  j = json{{"orientation", r.orientation},
           {"bootstrap", {{"resamples", r.bootstrap_resamples}, {"seed", r.seed}}},
           {"rows", r.rows},
           {"skipped", r.skipped}};
}

inline void from_json(const json& j, EvaluationReport& r) {
  j.at("orientation").get_to(r.orientation);
  j.at("bootstrap").at("resamples").get_to(r.bootstrap_resamples);
  j.at("bootstrap").at("seed").get_to(r.seed);
  j.at("rows").get_to(r.rows);
  j.at("skipped").get_to(r.skipped);
}

struct EvaluateOptions {
  std::size_t bootstrap_resamples = 100;
  std::uint64_t seed = 0;
  bool exclude_censored = false;  // only the censored-excluded rows
  double tie_tolerance = 1e-9;    // Spearman: values this close share a rank
};

/// Seed of one report cell: FNV-1a of the cell key mixed with the run seed
/// through splitmix64, so cells are independent of evaluation order.
inline std::uint64_t cell_seed(std::uint64_t seed, const std::string& key) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (h | 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

inline std::string record_key(const std::string& protein, const std::string& code) { return protein + "|" + code; }

inline int scope_rank(const std::string& s) { return s == "protein" ? 0 : s == "pooled" ? 1 : 2; }

}  // namespace detail

/// Correlates each strategy's scores with the dataset targets.
inline EvaluationReport evaluate_scores(const ScoreSet& scores, const ExperimentalDataset& data,
                                        const EvaluateOptions& opts = {}) {
  EvaluationReport report;
  report.bootstrap_resamples = opts.bootstrap_resamples;
  report.seed = opts.seed;
  report.skipped = scores.skipped;

  std::vector<std::pair<std::string, ExperimentalDataset>> variants;
  if (opts.exclude_censored) {
    variants.emplace_back("excluded", data.without_censored());
  } else {
    variants.emplace_back("included", data);
    if (data.has_censored()) variants.emplace_back("excluded", data.without_censored());
  }

  for (const auto& run : scores.runs) {
    const std::string sid = to_string(run.strategy);
    std::map<std::string, double> by_key;
    for (const auto& s : run.scores) by_key[detail::record_key(s.protein_id, s.mutations)] = s.result.value;

    for (const auto& [censoring, subset] : variants) {
      std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_protein;
      std::vector<double> all_x, all_y;
      for (const auto& rec : subset.records()) {
        auto it = by_key.find(detail::record_key(rec.protein_id, rec.variant.code()));
        if (it == by_key.end()) {
          throw Error(ErrorKind::missing_entry, sid + " has no score for " + rec.protein_id + " " + rec.variant.code());
        }
        per_protein[rec.protein_id].first.push_back(it->second);
        per_protein[rec.protein_id].second.push_back(rec.target);
        all_x.push_back(it->second);
        all_y.push_back(rec.target);
      }

      auto cell = [&](const std::string& scope, const std::string& protein, const std::vector<double>& x,
                      const std::vector<double>& y) -> std::optional<ReportRow> {
        try {
          auto key = sid + "|" + scope + "|" + protein + "|" + censoring;
          auto b = stats::bootstrap_sem(x, y, opts.bootstrap_resamples, cell_seed(opts.seed, key));
          ReportRow row{sid, scope, protein, censoring, b.point, stats::spearman(x, y, opts.tie_tolerance), b.sem, x.size(), b.redraws};
          report.rows.push_back(row);
          return row;
        } catch (const Error& e) {
          report.skipped.push_back({sid, scope, protein, std::string(e.what()) + " (censored " + censoring + ")"});
          return std::nullopt;
        }
      };

      std::vector<ReportRow> protein_rows;
      for (const auto& protein : subset.proteins()) {
        const auto& [x, y] = per_protein[protein];
        if (x.size() < subset.min_variants_per_protein()) continue;
        if (auto row = cell("protein", protein, x, y)) protein_rows.push_back(*row);
      }
      // With a single protein the aggregate rows would repeat its own row.
      const bool aggregate = subset.proteins().size() > 1;
      if (aggregate && all_x.size() >= 2) cell("pooled", "", all_x, all_y);
      if (aggregate && !protein_rows.empty()) {
        ReportRow mean{sid, "mean_of_proteins", "", censoring};
        double var = 0.0;
        for (const auto& r : protein_rows) {
          mean.pearson += r.pearson;
          mean.spearman += r.spearman;
          var += r.sem * r.sem;
          mean.n_variants += r.n_variants;
          mean.redraws += r.redraws;
        }
        double k = static_cast<double>(protein_rows.size());
        mean.pearson /= k;
        mean.spearman /= k;
        mean.sem = std::sqrt(var) / k;
        report.rows.push_back(mean);
      }
    }
  }
  // Rows follow the strategy order of the run, then censoring, scope, protein.
  std::map<std::string, std::size_t> strategy_rank;
  for (const auto& run : scores.runs) strategy_rank.emplace(to_string(run.strategy), strategy_rank.size());
  auto key = [&](const ReportRow& r) {
    return std::tuple(strategy_rank[r.strategy], r.censored == "excluded", detail::scope_rank(r.scope), r.protein_id);
  };
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [&](const ReportRow& a, const ReportRow& b) { return key(a) < key(b); });
  return report;
}

inline ExperimentalDataset load_config_dataset(const RunConfig& config) {
  return load_experimental_dataset(config.dataset_path, config.dataset);
}

/// Scores and evaluates every configured strategy.
inline EvaluationReport run_strategy_matrix(const RunConfig& config) {
  auto data = load_config_dataset(config);
  auto scores = compute_scores(config, data);
  return evaluate_scores(scores, data, {config.bootstrap_resamples, config.seed, config.exclude_censored});
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

inline std::string report_json(const EvaluationReport& report) { return json(report).dump(2) + "\n"; }

inline EvaluationReport parse_report_json(const std::string& text) {
  try {
    return json::parse(text).get<EvaluationReport>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("report JSON: ") + e.what());
  }
}

inline const std::vector<std::string> report_csv_header = {"strategy", "scope",    "protein_id", "censored", "n_variants",
                                                           "pearson",  "spearman", "sem",        "redraws"};

inline std::string report_csv(const EvaluationReport& report) {
  std::string out = csv::join(report_csv_header) + "\n";
  for (const auto& r : report.rows) {
    out += r.strategy + "," + r.scope + "," + r.protein_id + "," + r.censored + "," + std::to_string(r.n_variants) +
           "," + csv::format_fixed(r.pearson) + "," + csv::format_fixed(r.spearman) + "," + csv::format_fixed(r.sem) +
           "," + std::to_string(r.redraws) + "\n";
  }
  return out;
}

/// Long format for external plotting: one metric value per line.
inline std::string report_long_csv(const EvaluationReport& report) {
  std::string out = "strategy,scope,protein_id,censored,metric,value\n";
  for (const auto& r : report.rows) {
    auto prefix = r.strategy + "," + r.scope + "," + r.protein_id + "," + r.censored + ",";
    out += prefix + "pearson," + csv::format_fixed(r.pearson) + "\n";
    out += prefix + "spearman," + csv::format_fixed(r.spearman) + "\n";
    out += prefix + "sem," + csv::format_fixed(r.sem) + "\n";
  }
  return out;
}

inline std::string report_text(const EvaluationReport& report) {
  std::string out = "# " + report.orientation + "\n";
  out += "# bootstrap resamples: " + std::to_string(report.bootstrap_resamples) + ", seed " +
         std::to_string(report.seed) + "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-26s %-17s %-12s %-9s %6s %16s %9s\n", "strategy", "scope", "protein", "censored",
                "n", "pearson (sem)", "spearman");
  out += buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-26s %-17s %-12s %-9s %6zu %8.3f (%.3f) %9.3f\n", r.strategy.c_str(),
                  r.scope.c_str(), r.protein_id.empty() ? "-" : r.protein_id.c_str(), r.censored.c_str(), r.n_variants,
                  r.pearson, r.sem, r.spearman);
    out += buf;
  }
  for (const auto& s : report.skipped) {
    out += "skipped " + s.strategy + " [" + s.scope + (s.protein_id.empty() ? "" : " " + s.protein_id) + "]: " +
           s.reason + "\n";
  }
  return out;
}

/// Merges named reports into one comparison table keyed by strategy id.
inline std::string comparison_csv(const std::vector<std::pair<std::string, EvaluationReport>>& runs) {
  std::vector<std::string> lines;
  for (const auto& [name, report] : runs) {
    for (const auto& r : report.rows) {
      lines.push_back(r.strategy + "," + name + "," + r.scope + "," + r.protein_id + "," + r.censored + "," +
                      std::to_string(r.n_variants) + "," + csv::format_fixed(r.pearson) + "," +
                      csv::format_fixed(r.sem) + "," + csv::format_fixed(r.spearman));
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string out = "strategy,run,scope,protein_id,censored,n_variants,pearson,sem,spearman\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace ddgkit::harness
