#pragma once

// Scenario-driven oracle runs: build a lattice system, check the estimators
// against exact enumeration, and emit tables plus a ready-to-run evaluation
// config.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddgkit/estimators.hpp"
#include "ddgkit/lattice.hpp"
#include "ddgkit/stats.hpp"

namespace ddgkit::oracle {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Tolerances {
  double identity = 1e-9;
  double cancellation = 1e-12;
  double conservation = 1e-12;
  double rank_transform = 1e-9;
  double bias = 1e-12;
  double ties = 1e-9;
  std::optional<double> sampled_identity;  // checks Monte-Carlo tables when set
};

struct Scenario {
  int chain_length = 6;
  double beta = 1.0;
  double hh = -1.0, hp = 0.0, pp = 0.0;
  std::string classifier = "soft";  // soft | hard
  double kappa = 4.0;
  std::optional<double> midpoint;   // soft; default half the maximum contact count
  std::optional<double> threshold;  // hard; default the same midpoint
  std::vector<std::string> wild_types;
  std::size_t random_wild_types = 0;
  double prior_h = 0.5;  // family prior q(H); q(P) = 1 - q(H)
  lattice::SamplingPlan plan;
  std::uint64_t seed = 0;
  Tolerances tolerances;
};


namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorKind::config, what); }

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("scenario field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline Scenario parse_scenario(const json& j) {
  using detail::field;
  if (!j.is_object()) detail::config_error("scenario must be a JSON object");
  Scenario s;
  s.chain_length = field<int>(j, "chain_length", 6);
  s.beta = field<double>(j, "beta", 1.0);
  if (j.contains("interaction")) {
    const auto& m = j["interaction"];
    s.hh = field<double>(m, "HH", -1.0);
    s.hp = field<double>(m, "HP", 0.0);
    s.pp = field<double>(m, "PP", 0.0);
  }
  if (j.contains("classifier")) {
    const auto& c = j["classifier"];
    s.classifier = field<std::string>(c, "kind", "soft");
    if (s.classifier != "soft" && s.classifier != "hard") detail::config_error("classifier.kind must be soft or hard");
    s.kappa = field<double>(c, "kappa", 4.0);
    if (c.contains("midpoint") && !c["midpoint"].is_null()) s.midpoint = field<double>(c, "midpoint", 0.0);
    if (c.contains("threshold") && !c["threshold"].is_null()) s.threshold = field<double>(c, "threshold", 0.0);
  }
  if (j.contains("family")) {
    const auto& f = j["family"];
    s.wild_types = field<std::vector<std::string>>(f, "wild_types", {});
    s.random_wild_types = field<std::size_t>(f, "random_wild_types", 0);
    if (f.contains("prior")) s.prior_h = field<double>(f["prior"], "H", 0.5);
    if (!(s.prior_h > 0.0 && s.prior_h < 1.0)) detail::config_error("family.prior.H must lie in (0, 1)");
  }
  if (j.contains("plan")) {
    const auto& p = j["plan"];
    s.plan.exhaustive = field<bool>(p, "exhaustive", true);
    s.plan.n_folded = field<std::size_t>(p, "n_folded", 1);
    s.plan.n_unfolded = field<std::size_t>(p, "n_unfolded", 1);
  }
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    auto& tol = s.tolerances;
    tol.identity = field<double>(t, "identity", tol.identity);
    tol.cancellation = field<double>(t, "cancellation", tol.cancellation);
    tol.conservation = field<double>(t, "conservation", tol.conservation);
    tol.rank_transform = field<double>(t, "rank_transform", tol.rank_transform);
    tol.bias = field<double>(t, "bias", tol.bias);
    tol.ties = field<double>(t, "ties", tol.ties);
    if (t.contains("sampled_identity") && !t["sampled_identity"].is_null()) {
      tol.sampled_identity = field<double>(t, "sampled_identity", 0.0);
    }
  }
  s.seed = field<std::uint64_t>(j, "seed", 0);
  s.plan.seed = s.seed;
  if (s.wild_types.empty() && s.random_wild_types == 0) detail::config_error("scenario lists no wild types");
  return s;
}

inline Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open scenario " + path.string());
  try {
    return parse_scenario(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
}

inline lattice::LatticeSystem build_system(const Scenario& s) {
  auto interaction = lattice::InteractionMatrix::hp(s.hh, s.hp, s.pp);
  if (s.classifier == "soft" && !s.midpoint && s.kappa == 4.0) {
    return lattice::LatticeSystem(s.chain_length, s.beta, interaction);
  }
  // The default midpoint needs the maximum contact count of the system.
  lattice::LatticeSystem probe(s.chain_length, s.beta, interaction);
  double half = 0.5 * probe.max_contacts();
  auto classifier = s.classifier == "soft" ? lattice::StateClassifier::soft(s.midpoint.value_or(half), s.kappa)
                                           : lattice::StateClassifier::hard(s.threshold.value_or(std::ceil(half)));
  return lattice::LatticeSystem(s.chain_length, s.beta, interaction, classifier);
}

/// Uniformly random HP strings of length L.
inline std::vector<std::string> random_wild_types(int chain_length, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string s(static_cast<std::size_t>(chain_length), 'P');
    for (auto& c : s) c = coin(rng) ? 'H' : 'P';
    out.push_back(s);
  }
  return out;
}

inline std::vector<std::string> scenario_wild_types(const Scenario& s) {
  auto out = s.wild_types;
  auto extra = random_wild_types(s.chain_length, s.random_wild_types, s.seed);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

struct Check {
  std::string name;
  std::string wild_type;
  bool applicable = true;
  bool pass = true;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VariantRow {
  std::string wild_type;
  std::string mutation;
  double exact_ddg;
  double ddg_full;
  double folded_term;
  double unfolded_term;
  double pseudo_dG_folded;
};

struct WildTypeResult {
  std::string wild_type;
  lattice::OracleTables tables;
  std::vector<VariantRow> variants;
};

struct Report {
  Scenario scenario;
  std::vector<Check> checks;
  std::vector<WildTypeResult> results;

  bool passed() const {
    for (const auto& c : checks) {
      if (c.applicable && !c.pass) return false;
    }
    return true;
  }
};

namespace detail {

inline Check bounded(std::string name, std::string wt, double err, double tol, std::string detail = {}) {
  return Check{std::move(name), std::move(wt), true, err <= tol, err, tol, std::move(detail)};
}

/// A different valid prior over the same alphabet.
inline FrequencyModel alternative_model(const Alphabet& alphabet) {
  std::vector<double> p(alphabet.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] = static_cast<double>(i + 1));
  for (double& x : p) x /= total;
  return FrequencyModel::from_probabilities(alphabet, p);
}

}  // namespace detail

/// Runs every oracle check for each wild type of the scenario. Checks that
/// only hold for exhaustive tables are reported as not applicable otherwise.
inline Report run_scenario(const Scenario& scenario) {
  const auto& tol = scenario.tolerances;
  Report report{scenario, {}, {}};
  auto system = build_system(scenario);
  const auto& alphabet = system.alphabet();
  auto prior = FrequencyModel::from_probabilities(alphabet, {scenario.prior_h, 1.0 - scenario.prior_h});
  const bool exhaustive = scenario.plan.exhaustive;
  const bool hard = system.classifier().kind == lattice::StateClassifier::Kind::hard;
  const auto other = detail::alternative_model(alphabet);

  for (const auto& wt_text : scenario_wild_types(scenario)) {
    auto wt = system.sequence(wt_text);
    system.check_sequence(wt);
    auto family = lattice::SequenceFamily::single_mutants(wt, prior);
    auto tables = lattice::emit_oracle_tables(system, family, scenario.plan);
    WildTypeResult res{wt_text, tables, {}};

    double identity_err = 0.0, cancel_err = 0.0, conserve_err = 0.0, rank_err = 0.0, bias_excess = 0.0;
    std::vector<double> neg_pseudo, exact;
    auto zwt = lattice::partition_functions(system, wt);
    conserve_err = std::abs(logaddexp(zwt.log_z_folded, zwt.log_z_unfolded) - zwt.log_z_total);

    for (std::size_t c = 1; c < family.candidates().size(); ++c) {
      const auto& mt = family.candidates()[c];
      auto m = differing_positions(wt.str(), mt.str()).front();
      Mutation mutation(m, wt.at(m), mt.at(m));
      double truth = lattice::exact_ddg(system, wt, mt);
      auto full = ddg_full(tables.folded, tables.unfolded, wt, mt);
      double pf = pseudo_dG(tables.folded, wt, mt, tables.marginal);
      double pu = pseudo_dG(tables.unfolded, wt, mt, tables.marginal);
      double pf_other = pseudo_dG(tables.folded, wt, mt, other);
      double pu_other = pseudo_dG(tables.unfolded, wt, mt, other);
      cancel_err = std::max(cancel_err, std::abs((pu - pf) - full.value));
      cancel_err = std::max(cancel_err, std::abs((pu_other - pf_other) - full.value));
      identity_err = std::max(identity_err, std::abs(full.value - truth));

      auto zmt = lattice::partition_functions(system, mt);
      conserve_err = std::max(conserve_err, std::abs(logaddexp(zmt.log_z_folded, zmt.log_z_unfolded) - zmt.log_z_total));
      if (exhaustive) {
        double recovered = rank_transform(-pf, zwt.p_folded());
        rank_err = std::max(rank_err, std::abs(recovered - lattice::exact_stability(system, mt)));
      }
      neg_pseudo.push_back(-pf);
      exact.push_back(truth);

      auto bias = lattice::folded_proposal_bias(system, wt, mt, State::folded);
      bias_excess = std::max(bias_excess, bias.biased - bias.bound());

      res.variants.push_back({wt_text, mutation.to_string(), truth, full.value, full.component(folded_term),
                              full.component(unfolded_term), pf});
    }

    if (exhaustive) {
      report.checks.push_back(detail::bounded("identity", wt_text, identity_err, tol.identity,
                                              "ddg_full on exhaustive tables vs exact_ddg"));
    } else if (tol.sampled_identity) {
      report.checks.push_back(detail::bounded("identity", wt_text, identity_err, *tol.sampled_identity,
                                              "ddg_full on sampled tables vs exact_ddg"));
    } else {
      report.checks.push_back(Check{"identity", wt_text, false, true, identity_err, tol.identity,
                                    "sampled tables: Monte-Carlo error reported, not checked"});
    }
    report.checks.push_back(detail::bounded("cancellation", wt_text, cancel_err, tol.cancellation,
                                            "pseudo_dG route under two sequence models vs ddg_full"));
    report.checks.push_back(detail::bounded("conservation", wt_text, conserve_err, tol.conservation,
                                            "|ln(Z_F + Z_U) - ln Z| over the family"));

    Check ranking{"ranking", wt_text, exhaustive && !system.classifier().sequence_dependent, true, 0.0, 0.0, ""};
    if (ranking.applicable) {
      try {
        double rho = stats::spearman(neg_pseudo, exact, tol.ties);
        ranking.pass = rho == 1.0;
        ranking.max_error = 1.0 - rho;
        ranking.detail = "spearman(-pseudo_dG_F, exact_ddg) = " + csv::format_double(rho);
      } catch (const Error& e) {
        ranking.applicable = false;
        ranking.detail = e.what();
      }
    }
    report.checks.push_back(ranking);
    if (exhaustive) {
      report.checks.push_back(detail::bounded("rank_transform", wt_text, rank_err, tol.rank_transform,
                                              "f(-pseudo_dG_F; p_F(wt)) vs exact stability of the variant"));
    }

    report.checks.push_back(detail::bounded("bias_bound", wt_text, std::max(0.0, bias_excess), tol.bias,
                                            "biased <= exact / p(F|wt) for every single mutant"));
    auto self = lattice::folded_proposal_bias(system, wt, wt, State::folded);
    Check unit{"bias_self", wt_text, hard, self.biased == 1.0, std::abs(self.biased - 1.0), 0.0,
               "biased estimate of p(F|wt) from folded structures = " + csv::format_double(self.biased)};
    report.checks.push_back(unit);
    report.results.push_back(std::move(res));
  }
  return report;
}

inline json check_json(const Check& c) {
  return json{{"name", c.name},         {"wild_type", c.wild_type}, {"applicable", c.applicable},
              {"pass", c.pass},         {"max_error", c.max_error}, {"tolerance", c.tolerance},
              {"detail", c.detail}};
}

inline json report_json(const Report& r) {
  const auto& s = r.scenario;
  json scenario = {{"chain_length", s.chain_length},
                   {"beta", s.beta},
                   {"interaction", {{"HH", s.hh}, {"HP", s.hp}, {"PP", s.pp}}},
                   {"classifier", s.classifier},
                   {"plan", {{"exhaustive", s.plan.exhaustive}, {"n_folded", s.plan.n_folded}, {"n_unfolded", s.plan.n_unfolded}}},
                   {"seed", s.seed}};
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(check_json(c));
  json variants = json::array();
  for (const auto& w : r.results) {
    for (const auto& v : w.variants) {
      variants.push_back({{"wild_type", v.wild_type},
                          {"mutation", v.mutation},
                          {"exact_ddg", v.exact_ddg},
                          {"ddg_full", v.ddg_full},
                          {"folded_term", v.folded_term},
                          {"unfolded_term", v.unfolded_term},
                          {"pseudo_dG_folded", v.pseudo_dG_folded}});
    }
  }
  return json{{"passed", r.passed()}, {"scenario", scenario}, {"checks", checks}, {"variants", variants}};
}

inline std::string report_text(const Report& r) {
  std::string out;
  char buf[512];
  for (const auto& c : r.checks) {
    const char* status = !c.applicable ? "n/a " : c.pass ? "PASS" : "FAIL";
    std::snprintf(buf, sizeof buf, "%s %-15s %-14s err=%.3e tol=%.1e  %s\n", status, c.name.c_str(), c.wild_type.c_str(),
                  c.max_error, c.tolerance, c.detail.c_str());
    out += buf;
  }
  out += r.passed() ? "oracle: all applicable checks passed\n" : "oracle: FAILED\n";
  return out;
}

inline std::string protein_id_for(const std::string& wild_type) { return "lattice_" + wild_type; }

/// Writes per-wild-type tables, the family marginal, an experimental-style
/// dataset of exact βΔΔG targets and an evaluation config over all of them.
inline void write_outputs(const Report& r, const fs::path& dir) {
  fs::create_directories(dir);
  std::string dataset = csv::join(dataset_header) + "\n";
  json folded = json::object(), unfolded = json::object();
  for (const auto& w : r.results) {
    auto pid = protein_id_for(w.wild_type);
    write_likelihood_table(dir / (pid + ".F.csv"), w.tables.folded);
    write_likelihood_table(dir / (pid + ".U.csv"), w.tables.unfolded);
    folded[pid] = pid + ".F.csv";
    unfolded[pid] = pid + ".U.csv";
    for (const auto& v : w.variants) {
      dataset += pid + "," + w.wild_type + "," + v.mutation + "," + csv::format_double(v.exact_ddg) + ",0\n";
    }
  }
  csv::write_file(dir / "marginal.csv", serialize_frequency_model(r.results.empty()
                                                                      ? FrequencyModel::uniform(Alphabet::hp())
                                                                      : r.results.front().tables.marginal));
  csv::write_file(dir / "dataset.csv", dataset);
  json config = {
      {"dataset", {{"path", "dataset.csv"}, {"sign_convention", "folding"},
                   {"min_variants_per_protein", r.scenario.chain_length}}},
      {"alphabet", "HP"},
      {"mode", "whole_sequence"},
      {"tables", {{"folded_multi", folded}, {"unfolded_mc", unfolded}}},
      {"models", {{"marginal", "marginal.csv"}}},
      {"mc_flank", r.scenario.chain_length},
      {"strategies", {"folded_multi", "folded_multi_pa", "full_f_multi_u_multi"}},
      {"bootstrap", {{"resamples", 100}}},
      {"seed", r.scenario.seed}};
  csv::write_file(dir / "run.json", config.dump(2) + "\n");
  csv::write_file(dir / "oracle_report.json", report_json(r).dump(2) + "\n");
}

}  // namespace ddgkit::oracle
