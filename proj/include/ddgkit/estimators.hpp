#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddgkit/error.hpp"
#include "ddgkit/frequency_model.hpp"
#include "ddgkit/likelihood_table.hpp"
#include "ddgkit/logmath.hpp"
#include "ddgkit/sequence.hpp"

namespace ddgkit {

// ---------------------------------------------------------------------------
// Strategy vocabulary. One identifier per estimator row of the comparison
// tables; reports and configs use these strings verbatim.
// ---------------------------------------------------------------------------

enum class Strategy {
  folded_single,
  folded_single_pa,
  folded_multi,
  folded_multi_pa,
  full_f_single_u_multi,
  full_f_multi_u_multi,
  hybrid_idp_f_single,
  hybrid_idp_f_multi,
  hybrid_fragment_f_single,
  hybrid_fragment_f_multi,
  sequence_only,
};

inline constexpr std::array<Strategy, 11> all_strategies = {
    Strategy::folded_single,          Strategy::folded_single_pa,        Strategy::folded_multi,
    Strategy::folded_multi_pa,        Strategy::full_f_single_u_multi,   Strategy::full_f_multi_u_multi,
    Strategy::hybrid_idp_f_single,    Strategy::hybrid_idp_f_multi,      Strategy::hybrid_fragment_f_single,
    Strategy::hybrid_fragment_f_multi, Strategy::sequence_only,
};

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::folded_single: return "folded_single";
    case Strategy::folded_single_pa: return "folded_single_pa";
    case Strategy::folded_multi: return "folded_multi";
    case Strategy::folded_multi_pa: return "folded_multi_pa";
    case Strategy::full_f_single_u_multi: return "full_f_single_u_multi";
    case Strategy::full_f_multi_u_multi: return "full_f_multi_u_multi";
    case Strategy::hybrid_idp_f_single: return "hybrid_idp_f_single";
    case Strategy::hybrid_idp_f_multi: return "hybrid_idp_f_multi";
    case Strategy::hybrid_fragment_f_single: return "hybrid_fragment_f_single";
    case Strategy::hybrid_fragment_f_multi: return "hybrid_fragment_f_multi";
    case Strategy::sequence_only: return "sequence_only";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view text) {
  for (Strategy s : all_strategies) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorKind::config, "unknown strategy '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Result types
// ---------------------------------------------------------------------------

/// ln E_{x ~ p(x|S,a)}[p(a'|x) / p(a|x)] over the members of one ensemble.
struct EnsembleScore {
  State state = State::folded;
  std::size_t n_samples = 0;
  double log_mean_ratio = 0.0;
  std::vector<double> per_sample_log_ratios;
  std::vector<double> log_weights;  // empty: equal weights

  /// Mean of the per-sample log-ratios (single-sample practice averaged);
  /// never above log_mean_ratio for equal weights.
  double mean_log_ratio() const {
    if (per_sample_log_ratios.empty()) return 0.0;
    if (log_weights.empty()) {
      return std::accumulate(per_sample_log_ratios.begin(), per_sample_log_ratios.end(), 0.0) /
             static_cast<double>(per_sample_log_ratios.size());
    }
    double lz = logsumexp(log_weights);
    double sum = 0.0;
    for (std::size_t i = 0; i < per_sample_log_ratios.size(); ++i) {
      sum += std::exp(log_weights[i] - lz) * per_sample_log_ratios[i];
    }
    return sum;
  }
};

/// One βΔΔG estimate. Invariant:
///   value == unfolded_term - folded_term - correction_term
/// where correction_term = ln p(a) - ln p(a') (zero when not applied).
struct EstimatorResult {
  std::string strategy;
  double value = 0.0;
  std::map<std::string, double> components;
  std::map<std::string, double> diagnostics;
  EvalMode mode = EvalMode::whole_sequence;

  double component(const std::string& name) const {
    auto it = components.find(name);
    return it == components.end() ? 0.0 : it->second;
  }
};

inline constexpr const char* folded_term = "folded_term";
inline constexpr const char* unfolded_term = "unfolded_term";
inline constexpr const char* correction_term = "correction_term";

inline EstimatorResult make_result(std::string strategy, double unfolded, double folded, double correction,
                                   EvalMode mode) {
  EstimatorResult r;
  r.strategy = std::move(strategy);
  r.components = {{unfolded_term, unfolded}, {folded_term, folded}, {correction_term, correction}};
  r.value = unfolded - folded - correction;
  r.mode = mode;
  return r;
}

// ---------------------------------------------------------------------------
// Per-sample and ensemble log-ratios
// ---------------------------------------------------------------------------

/// ln p(seq | structure): whole-sequence entry, else the per-position sum.
inline double sequence_log_likelihood(const LikelihoodTable& table, const std::string& structure_id,
                                      const std::string& seq) {
  if (auto ll = table.find(structure_id, seq)) return *ll;
  if (const auto* rows = table.per_position(structure_id)) {
    if (rows->size() != seq.size()) {
      throw Error(ErrorKind::length_mismatch, "per-position data for " + structure_id + " has length " +
                                                  std::to_string(rows->size()) + ", sequence has " +
                                                  std::to_string(seq.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) sum += (*rows)[i][table.alphabet().require_index(seq[i])];
    return sum;
  }
  throw Error(ErrorKind::missing_entry, "no entry for (" + structure_id + ", " + seq + ") in " + table.ensemble_id());
}

/// ln p(mt | x) - ln p(wt | x) for one ensemble member.
inline double per_sample_log_ratio(const LikelihoodTable& table, const std::string& structure_id,
                                   const std::string& wt, const std::string& mt,
                                   EvalMode mode = EvalMode::whole_sequence) {
  auto sites = differing_positions(wt, mt);
  if (sites.empty()) return 0.0;
  if (mode == EvalMode::whole_sequence) {
    return sequence_log_likelihood(table, structure_id, mt) - sequence_log_likelihood(table, structure_id, wt);
  }
  const auto* rows = table.per_position(structure_id);
  if (!rows) {
    throw Error(ErrorKind::missing_entry, "no per-position data for " + structure_id + " in " + table.ensemble_id());
  }
  if (rows->size() != wt.size()) {
    throw Error(ErrorKind::length_mismatch, "per-position data for " + structure_id + " has length " +
                                                std::to_string(rows->size()) + ", sequence has " +
                                                std::to_string(wt.size()));
  }
  const auto& alphabet = table.alphabet();
  double sum = 0.0;
  for (std::size_t pos : sites) {
    const auto& v = (*rows)[pos - 1];
    sum += v[alphabet.require_index(mt[pos - 1])] - v[alphabet.require_index(wt[pos - 1])];
  }
  return sum;
}

inline double per_sample_log_ratio(const LikelihoodTable& table, const std::string& structure_id, const Sequence& wt,
                                   const Sequence& mt, EvalMode mode = EvalMode::whole_sequence) {
  return per_sample_log_ratio(table, structure_id, wt.str(), mt.str(), mode);
}

/// logsumexp(log_ratios) - ln n: the log of the mean likelihood ratio.
inline EnsembleScore log_mean_ratio(std::span<const double> log_ratios, State state = State::folded) {
  if (log_ratios.empty()) throw Error(ErrorKind::empty_input, "log_mean_ratio of an empty ensemble");
  for (double v : log_ratios) {
    if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, "non-finite log-ratio");
  }
  EnsembleScore s;
  s.state = state;
  s.n_samples = log_ratios.size();
  s.per_sample_log_ratios.assign(log_ratios.begin(), log_ratios.end());
  // Summing in sorted order makes the result independent of member order.
  std::vector<double> sorted(log_ratios.begin(), log_ratios.end());
  std::sort(sorted.begin(), sorted.end());
  s.log_mean_ratio = log_mean_exp(sorted);
  return s;
}

/// Weighted form: ln(sum_i w_i r_i / sum_i w_i).
inline EnsembleScore log_mean_ratio(std::span<const double> log_ratios, std::span<const double> log_weights,
                                    State state) {
  if (log_weights.empty()) return log_mean_ratio(log_ratios, state);
  auto s = log_mean_ratio(log_ratios, state);
  s.log_weights.assign(log_weights.begin(), log_weights.end());
  if (log_weights.size() != log_ratios.size()) {
    throw Error(ErrorKind::length_mismatch, "log_mean_ratio: one weight per sample required");
  }
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < log_ratios.size(); ++i) pairs.emplace_back(log_ratios[i], log_weights[i]);
  std::sort(pairs.begin(), pairs.end());
  std::vector<double> r, w;
  for (const auto& [x, lw] : pairs) {
    r.push_back(x);
    w.push_back(lw);
  }
  s.log_mean_ratio = log_weighted_mean_exp(r, w);
  return s;
}

/// Ensemble term for the table's state, averaging over every member that
/// carries the wild type (see LikelihoodTable::members_for).
inline EnsembleScore ensemble_log_ratio(const LikelihoodTable& table, const std::string& wt, const std::string& mt,
                                        EvalMode mode = EvalMode::whole_sequence) {
  auto members = table.members_for(wt, mode);
  if (members.empty()) {
    throw Error(ErrorKind::missing_entry, "ensemble " + table.ensemble_id() + " has no member for sequence " + wt);
  }
  std::vector<double> ratios;
  std::vector<double> weights;
  ratios.reserve(members.size());
  for (const auto& id : members) {
    ratios.push_back(per_sample_log_ratio(table, id, wt, mt, mode));
    if (table.weighted()) {
      auto w = table.log_weight(id);
      if (!w) throw Error(ErrorKind::missing_entry, "no weight for " + id);
      weights.push_back(*w);
    }
  }
  return log_mean_ratio(ratios, weights, table.state());
}

inline EnsembleScore ensemble_log_ratio(const LikelihoodTable& table, const Sequence& wt, const Sequence& mt,
                                        EvalMode mode = EvalMode::whole_sequence) {
  return ensemble_log_ratio(table, wt.str(), mt.str(), mode);
}

/// βΔG̃^S_{a'→a} = ln E_S[p(a'|x)/p(a|x)] + ln(p(a)/p(a')).
inline double pseudo_dG(const LikelihoodTable& ensemble, const Sequence& wt, const Sequence& mt,
                        const FrequencyModel& seq_model, EvalMode mode = EvalMode::whole_sequence) {
  if (wt == mt) return 0.0;
  double term = ensemble_log_ratio(ensemble, wt, mt, mode).log_mean_ratio;
  return term - seq_model.log_ratio(wt.str(), mt.str());
}

// ---------------------------------------------------------------------------
// βΔΔG estimators
// ---------------------------------------------------------------------------

/// Folded and unfolded ensembles; the sequence marginal cancels.
inline EstimatorResult ddg_full(const EnsembleScore& folded, const EnsembleScore& unfolded,
                                EvalMode mode = EvalMode::whole_sequence,
                                std::string strategy = to_string(Strategy::full_f_multi_u_multi)) {
  if (folded.state != State::folded || unfolded.state != State::unfolded) {
    throw Error(ErrorKind::state_mismatch, "ddg_full needs one folded and one unfolded ensemble");
  }
  auto r = make_result(std::move(strategy), unfolded.log_mean_ratio, folded.log_mean_ratio, 0.0, mode);
  r.diagnostics["folded_mean_log_ratio"] = folded.mean_log_ratio();
  r.diagnostics["unfolded_mean_log_ratio"] = unfolded.mean_log_ratio();
  return r;
}

inline EstimatorResult ddg_full(const LikelihoodTable& folded, const LikelihoodTable& unfolded, const Sequence& wt,
                                const Sequence& mt, EvalMode mode = EvalMode::whole_sequence,
                                std::string strategy = to_string(Strategy::full_f_multi_u_multi)) {
  if (folded.state() != State::folded || unfolded.state() != State::unfolded) {
    throw Error(ErrorKind::state_mismatch, "ddg_full needs an F-labelled and a U-labelled table");
  }
  if (wt == mt) return make_result(std::move(strategy), 0.0, 0.0, 0.0, mode);
  return ddg_full(ensemble_log_ratio(folded, wt, mt, mode), ensemble_log_ratio(unfolded, wt, mt, mode), mode,
                  std::move(strategy));
}

/// Folded state only: -ln E_F[ratio], optionally minus ln(p(a)/p(a')).
inline EstimatorResult ddg_folded_only(const EnsembleScore& folded, const Sequence& wt, const Sequence& mt,
                                       const FrequencyModel* seq_model, bool apply_correction,
                                       EvalMode mode = EvalMode::whole_sequence,
                                       std::string strategy = to_string(Strategy::folded_multi)) {
  if (folded.state != State::folded) throw Error(ErrorKind::state_mismatch, "folded-only estimator given a U ensemble");
  double correction = 0.0;
  if (apply_correction) {
    if (!seq_model) throw Error(ErrorKind::config, "p(a) correction requested without a sequence model");
    correction = -seq_model->log_ratio(wt.str(), mt.str());
  }
  auto r = make_result(std::move(strategy), 0.0, folded.log_mean_ratio, correction, mode);
  r.diagnostics["folded_mean_log_ratio"] = folded.mean_log_ratio();
  return r;
}

inline EstimatorResult ddg_folded_only(const LikelihoodTable& folded, const Sequence& wt, const Sequence& mt,
                                       const FrequencyModel* seq_model, bool apply_correction,
                                       EvalMode mode = EvalMode::whole_sequence,
                                       std::string strategy = to_string(Strategy::folded_multi)) {
  if (folded.state() != State::folded) throw Error(ErrorKind::state_mismatch, "folded-only estimator given a U table");
  if (wt == mt) return make_result(std::move(strategy), 0.0, 0.0, 0.0, mode);
  return ddg_folded_only(ensemble_log_ratio(folded, wt, mt, mode), wt, mt, seq_model, apply_correction, mode,
                         std::move(strategy));
}

/// Unfolded state from a sequence model, folded state from the ensemble.
inline EstimatorResult ddg_hybrid(const EnsembleScore& folded, const FrequencyModel& unfolded_seq_model,
                                  const Sequence& wt, const Sequence& mt, EvalMode mode = EvalMode::whole_sequence,
                                  std::string strategy = to_string(Strategy::hybrid_idp_f_multi)) {
  if (folded.state != State::folded) throw Error(ErrorKind::state_mismatch, "hybrid estimator given a U ensemble");
  return make_result(std::move(strategy), unfolded_seq_model.log_ratio(wt.str(), mt.str()), folded.log_mean_ratio,
                     0.0, mode);
}

inline EstimatorResult ddg_hybrid(const LikelihoodTable& folded, const FrequencyModel& unfolded_seq_model,
                                  const Sequence& wt, const Sequence& mt, EvalMode mode = EvalMode::whole_sequence,
                                  std::string strategy = to_string(Strategy::hybrid_idp_f_multi)) {
  if (folded.state() != State::folded) throw Error(ErrorKind::state_mismatch, "hybrid estimator given a U table");
  if (wt == mt) return make_result(std::move(strategy), 0.0, 0.0, 0.0, mode);
  return ddg_hybrid(ensemble_log_ratio(folded, wt, mt, mode), unfolded_seq_model, wt, mt, mode, std::move(strategy));
}

/// State-conditional sequence models for both states.
inline EstimatorResult ddg_sequence_only(const FrequencyModel& folded_model, const FrequencyModel& unfolded_model,
                                         const Sequence& wt, const Sequence& mt) {
  return make_result(to_string(Strategy::sequence_only), unfolded_model.log_ratio(wt.str(), mt.str()),
                     folded_model.log_ratio(wt.str(), mt.str()), 0.0, EvalMode::mutated_sites_only);
}

// ---------------------------------------------------------------------------
// Occupancy and stability
// ---------------------------------------------------------------------------

/// βΔG^{U→F} = ln(1/p_F - 1) from the folded-state occupancy.
inline double stability_from_pF(double p_folded) {
  if (!(p_folded > 0.0 && p_folded < 1.0)) {
    throw Error(ErrorKind::domain, "folded probability must lie in (0, 1), got " + std::to_string(p_folded));
  }
  return std::log1p(-p_folded) - std::log(p_folded);
}

/// Inverse of stability_from_pF: p_F = 1 / (1 + exp(βΔG^{U→F})).
inline double pF_from_stability(double beta_dG) {
  if (std::isnan(beta_dG)) throw Error(ErrorKind::domain, "stability is NaN");
  if (beta_dG >= 0) {
    double e = std::exp(-beta_dG);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(beta_dG));
}

/// f(y) = ln(exp(y)/p_F(wt) - 1): the variant's βΔG^{U→F} given
/// y = -βΔG̃^F. Strictly increasing in y, strictly decreasing in p_F(wt).
inline double rank_transform(double y, double p_folded_wt) {
  if (!(p_folded_wt > 0.0 && p_folded_wt < 1.0)) {
    throw Error(ErrorKind::domain, "wild-type folded probability must lie in (0, 1)");
  }
  double shifted = y - std::log(p_folded_wt);
  if (!(shifted > 0.0)) {
    throw Error(ErrorKind::domain, "exp(y) <= p_F(wt): the variant folded probability would exceed 1");
  }
  return std::log(std::expm1(shifted));
}

}  // namespace ddgkit
