#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>

#include "ddgkit/estimators.hpp"
#include "ddgkit/frequency_model.hpp"
#include "ddgkit/likelihood_table.hpp"

namespace ddgkit {

// Unfolded-state treatments. Each reduces to a log-ratio term
// ln p(a'|U) - ln p(a|U) (or its ensemble analogue) that plugs into the
// unfolded slot of the βΔΔG estimators.

/// Position-independent amino-acid frequencies from disordered regions.
struct IdpFrequencyModel {
  FrequencyModel model;
  std::string provenance;
};

inline IdpFrequencyModel idp_model_from_counts(const std::map<char, double>& counts, double pseudo_count,
                                               const Alphabet& alphabet = Alphabet::canonical(),
                                               std::string provenance = {}) {
  bool any_positive = std::any_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second > 0; });
  if (!any_positive && pseudo_count <= 0) {
    throw Error(ErrorKind::zero_probability, "IDP counts are all zero and the pseudo-count is zero");
  }
  return IdpFrequencyModel{FrequencyModel::from_counts(alphabet, counts, pseudo_count), std::move(provenance)};
}

/// Reads an `amino_acid,count` file listing exactly the alphabet's letters.
inline IdpFrequencyModel load_idp_counts(const std::filesystem::path& path, double pseudo_count = default_pseudo_count,
                                         const Alphabet& alphabet = Alphabet::canonical()) {
  auto doc = csv::read_file(path);
  csv::require_header(doc, {"amino_acid", "count"}, path.string());
  std::map<char, double> counts;
  for (const auto& row : doc.rows) {
    auto where = csv::location(path.string(), row.line);
    if (row.fields[0].size() != 1 || !alphabet.contains(row.fields[0][0])) {
      throw Error(ErrorKind::parse, where + ": '" + row.fields[0] + "' is not an alphabet letter");
    }
    double c = 0.0;
    if (!csv::parse_double(row.fields[1], c) || c < 0 || !std::isfinite(c)) {
      throw Error(ErrorKind::parse, where + ": bad count '" + row.fields[1] + "'");
    }
    if (!counts.emplace(row.fields[0][0], c).second) throw Error(ErrorKind::duplicate_entry, where + ": letter repeated");
  }
  if (counts.size() != alphabet.size()) {
    throw Error(ErrorKind::schema, path.string() + ": expected one row per letter of " + alphabet.letters());
  }
  return idp_model_from_counts(counts, pseudo_count, alphabet, "counts from " + path.filename().string());
}

/// Σ_i ln p(mt_i|U) - ln p(wt_i|U) over the mutated sites.
inline double unfolded_log_ratio_idp(const IdpFrequencyModel& idp, std::span<const Mutation> mutations) {
  double sum = 0.0;
  for (const auto& m : mutations) sum += idp.model.log_prob(m.mt, m.position) - idp.model.log_prob(m.wt, m.position);
  return sum;
}

inline double unfolded_log_ratio_idp(const IdpFrequencyModel& idp, const Sequence& wt, const Sequence& mt) {
  return idp.model.log_ratio(wt.str(), mt.str());
}

/// Residue window [center - flank, center + flank], truncated at the termini.
struct FragmentSpec {
  std::size_t center = 1;  // 1-based
  std::size_t flank = 1;

  struct Window {
    std::size_t first;  // 1-based, inclusive
    std::size_t last;   // 1-based, inclusive
    bool clamped;
    std::size_t length() const { return last - first + 1; }
    bool contains(std::size_t pos) const { return pos >= first && pos <= last; }
  };

  Window window(std::size_t sequence_length) const {
    if (center < 1 || center > sequence_length) {
      throw Error(ErrorKind::position_out_of_range, "fragment center " + std::to_string(center) + " outside 1.." +
                                                        std::to_string(sequence_length));
    }
    std::size_t first = center > flank ? center - flank : 1;
    std::size_t last = std::min(sequence_length, center + flank);
    bool clamped = (center <= flank) || (center + flank > sequence_length);
    return Window{first, last, clamped};
  }

  std::string extract(const std::string& seq) const {
    auto w = window(seq.size());
    return seq.substr(w.first - 1, w.length());
  }
};

inline std::string fragment_structure_id(const std::string& protein_id, std::size_t center) {
  return protein_id + "_frag_" + std::to_string(center);
}

/// ln p(a'_window | x_fragment) - ln p(a_window | x_fragment) for the single
/// fragment structure `<protein>_frag_<center>`.
inline double unfolded_log_ratio_fragment(const LikelihoodTable& fragment_table, const std::string& protein_id,
                                          const FragmentSpec& spec, const Sequence& wt, const Sequence& mt,
                                          EvalMode mode = EvalMode::whole_sequence) {
  if (fragment_table.state() != State::unfolded) {
    throw Error(ErrorKind::state_mismatch, "fragment table must be U-labelled");
  }
  auto sites = differing_positions(wt.str(), mt.str());
  if (sites.empty()) return 0.0;
  auto w = spec.window(wt.size());
  for (auto pos : sites) {
    if (!w.contains(pos)) {
      throw Error(ErrorKind::mutation_outside_window, "mutation at " + std::to_string(pos) + " outside fragment " +
                                                          std::to_string(w.first) + ".." + std::to_string(w.last));
    }
  }
  auto id = fragment_structure_id(protein_id, spec.center);
  return per_sample_log_ratio(fragment_table, id, spec.extract(wt.str()), spec.extract(mt.str()), mode);
}

/// Unfolded ensemble term from sampled fragment conformations; `wt` and `mt`
/// are the residue strings the members were evaluated on (window sequences).
inline EnsembleScore unfolded_log_ratio_mc(const LikelihoodTable& mc_table, const std::string& wt, const std::string& mt,
                                           EvalMode mode = EvalMode::whole_sequence) {
  if (mc_table.state() != State::unfolded) throw Error(ErrorKind::state_mismatch, "MC table must be U-labelled");
  return ensemble_log_ratio(mc_table, wt, mt, mode);
}

}  // namespace ddgkit
