#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddgkit/csv.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/logmath.hpp"
#include "ddgkit/sequence.hpp"

namespace ddgkit {

inline constexpr double frequency_tolerance = 1e-9;
inline constexpr double default_pseudo_count = 0.5;

/// Factorized sequence model: one log-probability vector over the alphabet,
/// either shared by all positions or given per position.
class FrequencyModel {
 public:
  enum class Kind { position_independent, per_position };

  FrequencyModel(Alphabet alphabet, Kind kind, std::vector<std::vector<double>> log_probs)
      : alphabet_(std::move(alphabet)), kind_(kind), log_probs_(std::move(log_probs)) {
    if (log_probs_.empty()) throw Error(ErrorKind::empty_input, "frequency model without distributions");
    if (kind_ == Kind::position_independent && log_probs_.size() != 1) {
      throw Error(ErrorKind::length_mismatch, "position-independent model needs exactly one distribution");
    }
    for (std::size_t p = 0; p < log_probs_.size(); ++p) {
      const auto& v = log_probs_[p];
      if (v.size() != alphabet_.size()) {
        throw Error(ErrorKind::length_mismatch, "distribution " + std::to_string(p + 1) + " has " +
                                                    std::to_string(v.size()) + " values for a " +
                                                    std::to_string(alphabet_.size()) + "-letter alphabet");
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == neg_inf) {
          throw Error(ErrorKind::zero_probability, std::string("letter '") + alphabet_.letter(i) + "' has zero probability");
        }
        if (!std::isfinite(v[i])) throw Error(ErrorKind::non_finite, "non-finite log-probability");
      }
      double lse = logsumexp(v);
      if (!(std::abs(lse) <= frequency_tolerance)) {
        throw Error(ErrorKind::not_normalized, "distribution " + std::to_string(p + 1) +
                                                   " does not normalize (logsumexp = " + std::to_string(lse) + ")");
      }
    }
  }

  static FrequencyModel from_probabilities(const Alphabet& alphabet, const std::vector<double>& probs) {
    std::vector<double> lp;
    for (double p : probs) lp.push_back(std::log(p));
    return FrequencyModel(alphabet, Kind::position_independent, {lp});
  }

  static FrequencyModel uniform(const Alphabet& alphabet) {
    return FrequencyModel(alphabet, Kind::position_independent,
                          {std::vector<double>(alphabet.size(), -std::log(static_cast<double>(alphabet.size())))});
  }

  /// ln((count + pseudo) / (total + |alphabet| * pseudo)); letters absent from
  /// `counts` count as zero.
  static FrequencyModel from_counts(const Alphabet& alphabet, const std::map<char, double>& counts,
                                    double pseudo_count = default_pseudo_count) {
    if (pseudo_count < 0 || !std::isfinite(pseudo_count)) throw Error(ErrorKind::domain, "pseudo-count must be >= 0");
    double total = 0.0;
    for (const auto& [letter, c] : counts) {
      alphabet.require_index(letter);
      if (c < 0 || !std::isfinite(c)) throw Error(ErrorKind::domain, std::string("negative count for '") + letter + "'");
      total += c;
    }
    double denom = total + pseudo_count * static_cast<double>(alphabet.size());
    if (denom <= 0) throw Error(ErrorKind::zero_probability, "all counts are zero and the pseudo-count is zero");
    std::vector<double> lp(alphabet.size());
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
      auto it = counts.find(alphabet.letter(i));
      double c = it == counts.end() ? 0.0 : it->second;
      lp[i] = std::log(c + pseudo_count) - std::log(denom);
    }
    return FrequencyModel(alphabet, Kind::position_independent, {lp});
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  Kind kind() const noexcept { return kind_; }
  const std::vector<std::vector<double>>& log_probs() const noexcept { return log_probs_; }

  /// ln p(letter) at a 1-based position (ignored for position-independent models).
  double log_prob(char letter, std::size_t position = 1) const {
    std::size_t idx = alphabet_.require_index(letter);
    if (kind_ == Kind::position_independent) return log_probs_[0][idx];
    if (position < 1 || position > log_probs_.size()) {
      throw Error(ErrorKind::position_out_of_range, "model covers positions 1.." + std::to_string(log_probs_.size()));
    }
    return log_probs_[position - 1][idx];
  }

  /// ln p(mt) - ln p(wt) for two residue strings, summed over differing sites.
  double log_ratio(std::string_view wt, std::string_view mt) const {
    if (kind_ == Kind::per_position && wt.size() != log_probs_.size()) {
      throw Error(ErrorKind::length_mismatch, "per-position model of length " + std::to_string(log_probs_.size()) +
                                                  " applied to length " + std::to_string(wt.size()));
    }
    double sum = 0.0;
    for (std::size_t pos : differing_positions(wt, mt)) {
      sum += log_prob(mt[pos - 1], pos) - log_prob(wt[pos - 1], pos);
    }
    return sum;
  }

 private:
  Alphabet alphabet_;
  Kind kind_;
  std::vector<std::vector<double>> log_probs_;
};

/// Reads `amino_acid,log_prob`, `amino_acid,count` (smoothed with
/// `pseudo_count`) or `position,<letters>` files.
inline FrequencyModel load_frequency_model(const std::filesystem::path& path,
                                           const Alphabet& alphabet = Alphabet::canonical(),
                                           double pseudo_count = default_pseudo_count) {
  auto doc = csv::read_file(path);
  auto source = path.string();
  if (doc.header.size() == 2 && doc.header[0] == "amino_acid" &&
      (doc.header[1] == "log_prob" || doc.header[1] == "count")) {
    bool counts = doc.header[1] == "count";
    std::map<char, double> values;
    for (const auto& row : doc.rows) {
      auto where = csv::location(source, row.line);
      const auto& f = row.fields;
      if (f[0].size() != 1 || !alphabet.contains(f[0][0])) {
        throw Error(ErrorKind::parse, where + ": '" + f[0] + "' is not an alphabet letter");
      }
      double x = 0.0;
      if (!csv::parse_double(f[1], x)) throw Error(ErrorKind::parse, where + ": bad number '" + f[1] + "'");
      if (!values.emplace(f[0][0], x).second) throw Error(ErrorKind::duplicate_entry, where + ": letter repeated");
    }
    if (values.size() != alphabet.size()) {
      throw Error(ErrorKind::schema, source + ": expected exactly one row per alphabet letter (" + alphabet.letters() + ")");
    }
    if (counts) return FrequencyModel::from_counts(alphabet, values, pseudo_count);
    std::vector<double> lp(alphabet.size());
    for (const auto& [c, x] : values) lp[alphabet.require_index(c)] = x;
    return FrequencyModel(alphabet, FrequencyModel::Kind::position_independent, {lp});
  }
  if (doc.header.size() == alphabet.size() + 1 && doc.header[0] == "position") {
    std::vector<std::size_t> col;
    for (std::size_t c = 1; c < doc.header.size(); ++c) {
      if (doc.header[c].size() != 1) throw Error(ErrorKind::schema, source + ": bad letter column '" + doc.header[c] + "'");
      col.push_back(alphabet.require_index(doc.header[c][0]));
    }
    std::vector<std::vector<double>> rows;
    for (const auto& row : doc.rows) {
      auto where = csv::location(source, row.line);
      long long pos = 0;
      if (!csv::parse_int(row.fields[0], pos) || pos != static_cast<long long>(rows.size()) + 1) {
        throw Error(ErrorKind::parse, where + ": positions must run 1, 2, 3, ...");
      }
      std::vector<double> v(alphabet.size());
      for (std::size_t c = 1; c < row.fields.size(); ++c) {
        if (!csv::parse_double(row.fields[c], v[col[c - 1]])) {
          throw Error(ErrorKind::parse, where + ": bad number '" + row.fields[c] + "'");
        }
      }
      rows.push_back(std::move(v));
    }
    return FrequencyModel(alphabet, FrequencyModel::Kind::per_position, std::move(rows));
  }
  throw Error(ErrorKind::schema, source + ": unrecognized frequency model header '" + csv::join(doc.header) + "'");
}

inline std::string serialize_frequency_model(const FrequencyModel& model) {
  const auto& letters = model.alphabet().letters();
  std::string out;
  if (model.kind() == FrequencyModel::Kind::position_independent) {
    out = "amino_acid,log_prob\n";
    for (std::size_t i = 0; i < letters.size(); ++i) {
      out += std::string(1, letters[i]) + "," + csv::format_double(model.log_probs()[0][i]) + "\n";
    }
    return out;
  }
  out = "position";
  for (char c : letters) out += std::string(",") + c;
  out += "\n";
  for (std::size_t p = 0; p < model.log_probs().size(); ++p) {
    out += std::to_string(p + 1);
    for (double x : model.log_probs()[p]) out += "," + csv::format_double(x);
    out += "\n";
  }
  return out;
}

}  // namespace ddgkit
