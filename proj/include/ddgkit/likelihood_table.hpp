#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddgkit/csv.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/logmath.hpp"
#include "ddgkit/sequence.hpp"

namespace ddgkit {

enum class State { folded, unfolded };

inline char state_code(State s) { return s == State::folded ? 'F' : 'U'; }

inline State parse_state(std::string_view text) {
  if (text == "F") return State::folded;
  if (text == "U") return State::unfolded;
  throw Error(ErrorKind::parse, "state must be F or U, got '" + std::string(text) + "'");
}

/// How sequence log-likelihood differences are read from a table.
enum class EvalMode {
  whole_sequence,      // difference of whole-sequence log-likelihood entries
  mutated_sites_only,  // sum of per-position log-prob differences at mutated sites
};

inline const char* to_string(EvalMode m) {
  return m == EvalMode::whole_sequence ? "whole_sequence" : "mutated_sites_only";
}

inline EvalMode parse_eval_mode(std::string_view text) {
  if (text == "whole_sequence") return EvalMode::whole_sequence;
  if (text == "mutated_sites_only") return EvalMode::mutated_sites_only;
  throw Error(ErrorKind::config, "unknown evaluation mode '" + std::string(text) + "'");
}

inline constexpr double default_position_tolerance = 1e-6;

/// Inverse-folding log-likelihoods ln p(sequence | structure) for the members
/// of one structural ensemble, all labelled with the same state.
class LikelihoodTable {
 public:
  using PositionMatrix = std::vector<std::vector<double>>;  // [position-1][alphabet index]

  LikelihoodTable(std::string ensemble_id, State state, Alphabet alphabet = Alphabet::canonical())
      : ensemble_id_(std::move(ensemble_id)), state_(state), alphabet_(std::move(alphabet)) {}

  const std::string& ensemble_id() const noexcept { return ensemble_id_; }
  State state() const noexcept { return state_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }

  void add_entry(const std::string& structure_id, const std::string& sequence, double log_likelihood) {
    if (!std::isfinite(log_likelihood)) {
      throw Error(ErrorKind::non_finite, "log-likelihood for (" + structure_id + ", " + sequence + ") is not finite");
    }
    auto& row = entries_[structure_id];
    if (!row.emplace(sequence, log_likelihood).second) {
      throw Error(ErrorKind::duplicate_entry, "duplicate entry (" + structure_id + ", " + sequence + ")");
    }
    ++entry_count_;
  }

  void set_per_position(const std::string& structure_id, PositionMatrix rows,
                        double tolerance = default_position_tolerance) {
    for (std::size_t p = 0; p < rows.size(); ++p) {
      const auto& v = rows[p];
      if (v.size() != alphabet_.size()) {
        throw Error(ErrorKind::length_mismatch, structure_id + " position " + std::to_string(p + 1) +
                                                    ": expected " + std::to_string(alphabet_.size()) + " values");
      }
      for (double x : v) {
        if (!std::isfinite(x)) {
          throw Error(ErrorKind::non_finite, structure_id + " position " + std::to_string(p + 1) + " has a non-finite value");
        }
      }
      double lse = logsumexp(v);
      if (!(std::abs(lse) <= tolerance)) {
        throw Error(ErrorKind::not_normalized, structure_id + " position " + std::to_string(p + 1) +
                                                   ": logsumexp = " + std::to_string(lse));
      }
    }
    if (!per_position_.emplace(structure_id, std::move(rows)).second) {
      throw Error(ErrorKind::duplicate_entry, "per-position block for " + structure_id + " given twice");
    }
  }

  void set_log_weight(const std::string& structure_id, double log_weight) {
    if (std::isnan(log_weight) || log_weight == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorKind::non_finite, "log-weight for " + structure_id + " is not finite");
    }
    if (!log_weights_.emplace(structure_id, log_weight).second) {
      throw Error(ErrorKind::duplicate_entry, "weight for " + structure_id + " given twice");
    }
  }

  std::size_t entry_count() const noexcept { return entry_count_; }
  bool empty() const noexcept { return entries_.empty() && per_position_.empty(); }

  /// Sorted ids of every structure with entries or per-position data.
  std::vector<std::string> structures() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : entries_) out.push_back(id);
    for (const auto& [id, _] : per_position_) {
      if (!entries_.count(id)) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::optional<double> find(const std::string& structure_id, const std::string& sequence) const {
    auto it = entries_.find(structure_id);
    if (it == entries_.end()) return std::nullopt;
    auto jt = it->second.find(sequence);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
  }

  const PositionMatrix* per_position(const std::string& structure_id) const {
    auto it = per_position_.find(structure_id);
    return it == per_position_.end() ? nullptr : &it->second;
  }

  bool weighted() const noexcept { return !log_weights_.empty(); }

  std::optional<double> log_weight(const std::string& structure_id) const {
    auto it = log_weights_.find(structure_id);
    if (it == log_weights_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, std::map<std::string, double>>& entries() const noexcept { return entries_; }
  const std::map<std::string, PositionMatrix>& per_position_blocks() const noexcept { return per_position_; }
  const std::map<std::string, double>& log_weights() const noexcept { return log_weights_; }

  /// Ensemble members usable for a wild type with residue string `wt`:
  /// structures carrying a whole-sequence entry for it (whole_sequence mode),
  /// otherwise structures whose per-position block matches its length.
  std::vector<std::string> members_for(const std::string& wt, EvalMode mode) const {
    std::vector<std::string> out;
    if (mode == EvalMode::whole_sequence) {
      for (const auto& [id, row] : entries_) {
        if (row.count(wt)) out.push_back(id);
      }
      if (!out.empty()) return out;
    }
    for (const auto& [id, rows] : per_position_) {
      if (rows.size() == wt.size()) out.push_back(id);
    }
    return out;
  }

 private:
  std::string ensemble_id_;
  State state_;
  Alphabet alphabet_;
  std::map<std::string, std::map<std::string, double>> entries_;
  std::map<std::string, PositionMatrix> per_position_;
  std::map<std::string, double> log_weights_;
  std::size_t entry_count_ = 0;
};

inline const std::vector<std::string> likelihood_header = {"ensemble_id", "state", "structure_id", "sequence",
                                                           "log_likelihood"};

/// `<dir>/<stem>.positions.csv` next to `<dir>/<stem>.csv`.
inline std::filesystem::path companion_path(const std::filesystem::path& table_path, const std::string& kind) {
  auto p = table_path;
  p.replace_extension();
  p += "." + kind + ".csv";
  return p;
}

struct LoadOptions {
  Alphabet alphabet = Alphabet::canonical();
  double position_tolerance = default_position_tolerance;
};

inline LikelihoodTable parse_likelihood_table(std::istream& in, const std::string& source, const LoadOptions& opts = {}) {
  auto doc = csv::parse(in, source);
  csv::require_header(doc, likelihood_header, source);
  if (doc.rows.empty()) throw Error(ErrorKind::empty_input, source + ": no data rows");

  const auto& first = doc.rows.front().fields;
  State state = parse_state(first[1]);
  LikelihoodTable table(first[0], state, opts.alphabet);
  for (const auto& row : doc.rows) {
    const auto& f = row.fields;
    auto where = csv::location(source, row.line);
    if (f[0] != table.ensemble_id()) {
      throw Error(ErrorKind::parse, where + ": ensemble_id '" + f[0] + "' differs from '" + table.ensemble_id() + "'");
    }
    State s;
    try {
      s = parse_state(f[1]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, where + ": " + e.what());
    }
    if (s != state) throw Error(ErrorKind::mixed_state, where + ": mixed state labels in one table");
    if (f[2].empty()) throw Error(ErrorKind::parse, where + ": empty structure_id");
    try {
      Sequence(f[3], opts.alphabet);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, where + ": " + e.what());
    }
    double ll = 0.0;
    if (!csv::parse_double(f[4], ll)) throw Error(ErrorKind::parse, where + ": bad number '" + f[4] + "'");
    if (!std::isfinite(ll)) throw Error(ErrorKind::non_finite, where + ": log_likelihood '" + f[4] + "' is not finite");
    if (table.find(f[2], f[3])) {
      throw Error(ErrorKind::duplicate_entry, where + ": duplicate (" + f[2] + ", " + f[3] + ")");
    }
    table.add_entry(f[2], f[3], ll);
  }
  return table;
}

inline void parse_positions_into(LikelihoodTable& table, std::istream& in, const std::string& source,
                                 double tolerance = default_position_tolerance) {
  auto doc = csv::parse(in, source);
  const auto& alphabet = table.alphabet();
  if (doc.header.size() != alphabet.size() + 2 || doc.header[0] != "structure_id" || doc.header[1] != "position") {
    throw Error(ErrorKind::schema, source + ": expected header structure_id,position,<alphabet letters>");
  }
  std::vector<std::size_t> column_to_letter;
  std::string seen;
  for (std::size_t c = 2; c < doc.header.size(); ++c) {
    if (doc.header[c].size() != 1 || !alphabet.contains(doc.header[c][0])) {
      throw Error(ErrorKind::schema, source + ": column '" + doc.header[c] + "' is not an alphabet letter");
    }
    seen += doc.header[c][0];
    column_to_letter.push_back(alphabet.require_index(doc.header[c][0]));
  }
  if (!Alphabet(seen).same_letters(alphabet)) throw Error(ErrorKind::schema, source + ": letter columns do not cover the alphabet");

  std::map<std::string, std::map<long long, std::vector<double>>> blocks;
  for (const auto& row : doc.rows) {
    const auto& f = row.fields;
    auto where = csv::location(source, row.line);
    long long pos = 0;
    if (!csv::parse_int(f[1], pos) || pos < 1) throw Error(ErrorKind::parse, where + ": bad position '" + f[1] + "'");
    std::vector<double> v(alphabet.size());
    for (std::size_t c = 2; c < f.size(); ++c) {
      double x = 0.0;
      if (!csv::parse_double(f[c], x)) throw Error(ErrorKind::parse, where + ": bad number '" + f[c] + "'");
      if (!std::isfinite(x)) {
        throw Error(ErrorKind::non_finite, where + ": non-finite log-probability");
      }
      v[column_to_letter[c - 2]] = x;
    }
    double lse = logsumexp(v);
    if (!(std::abs(lse) <= tolerance)) {
      throw Error(ErrorKind::not_normalized, where + ": row does not normalize (logsumexp = " + std::to_string(lse) + ")");
    }
    if (!blocks[f[0]].emplace(pos, std::move(v)).second) {
      throw Error(ErrorKind::duplicate_entry, where + ": duplicate (" + f[0] + ", " + f[1] + ")");
    }
  }
  for (auto& [id, rows] : blocks) {
    LikelihoodTable::PositionMatrix m;
    long long expect = 1;
    for (auto& [pos, v] : rows) {
      if (pos != expect) {
        throw Error(ErrorKind::parse, source + ": structure " + id + " is missing position " + std::to_string(expect));
      }
      m.push_back(std::move(v));
      ++expect;
    }
    table.set_per_position(id, std::move(m), tolerance);
  }
}

inline void parse_weights_into(LikelihoodTable& table, std::istream& in, const std::string& source) {
  auto doc = csv::parse(in, source);
  csv::require_header(doc, {"structure_id", "log_weight"}, source);
  auto known = table.structures();
  for (const auto& row : doc.rows) {
    auto where = csv::location(source, row.line);
    double w = 0.0;
    if (!csv::parse_double(row.fields[1], w)) throw Error(ErrorKind::parse, where + ": bad number '" + row.fields[1] + "'");
    if (!std::binary_search(known.begin(), known.end(), row.fields[0])) {
      throw Error(ErrorKind::parse, where + ": weight for unknown structure '" + row.fields[0] + "'");
    }
    try {
      table.set_log_weight(row.fields[0], w);
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    }
  }
  for (const auto& id : known) {
    if (!table.log_weight(id)) throw Error(ErrorKind::parse, source + ": structure " + id + " has no weight");
  }
}

/// Loads a table plus its optional `.positions.csv` and `.weights.csv` companions.
inline LikelihoodTable load_likelihood_table(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  auto table = parse_likelihood_table(in, path.string(), opts);
  auto positions = companion_path(path, "positions");
  if (std::filesystem::exists(positions)) {
    std::ifstream pin(positions);
    parse_positions_into(table, pin, positions.string(), opts.position_tolerance);
  }
  auto weights = companion_path(path, "weights");
  if (std::filesystem::exists(weights)) {
    std::ifstream win(weights);
    parse_weights_into(table, win, weights.string());
  }
  return table;
}

/// Canonical text of the main table: rows sorted by (structure_id, sequence).
inline std::string serialize_likelihood_table(const LikelihoodTable& table) {
  std::string out = csv::join(likelihood_header) + "\n";
  std::string prefix = table.ensemble_id() + "," + state_code(table.state()) + ",";
  for (const auto& [id, row] : table.entries()) {
    for (const auto& [seq, ll] : row) {
      out += prefix + id + "," + seq + "," + csv::format_double(ll) + "\n";
    }
  }
  return out;
}

inline std::string serialize_positions(const LikelihoodTable& table) {
  std::string out = "structure_id,position";
  for (char c : table.alphabet().letters()) {
    out += ',';
    out += c;
  }
  out += "\n";
  for (const auto& [id, rows] : table.per_position_blocks()) {
    for (std::size_t p = 0; p < rows.size(); ++p) {
      out += id + "," + std::to_string(p + 1);
      for (double x : rows[p]) out += "," + csv::format_double(x);
      out += "\n";
    }
  }
  return out;
}

inline std::string serialize_weights(const LikelihoodTable& table) {
  std::string out = "structure_id,log_weight\n";
  for (const auto& [id, w] : table.log_weights()) out += id + "," + csv::format_double(w) + "\n";
  return out;
}

inline void write_likelihood_table(const std::filesystem::path& path, const LikelihoodTable& table) {
  csv::write_file(path, serialize_likelihood_table(table));
  if (!table.per_position_blocks().empty()) csv::write_file(companion_path(path, "positions"), serialize_positions(table));
  if (table.weighted()) csv::write_file(companion_path(path, "weights"), serialize_weights(table));
}

}  // namespace ddgkit
