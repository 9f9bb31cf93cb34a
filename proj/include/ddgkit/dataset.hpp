#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ddgkit/csv.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/sequence.hpp"

namespace ddgkit {

/// Orientation of the targets in a source file. Unfolding ΔΔG values are
/// negated on load so every stored target is a folding ΔΔG.
enum class SignConvention { folding, unfolding };

inline SignConvention parse_sign_convention(std::string_view text) {
  if (text == "folding") return SignConvention::folding;
  if (text == "unfolding") return SignConvention::unfolding;
  throw Error(ErrorKind::config, "sign convention must be 'folding' or 'unfolding', got '" + std::string(text) + "'");
}

inline const char* to_string(SignConvention s) { return s == SignConvention::folding ? "folding" : "unfolding"; }

struct DatasetRecord {
  std::string protein_id;
  VariantSpec variant;
  double target;  // folding orientation
  bool censored = false;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct DatasetOptions {
  SignConvention sign_convention = SignConvention::folding;
  std::size_t min_variants_per_protein = 20;
  bool singles_only = false;
  std::set<std::string> known_proteins;  // empty: accept any id
  Alphabet alphabet = Alphabet::canonical();
};

class ExperimentalDataset {
 public:
  ExperimentalDataset() = default;
  ExperimentalDataset(std::vector<DatasetRecord> records, SignConvention source_convention,
                      std::size_t min_variants_per_protein, std::size_t dropped_multi = 0)
      : records_(std::move(records)),
        source_convention_(source_convention),
        min_variants_(min_variants_per_protein),
        dropped_multi_(dropped_multi) {}

  const std::vector<DatasetRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  SignConvention source_convention() const noexcept { return source_convention_; }
  std::size_t min_variants_per_protein() const noexcept { return min_variants_; }
  std::size_t dropped_multi_substitution() const noexcept { return dropped_multi_; }

  std::vector<std::string> proteins() const {
    std::set<std::string> ids;
    for (const auto& r : records_) ids.insert(r.protein_id);
    return {ids.begin(), ids.end()};
  }

  std::size_t count_for(const std::string& protein) const {
    std::size_t n = 0;
    for (const auto& r : records_) n += r.protein_id == protein;
    return n;
  }

  /// Proteins with at least the configured minimum number of records.
  std::vector<std::string> reportable_proteins() const {
    std::vector<std::string> out;
    for (const auto& p : proteins()) {
      if (count_for(p) >= min_variants_) out.push_back(p);
    }
    return out;
  }

  /// Copy without censored records.
  ExperimentalDataset without_censored() const {
    std::vector<DatasetRecord> kept;
    for (const auto& r : records_) {
      if (!r.censored) kept.push_back(r);
    }
    return ExperimentalDataset(std::move(kept), source_convention_, min_variants_, dropped_multi_);
  }

  bool has_censored() const {
    for (const auto& r : records_) {
      if (r.censored) return true;
    }
    return false;
  }

 private:
  std::vector<DatasetRecord> records_;
  SignConvention source_convention_ = SignConvention::folding;
  std::size_t min_variants_ = 20;
  std::size_t dropped_multi_ = 0;
};

inline const std::vector<std::string> dataset_header = {"protein_id", "wild_type_sequence", "mutations", "target",
                                                        "censored"};

inline bool parse_flag(std::string_view text, bool& out) {
  if (text.empty() || text == "0" || text == "false" || text == "False" || text == "FALSE") {
    out = false;
    return true;
  }
  if (text == "1" || text == "true" || text == "True" || text == "TRUE") {
    out = true;
    return true;
  }
  return false;
}

inline ExperimentalDataset parse_experimental_dataset(std::istream& in, const std::string& source,
                                                      const DatasetOptions& opts = {}) {
  auto doc = csv::parse(in, source);
  if (doc.header.empty()) return ExperimentalDataset({}, opts.sign_convention, opts.min_variants_per_protein);
  csv::require_header(doc, dataset_header, source);

  std::map<std::string, std::string> wild_types;
  std::vector<DatasetRecord> records;
  std::size_t dropped = 0;
  for (const auto& row : doc.rows) {
    const auto& f = row.fields;
    auto where = csv::location(source, row.line);
    if (f[0].empty()) throw Error(ErrorKind::unknown_protein, where + ": empty protein_id");
    if (!opts.known_proteins.empty() && !opts.known_proteins.count(f[0])) {
      throw Error(ErrorKind::unknown_protein, where + ": unknown protein_id '" + f[0] + "'");
    }
    auto [it, inserted] = wild_types.emplace(f[0], f[1]);
    if (!inserted && it->second != f[1]) {
      throw Error(ErrorKind::inconsistent_wild_type, where + ": protein '" + f[0] + "' listed with two wild-type sequences");
    }
    std::optional<Sequence> wt;
    try {
      wt.emplace(f[1], opts.alphabet);
    } catch (const Error& e) {
      throw Error(ErrorKind::schema, where + ": " + e.what());
    }
    std::optional<VariantSpec> variant;
    try {
      variant.emplace(parse_variant_spec(f[2], *wt));
    } catch (const Error& e) {
      auto kind = e.kind() == ErrorKind::wt_mismatch ? ErrorKind::inconsistent_wild_type : ErrorKind::schema;
      throw Error(kind, where + ": " + e.what());
    }
    double target = 0.0;
    if (!csv::parse_double(f[3], target) || !std::isfinite(target)) {
      throw Error(ErrorKind::schema, where + ": bad target '" + f[3] + "'");
    }
    bool censored = false;
    if (!parse_flag(f[4], censored)) throw Error(ErrorKind::schema, where + ": bad censored flag '" + f[4] + "'");
    if (opts.singles_only && variant->mutations().size() != 1) {
      ++dropped;
      continue;
    }
    if (opts.sign_convention == SignConvention::unfolding) target = -target;
    records.push_back(DatasetRecord{f[0], std::move(*variant), target, censored});
  }
  return ExperimentalDataset(std::move(records), opts.sign_convention, opts.min_variants_per_protein, dropped);
}

inline ExperimentalDataset load_experimental_dataset(const std::filesystem::path& path, const DatasetOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return parse_experimental_dataset(in, path.string(), opts);
}

inline ExperimentalDataset load_experimental_dataset(const std::filesystem::path& path, SignConvention sign,
                                                     std::size_t min_variants_per_protein, bool singles_only = false) {
  DatasetOptions opts;
  opts.sign_convention = sign;
  opts.min_variants_per_protein = min_variants_per_protein;
  opts.singles_only = singles_only;
  return load_experimental_dataset(path, opts);
}

inline std::string serialize_dataset(const ExperimentalDataset& data) {
  std::vector<std::string> lines;
  for (const auto& r : data.records()) {
    lines.push_back(r.protein_id + "," + r.variant.wild_type().str() + "," + r.variant.code() + "," +
                    csv::format_double(r.target) + "," + (r.censored ? "1" : "0"));
  }
  std::sort(lines.begin(), lines.end());
  std::string out = csv::join(dataset_header) + "\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace ddgkit
