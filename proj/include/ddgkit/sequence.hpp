#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddgkit/error.hpp"

namespace ddgkit {

/// Ordered set of single-letter residue codes.
class Alphabet {
 public:
  explicit Alphabet(std::string letters) : letters_(std::move(letters)) {
    if (letters_.empty()) throw Error(ErrorKind::invalid_letter, "empty alphabet");
    std::string sorted = letters_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorKind::invalid_letter, "alphabet '" + letters_ + "' repeats a letter");
    }
  }

  /// The 20 canonical amino acids in alphabetical one-letter order.
  static const Alphabet& canonical() {
    static const Alphabet a("ACDEFGHIKLMNPQRSTVWY");
    return a;
  }

  /// Hydrophobic/polar alphabet of the lattice model.
  static const Alphabet& hp() {
    static const Alphabet a("HP");
    return a;
  }

  std::size_t size() const noexcept { return letters_.size(); }
  const std::string& letters() const noexcept { return letters_; }
  char letter(std::size_t index) const { return letters_.at(index); }

  std::optional<std::size_t> index_of(char c) const noexcept {
    auto pos = letters_.find(c);
    if (pos == std::string::npos) return std::nullopt;
    return pos;
  }
  bool contains(char c) const noexcept { return letters_.find(c) != std::string::npos; }

  std::size_t require_index(char c) const {
    auto idx = index_of(c);
    if (!idx) {
      throw Error(ErrorKind::invalid_letter,
                  std::string("letter '") + c + "' is not in alphabet '" + letters_ + "'");
    }
    return *idx;
  }

  /// Same letters irrespective of order.
  bool same_letters(const Alphabet& other) const {
    std::string a = letters_, b = other.letters_;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::string letters_;
};

class AminoAcid {
 public:
  AminoAcid(char code, const Alphabet& alphabet = Alphabet::canonical()) : code_(code) { alphabet.require_index(code); }
  char code() const noexcept { return code_; }
  friend auto operator<=>(const AminoAcid&, const AminoAcid&) = default;

 private:
  char code_;
};

/// Immutable residue string over an alphabet. Positions are 1-based in the
/// public interface.
class Sequence {
 public:
  Sequence(std::string residues, const Alphabet& alphabet = Alphabet::canonical())
      : alphabet_(alphabet), residues_(std::move(residues)) {
    if (residues_.empty()) throw Error(ErrorKind::length_mismatch, "sequence must have length >= 1");
    for (std::size_t i = 0; i < residues_.size(); ++i) {
      if (!alphabet_.contains(residues_[i])) {
        throw Error(ErrorKind::invalid_letter, std::string("residue '") + residues_[i] + "' at position " +
                                                   std::to_string(i + 1) + " is not in alphabet '" +
                                                   alphabet_.letters() + "'");
      }
    }
  }

  std::size_t size() const noexcept { return residues_.size(); }
  const std::string& str() const noexcept { return residues_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }

  char at(std::size_t position) const {
    if (position < 1 || position > residues_.size()) {
      throw Error(ErrorKind::position_out_of_range,
                  "position " + std::to_string(position) + " outside 1.." + std::to_string(residues_.size()));
    }
    return residues_[position - 1];
  }

  friend bool operator==(const Sequence& a, const Sequence& b) { return a.residues_ == b.residues_; }

 private:
  Alphabet alphabet_;
  std::string residues_;
};

struct Mutation {
  std::size_t position;  // 1-based
  char wt;
  char mt;

  Mutation(std::size_t pos, char wild, char mutant) : position(pos), wt(wild), mt(mutant) {
    if (wt == mt) {
      throw Error(ErrorKind::identity_mutation, std::string(1, wt) + std::to_string(pos) + mt + ": wt equals mt");
    }
    if (position < 1) throw Error(ErrorKind::position_out_of_range, "positions are 1-based");
  }

  std::string to_string() const { return std::string(1, wt) + std::to_string(position) + mt; }
  Mutation reversed() const { return Mutation(position, mt, wt); }

  friend auto operator<=>(const Mutation&, const Mutation&) = default;
};

inline void check_mutation(const Mutation& m, const Sequence& wild_type) {
  if (m.position > wild_type.size()) {
    throw Error(ErrorKind::position_out_of_range, m.to_string() + ": position outside 1.." +
                                                      std::to_string(wild_type.size()));
  }
  if (!wild_type.alphabet().contains(m.mt)) {
    throw Error(ErrorKind::invalid_letter, m.to_string() + ": mutant letter not in alphabet");
  }
  if (wild_type.at(m.position) != m.wt) {
    throw Error(ErrorKind::wt_mismatch, m.to_string() + ": wild type has '" +
                                            std::string(1, wild_type.at(m.position)) + "' at position " +
                                            std::to_string(m.position));
  }
}

/// Parses "<wt><index><mt>", e.g. "A23G", and validates it against `wild_type`.
inline Mutation parse_variant(std::string_view text, const Sequence& wild_type) {
  auto malformed = [&] { return Error(ErrorKind::malformed_variant, "'" + std::string(text) + "'"); };
  if (text.size() < 3) throw malformed();
  char wt = text.front();
  char mt = text.back();
  auto digits = text.substr(1, text.size() - 2);
  if (!std::isalpha(static_cast<unsigned char>(wt)) || !std::isalpha(static_cast<unsigned char>(mt))) throw malformed();
  if (digits.empty() || digits.size() > 9 ||
      !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw malformed();
  }
  std::size_t position = std::stoul(std::string(digits));
  if (position < 1 || position > wild_type.size()) {
    throw Error(ErrorKind::position_out_of_range, "'" + std::string(text) + "': position outside 1.." +
                                                      std::to_string(wild_type.size()));
  }
  Mutation m(position, wt, mt);
  check_mutation(m, wild_type);
  return m;
}

inline Sequence apply_mutations(const Sequence& wild_type, std::span<const Mutation> mutations) {
  std::set<std::size_t> seen;
  std::string out = wild_type.str();
  for (const auto& m : mutations) {
    check_mutation(m, wild_type);
    if (!seen.insert(m.position).second) {
      throw Error(ErrorKind::duplicate_position, "position " + std::to_string(m.position) + " mutated twice");
    }
    out[m.position - 1] = m.mt;
  }
  return Sequence(std::move(out), wild_type.alphabet());
}

/// 1-based positions where two equal-length residue strings differ.
inline std::vector<std::size_t> differing_positions(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::length_mismatch, "sequences of length " + std::to_string(a.size()) + " and " +
                                                std::to_string(b.size()));
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) out.push_back(i + 1);
  }
  return out;
}

/// Wild type plus a set of point substitutions with distinct positions.
class VariantSpec {
 public:
  VariantSpec(Sequence wild_type, std::vector<Mutation> mutations)
      : wild_type_(std::move(wild_type)), mutations_(std::move(mutations)) {
    std::sort(mutations_.begin(), mutations_.end(),
              [](const Mutation& a, const Mutation& b) { return a.position < b.position; });
    variant_ = apply_mutations(wild_type_, mutations_).str();
  }

  const Sequence& wild_type() const noexcept { return wild_type_; }
  const std::vector<Mutation>& mutations() const noexcept { return mutations_; }
  Sequence variant() const { return Sequence(variant_, wild_type_.alphabet()); }
  const std::string& variant_str() const noexcept { return variant_; }

  /// Semicolon-joined notation, positions ascending; "" for the wild type.
  std::string code() const {
    std::string out;
    for (const auto& m : mutations_) {
      if (!out.empty()) out += ';';
      out += m.to_string();
    }
    return out;
  }

  friend bool operator==(const VariantSpec& a, const VariantSpec& b) {
    return a.wild_type_ == b.wild_type_ && a.mutations_ == b.mutations_;
  }

 private:
  Sequence wild_type_;
  std::vector<Mutation> mutations_;
  std::string variant_;
};

/// Parses semicolon-joined variant notation ("A23G;L5V"). Empty text is the wild type.
inline VariantSpec parse_variant_spec(std::string_view text, const Sequence& wild_type) {
  std::vector<Mutation> muts;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find(';', start);
    auto token = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) muts.push_back(parse_variant(token, wild_type));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return VariantSpec(wild_type, std::move(muts));
}

}  // namespace ddgkit
