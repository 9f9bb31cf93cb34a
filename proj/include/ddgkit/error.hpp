#pragma once

#include <stdexcept>
#include <string>

namespace ddgkit {

enum class ErrorKind {
  // variant notation
  malformed_variant,
  position_out_of_range,
  wt_mismatch,
  identity_mutation,
  duplicate_position,
  invalid_letter,
  // files
  io,
  parse,
  non_finite,
  mixed_state,
  duplicate_entry,
  not_normalized,
  schema,
  unknown_protein,
  inconsistent_wild_type,
  // estimators
  missing_entry,
  length_mismatch,
  empty_input,
  state_mismatch,
  zero_probability,
  domain,
  zero_partition,
  mutation_outside_window,
  // statistics
  zero_variance,
  // harness
  config,
};

/// Category used by the CLI to choose an exit code.
enum class ErrorCategory { config, data };

inline ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::schema:
      return ErrorCategory::config;
    default:
      return ErrorCategory::data;
  }
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::malformed_variant: return "malformed_variant";
    case ErrorKind::position_out_of_range: return "position_out_of_range";
    case ErrorKind::wt_mismatch: return "wt_mismatch";
    case ErrorKind::identity_mutation: return "identity_mutation";
    case ErrorKind::duplicate_position: return "duplicate_position";
    case ErrorKind::invalid_letter: return "invalid_letter";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::mixed_state: return "mixed_state";
    case ErrorKind::duplicate_entry: return "duplicate_entry";
    case ErrorKind::not_normalized: return "not_normalized";
    case ErrorKind::schema: return "schema";
    case ErrorKind::unknown_protein: return "unknown_protein";
    case ErrorKind::inconsistent_wild_type: return "inconsistent_wild_type";
    case ErrorKind::missing_entry: return "missing_entry";
    case ErrorKind::length_mismatch: return "length_mismatch";
    case ErrorKind::empty_input: return "empty_input";
    case ErrorKind::state_mismatch: return "state_mismatch";
    case ErrorKind::zero_probability: return "zero_probability";
    case ErrorKind::domain: return "domain";
    case ErrorKind::zero_partition: return "zero_partition";
    case ErrorKind::mutation_outside_window: return "mutation_outside_window";
    case ErrorKind::zero_variance: return "zero_variance";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace ddgkit
