#pragma once

// Exactly enumerable 2-D square-lattice HP model. Every quantity that the
// estimators approximate (state partition functions, occupancies, structure
// posteriors p(a|x)) is available here in closed form by summing over all
// symmetry-reduced self-avoiding walks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ddgkit/error.hpp"
#include "ddgkit/frequency_model.hpp"
#include "ddgkit/likelihood_table.hpp"
#include "ddgkit/logmath.hpp"
#include "ddgkit/sequence.hpp"

namespace ddgkit::lattice {

inline constexpr int min_chain_length = 4;
inline constexpr int max_chain_length = 12;

struct Point {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Point&, const Point&) = default;
};

/// A self-avoiding walk encoded by its relative moves: one of S (straight),
/// L (left turn) or R (right turn) for every residue after the second. The
/// first bond always points along +x.
class Conformation {
 public:
  static Conformation from_moves(const std::string& moves) {
    Conformation c;
    c.moves_ = moves;
    c.coords_ = {{0, 0}, {1, 0}};
    int dx = 1, dy = 0;
    std::set<Point> seen(c.coords_.begin(), c.coords_.end());
    for (char m : moves) {
      if (m == 'L') {
        std::tie(dx, dy) = std::pair{-dy, dx};
      } else if (m == 'R') {
        std::tie(dx, dy) = std::pair{dy, -dx};
      } else if (m != 'S') {
        throw Error(ErrorKind::parse, std::string("bad move '") + m + "' in '" + moves + "'");
      }
      Point next{c.coords_.back().x + dx, c.coords_.back().y + dy};
      if (!seen.insert(next).second) throw Error(ErrorKind::domain, "walk '" + moves + "' is not self-avoiding");
      c.coords_.push_back(next);
    }
    c.compute_contacts();
    return c;
  }

  std::size_t size() const noexcept { return coords_.size(); }
  const std::string& moves() const noexcept { return moves_; }
  const std::vector<Point>& coords() const noexcept { return coords_; }

  /// Non-bonded lattice-neighbour pairs (i, j), 0-based, j - i >= 3.
  const std::vector<std::pair<int, int>>& contacts() const noexcept { return contacts_; }
  int contact_count() const noexcept { return static_cast<int>(contacts_.size()); }

  friend bool operator==(const Conformation& a, const Conformation& b) { return a.moves_ == b.moves_; }

 private:
  void compute_contacts() {
    contacts_.clear();
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      for (std::size_t j = i + 3; j < coords_.size(); ++j) {
        int d = std::abs(coords_[i].x - coords_[j].x) + std::abs(coords_[i].y - coords_[j].y);
        if (d == 1) contacts_.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }

  std::string moves_;
  std::vector<Point> coords_;
  std::vector<std::pair<int, int>> contacts_;
};

/// All self-avoiding walks of `chain_length` sites with the first step fixed
/// along +x and the first turn (if any) to the left. Depth-first order over
/// moves S < L < R.
inline std::vector<Conformation> enumerate_conformations(int chain_length) {
  if (chain_length < min_chain_length || chain_length > max_chain_length) {
    throw Error(ErrorKind::domain, "chain length " + std::to_string(chain_length) + " outside " +
                                       std::to_string(min_chain_length) + ".." + std::to_string(max_chain_length));
  }
  std::vector<Conformation> out;
  std::string moves;
  std::vector<Point> path = {{0, 0}, {1, 0}};
  std::set<Point> occupied(path.begin(), path.end());
  const std::size_t n_moves = static_cast<std::size_t>(chain_length) - 2;

  std::function<void(int, int, bool)> extend = [&](int dx, int dy, bool turned) {
    if (moves.size() == n_moves) {
      out.push_back(Conformation::from_moves(moves));
      return;
    }
    for (char m : {'S', 'L', 'R'}) {
      if (m == 'R' && !turned) continue;
      int ndx = dx, ndy = dy;
      if (m == 'L') std::tie(ndx, ndy) = std::pair{-dy, dx};
      if (m == 'R') std::tie(ndx, ndy) = std::pair{dy, -dx};
      Point next{path.back().x + ndx, path.back().y + ndy};
      if (occupied.count(next)) continue;
      occupied.insert(next);
      path.push_back(next);
      moves.push_back(m);
      extend(ndx, ndy, turned || m != 'S');
      moves.pop_back();
      path.pop_back();
      occupied.erase(next);
    }
  };
  extend(1, 0, false);
  return out;
}

/// Symmetric contact-energy matrix over an alphabet (dimensionless).
class InteractionMatrix {
 public:
  InteractionMatrix(Alphabet alphabet, std::vector<std::vector<double>> energies)
      : alphabet_(std::move(alphabet)), energies_(std::move(energies)) {
    if (energies_.size() != alphabet_.size()) throw Error(ErrorKind::length_mismatch, "interaction matrix size");
    for (std::size_t i = 0; i < energies_.size(); ++i) {
      if (energies_[i].size() != alphabet_.size()) throw Error(ErrorKind::length_mismatch, "interaction matrix size");
      for (std::size_t j = 0; j < i; ++j) {
        if (energies_[i][j] != energies_[j][i]) throw Error(ErrorKind::domain, "interaction matrix is not symmetric");
      }
      for (double e : energies_[i]) {
        if (!std::isfinite(e)) throw Error(ErrorKind::non_finite, "interaction energy is not finite");
      }
    }
  }

  /// H-H, H-P and P-P contact energies; the default is the classic HP model.
  static InteractionMatrix hp(double hh = -1.0, double hp = 0.0, double pp = 0.0) {
    return InteractionMatrix(Alphabet::hp(), {{hh, hp}, {hp, pp}});
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  double operator()(char a, char b) const { return energies_[alphabet_.require_index(a)][alphabet_.require_index(b)]; }
  double at(std::size_t i, std::size_t j) const { return energies_[i][j]; }

 private:
  Alphabet alphabet_;
  std::vector<std::vector<double>> energies_;
};

/// Sum of contact energies over non-bonded neighbour pairs.
inline double energy(const Conformation& conformation, const Sequence& sequence, const InteractionMatrix& interaction) {
  if (sequence.size() != conformation.size()) {
    throw Error(ErrorKind::length_mismatch, "sequence length " + std::to_string(sequence.size()) +
                                                " vs chain length " + std::to_string(conformation.size()));
  }
  const auto& s = sequence.str();
  double e = 0.0;
  for (auto [i, j] : conformation.contacts()) e += interaction(s[i], s[j]);
  return e;
}

/// Soft assignment p(F | x). Depends on the conformation's contact count
/// only, unless a sequence-dependent override is installed.
struct StateClassifier {
  enum class Kind { soft, hard };

  Kind kind = Kind::soft;
  double kappa = 4.0;          // soft: logistic slope
  double midpoint = 0.0;       // soft: contact count with p(F|x) = 1/2
  double threshold = 0.0;      // hard: folded iff contacts >= threshold
  std::function<double(const Conformation&, const Sequence&)> sequence_dependent;

  static StateClassifier soft(double midpoint, double kappa = 4.0) {
    StateClassifier c;
    c.kind = Kind::soft;
    c.midpoint = midpoint;
    c.kappa = kappa;
    return c;
  }

  static StateClassifier hard(double threshold) {
    StateClassifier c;
    c.kind = Kind::hard;
    c.threshold = threshold;
    return c;
  }

  /// ln p(F|x) and ln p(U|x); either may be -inf for the hard classifier.
  std::pair<double, double> log_probs(const Conformation& x, const Sequence* seq = nullptr) const {
    if (sequence_dependent && seq) {
      double p = sequence_dependent(x, *seq);
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::domain, "classifier returned p(F|x) outside [0, 1]");
      return {std::log(p), std::log1p(-p)};
    }
    double c = x.contact_count();
    if (kind == Kind::hard) {
      return c >= threshold ? std::pair{0.0, neg_inf} : std::pair{neg_inf, 0.0};
    }
    // ln σ(z) = -log1p(exp(-z)), stable on both tails.
    double z = kappa * (c - midpoint);
    auto log_sigmoid = [](double t) { return t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t)); };
    return {log_sigmoid(z), log_sigmoid(-z)};
  }

  double p_folded(const Conformation& x, const Sequence* seq = nullptr) const {
    return std::exp(log_probs(x, seq).first);
  }
};

class LatticeSystem {
 public:
  /// Soft classifier with κ = 4 and c₀ = half the maximum contact count.
  LatticeSystem(int chain_length, double beta, InteractionMatrix interaction = InteractionMatrix::hp())
      : LatticeSystem(chain_length, beta, std::move(interaction), std::nullopt) {}

  LatticeSystem(int chain_length, double beta, InteractionMatrix interaction, std::optional<StateClassifier> classifier)
      : chain_length_(chain_length),
        beta_(beta),
        interaction_(std::move(interaction)),
        conformations_(enumerate_conformations(chain_length)) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorKind::domain, "beta must be finite and >= 0");
    for (const auto& c : conformations_) max_contacts_ = std::max(max_contacts_, c.contact_count());
    classifier_ = classifier ? std::move(*classifier) : StateClassifier::soft(0.5 * max_contacts_);
  }

  int chain_length() const noexcept { return chain_length_; }
  double beta() const noexcept { return beta_; }
  const InteractionMatrix& interaction() const noexcept { return interaction_; }
  const StateClassifier& classifier() const noexcept { return classifier_; }
  const std::vector<Conformation>& conformations() const noexcept { return conformations_; }
  std::size_t size() const noexcept { return conformations_.size(); }
  int max_contacts() const noexcept { return max_contacts_; }
  const Alphabet& alphabet() const noexcept { return interaction_.alphabet(); }

  Sequence sequence(const std::string& residues) const { return Sequence(residues, alphabet()); }

  void check_sequence(const Sequence& s) const {
    if (static_cast<int>(s.size()) != chain_length_) {
      throw Error(ErrorKind::length_mismatch, "sequence length " + std::to_string(s.size()) + " vs chain length " +
                                                  std::to_string(chain_length_));
    }
  }

  /// -β H_a(x) for every conformation, in enumeration order.
  std::vector<double> log_boltzmann_weights(const Sequence& s) const {
    check_sequence(s);
    std::vector<double> out;
    out.reserve(conformations_.size());
    for (const auto& c : conformations_) out.push_back(-beta_ * energy(c, s, interaction_));
    return out;
  }

  /// ln p(S|x, a) for every conformation.
  std::vector<double> log_state_probs(const Sequence& s, State state) const {
    std::vector<double> out;
    out.reserve(conformations_.size());
    for (const auto& c : conformations_) {
      auto [lf, lu] = classifier_.log_probs(c, &s);
      out.push_back(state == State::folded ? lf : lu);
    }
    return out;
  }

 private:
  int chain_length_;
  double beta_;
  InteractionMatrix interaction_;
  std::vector<Conformation> conformations_;
  int max_contacts_ = 0;
  StateClassifier classifier_;
};

struct PartitionFunctions {
  double log_z_folded;
  double log_z_unfolded;
  double log_z_total;  // summed directly, not from the two states

  double z_folded() const { return std::exp(log_z_folded); }
  double z_unfolded() const { return std::exp(log_z_unfolded); }
  double z_total() const { return std::exp(log_z_total); }
  double log_z(State s) const { return s == State::folded ? log_z_folded : log_z_unfolded; }
  /// p(F | a, β) = Z_F / Z.
  double p_folded() const { return std::exp(log_z_folded - log_z_total); }
  double p_state(State s) const { return std::exp(log_z(s) - log_z_total); }
};

/// Z_S = Σ_x exp(-β H_a(x)) p(S|x), in log space. An empty state gives
/// log Z_S = -inf.
inline PartitionFunctions partition_functions(const LatticeSystem& system, const Sequence& sequence) {
  auto lw = system.log_boltzmann_weights(sequence);
  auto lf = system.log_state_probs(sequence, State::folded);
  auto lu = system.log_state_probs(sequence, State::unfolded);
  std::vector<double> f(lw.size()), u(lw.size());
  for (std::size_t k = 0; k < lw.size(); ++k) {
    f[k] = lw[k] + lf[k];
    u[k] = lw[k] + lu[k];
  }
  return PartitionFunctions{logsumexp(f), logsumexp(u), logsumexp(lw)};
}

/// βΔG^{U→F} = ln Z_U - ln Z_F.
inline double exact_stability(const LatticeSystem& system, const Sequence& sequence) {
  auto z = partition_functions(system, sequence);
  if (z.log_z_folded == neg_inf || z.log_z_unfolded == neg_inf) {
    throw Error(ErrorKind::zero_partition, "a state has zero mass for " + sequence.str());
  }
  return z.log_z_unfolded - z.log_z_folded;
}

/// βΔΔG_{a→a'} = [ln Z^U_{a'} - ln Z^F_{a'}] - [ln Z^U_a - ln Z^F_a].
inline double exact_ddg(const LatticeSystem& system, const Sequence& wt, const Sequence& mt) {
  return exact_stability(system, mt) - exact_stability(system, wt);
}

/// Finite candidate set with a prior π(a) ∝ Π_i q(a_i) restricted to it.
class SequenceFamily {
 public:
  SequenceFamily(std::vector<Sequence> candidates, FrequencyModel prior, std::size_t wild_type_index = 0)
      : candidates_(std::move(candidates)), prior_(std::move(prior)), wt_index_(wild_type_index) {
    if (candidates_.empty()) throw Error(ErrorKind::empty_input, "empty sequence family");
    if (wt_index_ >= candidates_.size()) throw Error(ErrorKind::domain, "wild-type index outside the family");
    std::set<std::string> seen;
    for (const auto& c : candidates_) {
      if (c.size() != candidates_.front().size()) throw Error(ErrorKind::length_mismatch, "family members differ in length");
      if (!seen.insert(c.str()).second) throw Error(ErrorKind::duplicate_entry, "family lists " + c.str() + " twice");
    }
    std::vector<double> raw;
    for (const auto& c : candidates_) {
      double lp = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) lp += prior_.log_prob(c.str()[i], i + 1);
      raw.push_back(lp);
    }
    double lz = logsumexp(raw);
    for (double& x : raw) x -= lz;
    log_prior_ = std::move(raw);
  }

  /// Wild type first, then every single substitution in position order.
  static SequenceFamily single_mutants(const Sequence& wild_type, std::optional<FrequencyModel> prior = std::nullopt) {
    const auto& alphabet = wild_type.alphabet();
    std::vector<Sequence> c = {wild_type};
    for (std::size_t pos = 1; pos <= wild_type.size(); ++pos) {
      for (char letter : alphabet.letters()) {
        if (letter == wild_type.at(pos)) continue;
        Mutation m(pos, wild_type.at(pos), letter);
        c.push_back(apply_mutations(wild_type, std::span<const Mutation>(&m, 1)));
      }
    }
    return SequenceFamily(std::move(c), prior ? std::move(*prior) : FrequencyModel::uniform(alphabet), 0);
  }

  const std::vector<Sequence>& candidates() const noexcept { return candidates_; }
  const Sequence& wild_type() const { return candidates_[wt_index_]; }
  std::size_t wild_type_index() const noexcept { return wt_index_; }
  const FrequencyModel& prior() const noexcept { return prior_; }
  /// Normalized ln π(candidate).
  const std::vector<double>& log_prior() const noexcept { return log_prior_; }

 private:
  std::vector<Sequence> candidates_;
  FrequencyModel prior_;
  std::size_t wt_index_;
  std::vector<double> log_prior_;
};

/// Per-candidate quantities reused across conformations.
struct FamilyEnergetics {
  std::vector<std::vector<double>> log_weights;  // [candidate][conformation] = -β H
  std::vector<double> log_z;                     // [candidate]

  FamilyEnergetics(const LatticeSystem& system, const SequenceFamily& family) {
    for (const auto& c : family.candidates()) {
      log_weights.push_back(system.log_boltzmann_weights(c));
      log_z.push_back(logsumexp(log_weights.back()));
    }
  }
};

/// ln p_θ(a | x) over the candidates with p(x|a,β) = exp(-βH_a(x)) / Z_a.
inline std::vector<double> exact_posterior(const SequenceFamily& family, const FamilyEnergetics& energetics,
                                           std::size_t conformation_index) {
  std::vector<double> lp(family.candidates().size());
  for (std::size_t c = 0; c < lp.size(); ++c) {
    lp[c] = energetics.log_weights[c][conformation_index] - energetics.log_z[c] + family.log_prior()[c];
  }
  double lz = logsumexp(lp);
  for (double& x : lp) x -= lz;
  return lp;
}

inline std::vector<double> exact_posterior(const LatticeSystem& system, std::size_t conformation_index,
                                           const SequenceFamily& family) {
  if (conformation_index >= system.size()) throw Error(ErrorKind::domain, "conformation index out of range");
  return exact_posterior(family, FamilyEnergetics(system, family), conformation_index);
}

inline std::vector<double> exact_posterior(const LatticeSystem& system, const Conformation& conformation,
                                           const SequenceFamily& family) {
  const auto& all = system.conformations();
  auto it = std::find(all.begin(), all.end(), conformation);
  if (it == all.end()) throw Error(ErrorKind::domain, "conformation " + conformation.moves() + " is not in the system");
  return exact_posterior(system, static_cast<std::size_t>(it - all.begin()), family);
}

/// ln p(x | S, a, β) for every conformation.
inline std::vector<double> conditional_log_probs(const LatticeSystem& system, const Sequence& sequence, State state) {
  auto lw = system.log_boltzmann_weights(sequence);
  auto ls = system.log_state_probs(sequence, state);
  for (std::size_t k = 0; k < lw.size(); ++k) lw[k] += ls[k];
  double lz = logsumexp(lw);
  if (lz == neg_inf) throw Error(ErrorKind::zero_partition, "state has zero mass for " + sequence.str());
  for (double& x : lw) x -= lz;
  return lw;
}

/// `n` i.i.d. conformation indices from p(x | S, a, β) by exact categorical
/// sampling; reproducible for a given seed.
inline std::vector<std::size_t> sample_conditional(const LatticeSystem& system, const Sequence& sequence, State state,
                                                   std::size_t n, std::uint64_t seed) {
  auto lp = conditional_log_probs(system, sequence, state);
  if (n == 0) return {};
  std::vector<double> p(lp.size());
  for (std::size_t k = 0; k < lp.size(); ++k) p[k] = std::exp(lp[k]);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(state == State::folded ? 0x46 : 0x55)};
  std::mt19937_64 rng(seq);
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  std::vector<std::size_t> out(n);
  for (auto& k : out) k = dist(rng);
  return out;
}

struct SamplingPlan {
  bool exhaustive = true;        // every conformation once, weighted by p(x|S,a,β)
  std::size_t n_folded = 1;      // draws per state when not exhaustive
  std::size_t n_unfolded = 1;
  std::uint64_t seed = 0;
};

struct OracleTables {
  LikelihoodTable folded;
  LikelihoodTable unfolded;
  FrequencyModel marginal;  // the family prior; its ratios equal those of π
};

/// Likelihood tables of exact ln p_θ(a|x) for every candidate, over
/// conformations drawn from p(x | S, wild type, β) (or all of them, weighted).
inline OracleTables emit_oracle_tables(const LatticeSystem& system, const SequenceFamily& family,
                                       const SamplingPlan& plan, const std::string& ensemble_prefix = "lattice") {
  const auto& wt = family.wild_type();
  system.check_sequence(wt);
  FamilyEnergetics energetics(system, family);
  auto make = [&](State state, std::size_t n) {
    LikelihoodTable table(ensemble_prefix + "_" + wt.str() + "_" + state_code(state), state, system.alphabet());
    auto lp = conditional_log_probs(system, wt, state);
    auto add_member = [&](const std::string& id, std::size_t k) {
      auto post = exact_posterior(family, energetics, k);
      for (std::size_t c = 0; c < post.size(); ++c) table.add_entry(id, family.candidates()[c].str(), post[c]);
    };
    char buf[32];
    if (plan.exhaustive) {
      for (std::size_t k = 0; k < system.size(); ++k) {
        if (lp[k] == neg_inf) continue;
        std::snprintf(buf, sizeof buf, "x%06zu_", k);
        std::string id = buf + system.conformations()[k].moves();
        add_member(id, k);
        table.set_log_weight(id, lp[k]);
      }
    } else {
      auto draws = sample_conditional(system, wt, state, n, plan.seed);
      for (std::size_t d = 0; d < draws.size(); ++d) {
        std::snprintf(buf, sizeof buf, "s%06zu_", d);
        add_member(buf + system.conformations()[draws[d]].moves(), draws[d]);
      }
    }
    return table;
  };
  return OracleTables{make(State::folded, plan.n_folded), make(State::unfolded, plan.n_unfolded), family.prior()};
}

struct ProposalBias {
  double biased;       // folded-only structures treated as unconditional samples
  double exact;        // conditional proposal, exhaustive expectation = p(S | a', β)
  double p_folded_wt;  // p(F | a, β)
  double bound() const { return exact / p_folded_wt; }
};

/// Estimates p(S | a', β) with the correct conditional proposal p(x|S,a,β)
/// and with the flawed one that reuses folded structures x ~ p(x|F,a,β) as
/// if they were draws from p(x|a,β).
inline ProposalBias folded_proposal_bias(const LatticeSystem& system, const Sequence& wt, const Sequence& mt,
                                         State state) {
  auto lw_wt = system.log_boltzmann_weights(wt);
  auto lw_mt = system.log_boltzmann_weights(mt);
  double lz_wt = logsumexp(lw_wt);
  double lz_mt = logsumexp(lw_mt);
  auto lf_wt = system.log_state_probs(wt, State::folded);
  auto ls_wt = system.log_state_probs(wt, state);
  auto ls_mt = system.log_state_probs(mt, state);
  const std::size_t n = lw_wt.size();

  // ln p(x|a') - ln p(x|a); exactly zero when a' = a.
  std::vector<double> log_ratio(n);
  for (std::size_t k = 0; k < n; ++k) log_ratio[k] = (lw_mt[k] - lz_mt) - (lw_wt[k] - lz_wt);

  std::vector<double> folded_mass(n), flawed(n), state_mass(n), conditional(n);
  for (std::size_t k = 0; k < n; ++k) {
    folded_mass[k] = lw_wt[k] + lf_wt[k];
    flawed[k] = lw_wt[k] + lf_wt[k] + log_ratio[k] + ls_mt[k];
    state_mass[k] = lw_wt[k] + ls_wt[k];
    conditional[k] = ls_wt[k] == neg_inf ? neg_inf : lw_wt[k] + ls_wt[k] + log_ratio[k] + ls_mt[k] - ls_wt[k];
  }
  double log_zf_wt = logsumexp(folded_mass);
  double log_zs_wt = logsumexp(state_mass);
  if (log_zf_wt == neg_inf) throw Error(ErrorKind::zero_partition, "wild type has no folded mass");
  if (log_zs_wt == neg_inf) throw Error(ErrorKind::zero_partition, "wild type has no mass in the requested state");

  ProposalBias out{};
  out.biased = std::exp(logsumexp(flawed) - log_zf_wt);
  // p(S|a) * E_{x~p(x|S,a)}[p(x|a') p(S|x,a') / (p(x|a) p(S|x,a))]
  out.exact = std::exp((log_zs_wt - lz_wt) + (logsumexp(conditional) - log_zs_wt));
  out.p_folded_wt = std::exp(log_zf_wt - lz_wt);
  return out;
}

}  // namespace ddgkit::lattice
