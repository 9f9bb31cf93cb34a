#include <cmath>
#include <random>

#include "ddgkit/unfolded.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

using namespace ddgkit;
using testutil::TempDir;

namespace {

std::map<char, double> equal_counts(double c) {
  std::map<char, double> m;
  for (char x : Alphabet::canonical().letters()) m[x] = c;
  return m;
}

}  // namespace

TEST(IdpModel, EqualCountsGiveUniform) {
  auto m = idp_model_from_counts(equal_counts(17), 0.5);
  for (char c : Alphabet::canonical().letters()) EXPECT_NEAR(m.model.log_prob(c), std::log(1.0 / 20), 1e-15);
}

TEST(IdpModel, TwoLetterNormalization) {
  Alphabet ag("AG");
  auto m = idp_model_from_counts({{'A', 3}, {'G', 1}}, 0.0, ag);
  EXPECT_NEAR(std::exp(m.model.log_prob('A')), 0.75, 1e-15);
  EXPECT_NEAR(std::exp(m.model.log_prob('G')), 0.25, 1e-15);
}

TEST(IdpModel, ZeroCountsWithPseudoCountAreUniform) {
  auto m = idp_model_from_counts(equal_counts(0), 0.5);
  for (char c : Alphabet::canonical().letters()) EXPECT_NEAR(m.model.log_prob(c), std::log(1.0 / 20), 1e-15);
  EXPECT_DDG_ERROR(idp_model_from_counts(equal_counts(0), 0.0), zero_probability);
}

TEST(IdpModel, SmoothingFormula) {
  auto counts = equal_counts(0);
  counts['A'] = 40;
  counts['L'] = 10;
  auto m = idp_model_from_counts(counts, 0.5);
  EXPECT_NEAR(m.model.log_prob('A'), std::log(40.5 / (50 + 20 * 0.5)), 1e-15);
  EXPECT_NEAR(m.model.log_prob('W'), std::log(0.5 / (50 + 20 * 0.5)), 1e-15);
  EXPECT_NEAR(logsumexp(m.model.log_probs()[0]), 0.0, 1e-9);
}

TEST(IdpModel, CountsFileNeedsEveryLetter) {
  TempDir dir;
  std::string text = "amino_acid,count\n";
  for (char c : Alphabet::canonical().letters()) text += std::string(1, c) + ",5\n";
  auto m = load_idp_counts(testutil::write(dir / "ok.csv", text));
  EXPECT_NE(m.provenance.find("ok.csv"), std::string::npos);
  EXPECT_DDG_ERROR(load_idp_counts(testutil::write(dir / "short.csv", "amino_acid,count\nA,1\n")), schema);
  EXPECT_DDG_ERROR(load_idp_counts(testutil::write(dir / "neg.csv", "amino_acid,count\nA,-1\n")), parse);
  EXPECT_DDG_ERROR(load_idp_counts(testutil::write(dir / "dup.csv", text + "A,3\n")), duplicate_entry);
}

TEST(IdpModel, ShippedSyntheticCountsLoad) {
  auto m = load_idp_counts(fs::path(DDGKIT_FIXTURES) / ".." / ".." / "data" / "idp_counts_synthetic.csv");
  EXPECT_NEAR(logsumexp(m.model.log_probs()[0]), 0.0, 1e-9);
}

TEST(UnfoldedLogRatioIdp, Examples) {
  auto uniform = idp_model_from_counts(equal_counts(1), 0.0);
  std::vector<Mutation> ms = {Mutation(3, 'A', 'G'), Mutation(7, 'W', 'K')};
  EXPECT_EQ(unfolded_log_ratio_idp(uniform, ms), 0.0);
  EXPECT_EQ(unfolded_log_ratio_idp(uniform, std::vector<Mutation>{}), 0.0);

  std::vector<double> p(20, (1.0 - 0.08 - 0.06) / 18);
  const auto& a = Alphabet::canonical();
  p[*a.index_of('A')] = 0.08;
  p[*a.index_of('G')] = 0.06;
  IdpFrequencyModel idp{FrequencyModel::from_probabilities(a, p), "hand"};
  std::vector<Mutation> ag = {Mutation(1, 'A', 'G')};
  EXPECT_NEAR(unfolded_log_ratio_idp(idp, ag), std::log(0.75), 1e-15);
  std::vector<Mutation> ga = {Mutation(1, 'G', 'A')};
  EXPECT_EQ(unfolded_log_ratio_idp(idp, ga), -unfolded_log_ratio_idp(idp, ag));
  EXPECT_EQ(unfolded_log_ratio_idp(idp, Sequence("ACD"), Sequence("ACD")), 0.0);
}

TEST(FragmentSpec, WindowClampsAtTermini) {
  FragmentSpec mid{5, 1};
  auto w = mid.window(10);
  EXPECT_EQ(w.first, 4u);
  EXPECT_EQ(w.last, 6u);
  EXPECT_FALSE(w.clamped);
  auto left = FragmentSpec{1, 2}.window(10);
  EXPECT_EQ(left.first, 1u);
  EXPECT_EQ(left.last, 3u);
  EXPECT_TRUE(left.clamped);
  auto right = FragmentSpec{10, 1}.window(10);
  EXPECT_EQ(right.first, 9u);
  EXPECT_EQ(right.last, 10u);
  EXPECT_TRUE(right.clamped);
  EXPECT_EQ(((FragmentSpec{4, 0})).extract("ABCDEFG"), "D");
  EXPECT_EQ(((FragmentSpec{4, 1})).extract("ABCDEFG"), "CDE");
  EXPECT_DDG_ERROR(((FragmentSpec{11, 1})).window(10), position_out_of_range);
}

TEST(UnfoldedLogRatioFragment, Examples) {
  Sequence wt("MKTAYIAKQR"), mt("MKTGYIAKQR");
  LikelihoodTable t("frag", State::unfolded);
  t.add_entry(fragment_structure_id("p1", 4), "TAY", -4.0);
  t.add_entry(fragment_structure_id("p1", 4), "TGY", -5.0);
  FragmentSpec spec{4, 1};
  EXPECT_EQ(unfolded_log_ratio_fragment(t, "p1", spec, wt, wt), 0.0);
  EXPECT_EQ(unfolded_log_ratio_fragment(t, "p1", spec, wt, mt), -1.0);
  EXPECT_DDG_ERROR(unfolded_log_ratio_fragment(t, "p2", spec, wt, mt), missing_entry);
  EXPECT_DDG_ERROR(unfolded_log_ratio_fragment(t, "p1", ((FragmentSpec{8, 1})), wt, mt), mutation_outside_window);
  LikelihoodTable folded("frag", State::folded);
  EXPECT_DDG_ERROR(unfolded_log_ratio_fragment(folded, "p1", spec, wt, mt), state_mismatch);
}

TEST(UnfoldedLogRatioFragment, FlankZeroIsSingleResidue) {
  Sequence wt("MKTAYIAKQR"), mt("MKTGYIAKQR");
  LikelihoodTable t("frag", State::unfolded);
  t.add_entry("p1_frag_4", "A", -2.0);
  t.add_entry("p1_frag_4", "G", -2.5);
  t.add_entry("p1_frag_4", "TAY", -4.0);
  t.add_entry("p1_frag_4", "TGY", -5.0);
  EXPECT_EQ(FragmentSpec({4, 0}).window(10).length(), 1u);
  EXPECT_EQ(FragmentSpec({4, 1}).window(10).length(), 3u);
  EXPECT_EQ(unfolded_log_ratio_fragment(t, "p1", ((FragmentSpec{4, 0})), wt, mt), -0.5);
  EXPECT_EQ(unfolded_log_ratio_fragment(t, "p1", ((FragmentSpec{4, 1})), wt, mt), -1.0);
}

TEST(UnfoldedLogRatioFragment, PositionIndependentRowsReduceToMutatedSite) {
  std::mt19937_64 rng(2);
  const auto& a = Alphabet::canonical();
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> row(a.size());
  double z = 0.0;
  for (auto& x : row) z += (x = u(rng));
  for (auto& x : row) x = std::log(x / z);
  LikelihoodTable t("frag", State::unfolded);
  t.set_per_position("p_frag_5", LikelihoodTable::PositionMatrix(5, row));
  Sequence wt("MKTAYIAKQR");
  FragmentSpec spec{5, 2};
  for (char c : a.letters()) {
    if (c == wt.at(5)) continue;
    Mutation m(5, wt.at(5), c);
    auto mt = apply_mutations(wt, std::span<const Mutation>(&m, 1));
    double expected = row[*a.index_of(c)] - row[*a.index_of(wt.at(5))];
    EXPECT_EQ(unfolded_log_ratio_fragment(t, "p", spec, wt, mt, EvalMode::mutated_sites_only), expected);
    EXPECT_NEAR(unfolded_log_ratio_fragment(t, "p", spec, wt, mt, EvalMode::whole_sequence), expected, 1e-12);
  }
}

TEST(UnfoldedLogRatioMc, Examples) {
  LikelihoodTable t("mc", State::unfolded);
  t.add_entry("s1", "TAY", -4.0);
  t.add_entry("s1", "TGY", -4.0 + std::log(2.0));
  EXPECT_NEAR(unfolded_log_ratio_mc(t, "TAY", "TGY").log_mean_ratio, std::log(2.0), 1e-15);
  EXPECT_EQ(unfolded_log_ratio_mc(t, "TAY", "TAY").log_mean_ratio, 0.0);
  t.add_entry("s2", "TAY", -6.0);
  t.add_entry("s2", "TGY", -6.0 + std::log(4.0));
  EXPECT_NEAR(unfolded_log_ratio_mc(t, "TAY", "TGY").log_mean_ratio, 1.0986122886681098, 1e-15);
  LikelihoodTable f("mc", State::folded);
  f.add_entry("s1", "TAY", -1.0);
  EXPECT_DDG_ERROR(unfolded_log_ratio_mc(f, "TAY", "TGY"), state_mismatch);
}
