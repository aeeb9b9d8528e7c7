#include <gtest/gtest.h>

#include "support.hpp"

using namespace musagent;
using testsupport::melody_of;

namespace {

FormOutline outline_of(const std::string& letters, const std::vector<int>& lengths) {
  FormOutline o;
  int start = 0;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    o.segments.push_back({start, start + lengths[i] - 1, std::string(1, letters[i]), SectionRole::section, 1});
    start += lengths[i];
  }
  o.form_string = letters;
  return o;
}

std::vector<Beat> onsets_from_iois(const std::vector<Beat>& iois) {
  std::vector<Beat> out{0};
  for (const auto& d : iois) out.push_back(out.back() + d);
  return out;
}

}  // namespace

TEST(Dtw, ClosedForms) {
  EXPECT_DOUBLE_EQ(dtw_interval_distance({2, 2}, {2, 3}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(testsupport::oracle_dtw({2, 2}, {2, 3}), 1.0 / 3.0);
  auto r = dtw({2, 2}, {2, 3});
  EXPECT_DOUBLE_EQ(r.cost, 1.0);
  EXPECT_EQ(r.path_length, 3);
}

TEST(Dtw, IdentityAndTransposition) {
  auto m = melody_of({60, 62, 64, 65, 67, 64, 60});
  EXPECT_DOUBLE_EQ(dtw_melodic_distance(m, m), 0.0);
  auto t = melody_of({67, 69, 71, 72, 74, 71, 67});
  EXPECT_DOUBLE_EQ(dtw_melodic_distance(m, t), 0.0);
  EXPECT_EQ(interval_series(m), (std::vector<int>{2, 2, 1, 2, -3, -4}));
}

TEST(Dtw, ShortMelodyIsUndefined) {
  EXPECT_THROW(dtw_melodic_distance(melody_of({60}), melody_of({60, 62})), UndefinedMetricError);
  EXPECT_THROW(dtw({}, {1}), UndefinedMetricError);
}

TEST(Dtw, MatchesExhaustiveAlignments) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> len(1, 6), iv(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(len(rng)), b(len(rng));
    for (int& x : a) x = iv(rng);
    for (int& x : b) x = iv(rng);
    EXPECT_NEAR(dtw_interval_distance(a, b), testsupport::oracle_dtw(a, b), 1e-12);
    EXPECT_NEAR(dtw_interval_distance(a, b), dtw_interval_distance(b, a), 1e-12);
  }
}

TEST(Entropy, ClosedForms) {
  EXPECT_DOUBLE_EQ(rhythmic_entropy(onsets_from_iois(std::vector<Beat>(8, Beat(1)))), 0.0);
  std::vector<Beat> four{Beat(1, 4), Beat(1, 2), Beat(1), Beat(2)};
  EXPECT_DOUBLE_EQ(rhythmic_entropy(onsets_from_iois(four)), 2.0);

  std::vector<Beat> iois;
  for (int i = 0; i < 8; ++i) iois.push_back(Beat(1, 4));
  for (int i = 0; i < 4; ++i) iois.push_back(Beat(1, 2));
  for (int i = 0; i < 2; ++i) iois.push_back(Beat(1));
  for (int i = 0; i < 2; ++i) iois.push_back(Beat(3, 2));
  EXPECT_DOUBLE_EQ(rhythmic_entropy(onsets_from_iois(iois)), 1.75);
  EXPECT_DOUBLE_EQ(testsupport::oracle_entropy_bits({8, 4, 2, 2}), 1.75);
}

TEST(Entropy, HistogramMatchesOracle) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> step(1, 12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Beat> iois;
    for (int i = 0; i < 30; ++i) iois.push_back(Beat(step(rng), 4));
    auto h = ioi_histogram(onsets_from_iois(iois));
    std::map<Beat, int> counts;
    for (const auto& d : iois) ++counts[d];
    EXPECT_EQ(h, counts);
    std::vector<int> c;
    for (const auto& [k, v] : counts) c.push_back(v);
    EXPECT_NEAR(rhythmic_entropy(onsets_from_iois(iois)), testsupport::oracle_entropy_bits(c), 1e-12);
  }
}

TEST(Entropy, GridAndCap) {
  // 0.3 rounds to the sixteenth grid (1/4); 20 caps at 8.
  std::vector<Beat> onsets{0, Beat(3, 10), Beat(3, 10) + 20};
  auto h = ioi_histogram(onsets);
  EXPECT_EQ(h.size(), 2u);
  EXPECT_EQ(h.count(Beat(1, 4)), 1u);
  EXPECT_EQ(h.count(Beat(8)), 1u);
}

TEST(Entropy, TooFewOnsets) {
  EXPECT_THROW(rhythmic_entropy(std::vector<Beat>{0}), UndefinedMetricError);
}

TEST(FormDiversity, ClosedForms) {
  EXPECT_DOUBLE_EQ(shannon_form_diversity(outline_of("A", {8})), 0.0);
  EXPECT_NEAR(shannon_form_diversity(outline_of("AB", {4, 4})), std::log(2.0), 1e-12);
  const double expect = -(2.0 / 6 * std::log(2.0 / 6) + 3.0 / 6 * std::log(3.0 / 6) + 1.0 / 6 * std::log(1.0 / 6));
  EXPECT_NEAR(shannon_form_diversity(outline_of("ABABCB", {4, 4, 4, 4, 4, 4})), expect, 1e-12);
  EXPECT_NEAR(shannon_form_diversity(outline_of("ABABCB", {4, 4, 4, 4, 4, 4})), 1.0114, 1e-4);
}

TEST(FormDiversity, WeightedByLength) {
  // A covers 12 measures, B covers 4.
  const double expect = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  EXPECT_NEAR(shannon_form_diversity(outline_of("AB", {12, 4})), expect, 1e-12);
  EXPECT_THROW(shannon_form_diversity(FormOutline{}), EmptyInputError);
}

TEST(Motifs, ConstantPitch) {
  std::vector<int> flat(20, 60);
  auto r = motif_complexity(melody_of(flat));
  EXPECT_EQ(r.count, 1);
  ASSERT_EQ(r.motifs.size(), 1u);
  EXPECT_EQ(r.motifs[0], std::vector<int>(6, 0));
  EXPECT_EQ(testsupport::oracle_motifs(std::vector<int>(19, 0), 3, 6, 3), 1);
}

TEST(Motifs, NoRepetition) {
  std::vector<int> iv{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  EXPECT_EQ(motif_complexity(iv).count, 0);
}

TEST(Motifs, ThreeStatementsWithConnectives) {
  // Motif intervals +2 +2 -1 +3, joined by distinct connective leaps.
  std::vector<int> iv{2, 2, -1, 3, -7, 2, 2, -1, 3, 9, 2, 2, -1, 3};
  auto r = motif_complexity(iv);
  EXPECT_EQ(r.count, 1);
  ASSERT_EQ(r.motifs.size(), 1u);
  EXPECT_EQ(r.motifs[0], (std::vector<int>{2, 2, -1, 3}));
  EXPECT_EQ(testsupport::oracle_motifs(iv, 3, 6, 3), 1);
}

TEST(Motifs, MatchesOracleOnRandomSeries) {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> iv(-2, 2), len(4, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> series(len(rng));
    for (int& x : series) x = iv(rng);
    EXPECT_EQ(motif_complexity(series).count, testsupport::oracle_motifs(series, 3, 6, 3)) << "trial " << trial;
  }
}

// Adding repetitions of a phrase never lowers the count of recurring motifs
// below the count found once the phrase recurs at the occurrence threshold.
TEST(Motifs, MonotoneUnderExtraStatements) {
  std::vector<int> phrase{3, -1, -1, 4, -2};
  std::vector<int> series;
  int prev = -1;
  for (int k = 1; k <= 6; ++k) {
    series.insert(series.end(), phrase.begin(), phrase.end());
    series.push_back(10 + k);
    int c = motif_complexity(series).count;
    if (k >= 3) {
      EXPECT_GE(c, prev);
    }
    prev = c;
  }
  EXPECT_GE(prev, 1);
}

TEST(Motifs, ShortMelodyNote) {
  auto r = motif_complexity(melody_of({60, 62}));
  EXPECT_EQ(r.count, 0);
  EXPECT_FALSE(r.note.empty());
}
