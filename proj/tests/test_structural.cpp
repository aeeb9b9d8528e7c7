#include <gtest/gtest.h>

#include "support.hpp"

using namespace musagent;
using testsupport::ScoreBuilder;

namespace {

std::vector<int> oracle_peaks(const std::vector<double>& nov, double threshold) {
  double peak = *std::max_element(nov.begin(), nov.end());
  std::vector<int> out;
  if (peak <= 1e-9) return out;
  for (std::size_t i = 1; i < nov.size(); ++i) {
    bool left = nov[i] > nov[i - 1];
    bool right = i + 1 == nov.size() || nov[i] >= nov[i + 1];
    if (left && right && nov[i] > 1e-9 && nov[i] >= threshold * peak) out.push_back(static_cast<int>(i));
  }
  return out;
}

Score random_score(std::mt19937& rng, int measures) {
  ScoreBuilder b(measures);
  std::uniform_int_distribution<int> pitch(48, 84), len(1, 4), voices(1, 3);
  for (int m = 0; m < measures; ++m) {
    Beat t = 4 * m;
    while (t < 4 * (m + 1)) {
      Beat d = beat_min(Beat(len(rng)), Beat(4 * (m + 1)) - t);
      for (int v = voices(rng); v > 0; --v) b.note(pitch(rng), t, d);
      t += d;
    }
  }
  return b.build();
}

}  // namespace

TEST(Frames, WholeNoteC) {
  auto f = extract_frames(ScoreBuilder(1).note(60, 0, 4).build());
  ASSERT_EQ(f.size(), 1u);
  EXPECT_DOUBLE_EQ(f[0].pc_vector[0], 1.0);
  for (int i = 1; i < 12; ++i) EXPECT_EQ(f[0].pc_vector[i], 0.0);
  EXPECT_DOUBLE_EQ(f[0].onset_density, 0.25);
  EXPECT_DOUBLE_EQ(f[0].voice_count, 1.0);
}

TEST(Frames, HalfNotesCAndG) {
  auto f = extract_frames(ScoreBuilder(1).note(60, 0, 2).note(67, 2, 2).build());
  EXPECT_DOUBLE_EQ(f[0].pc_vector[0], 0.5);
  EXPECT_DOUBLE_EQ(f[0].pc_vector[7], 0.5);
}

TEST(Frames, FourVoiceChorale) {
  auto s = ScoreBuilder(1, 4, 4, 4)
               .note(72, 0, 2, 0).note(71, 2, 2, 0)
               .note(67, 0, 4, 1)
               .note(64, 0, 1, 2).note(62, 1, 3, 2)
               .note(48, 0, 2, 3).note(55, 2, 2, 3)
               .build();
  EXPECT_DOUBLE_EQ(extract_frames(s)[0].voice_count, 4.0);
}

TEST(SelfSimilarity, IdenticalAndOrthogonalFrames) {
  auto s = ScoreBuilder(3).chord({60, 64, 67}, 0, 4).chord({60, 64, 67}, 4, 4).chord({62, 66, 69}, 8, 4).build();
  auto m = self_similarity(extract_frames(s));
  EXPECT_DOUBLE_EQ(m[0][1], 1.0);
  // pc parts orthogonal, density and voice parts equal at weight 0.5 each:
  // (0 + 0.25 + 0.25) / (1 + 0.25 + 0.25).
  EXPECT_NEAR(m[0][2], 1.0 / 3.0, 1e-12);
}

TEST(SelfSimilarity, SymmetricOnRandomInput) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = self_similarity(extract_frames(random_score(rng, 12)));
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_DOUBLE_EQ(m[i][i], 1.0);
      for (std::size_t j = 0; j < m.size(); ++j) {
        EXPECT_DOUBLE_EQ(m[i][j], m[j][i]);
        EXPECT_GE(m[i][j], 0.0);
        EXPECT_LE(m[i][j], 1.0);
      }
    }
  }
}

TEST(SelfSimilarity, NeedsTwoFrames) {
  EXPECT_THROW(self_similarity(extract_frames(ScoreBuilder(1).note(60, 0, 4).build())), RangeError);
}

TEST(Boundaries, EightXThenEightY) {
  ScoreBuilder b(16);
  for (int m = 0; m < 16; ++m) b.chord(m < 8 ? std::vector<int>{60, 64, 67} : std::vector<int>{62, 66, 69}, 4 * m, 4);
  auto ssm = self_similarity(extract_frames(b.build()));
  auto oracle = testsupport::oracle_novelty(ssm, 4);
  auto nov = novelty_curve(ssm, 4);
  ASSERT_EQ(nov.size(), oracle.size());
  for (std::size_t i = 0; i < nov.size(); ++i) EXPECT_NEAR(nov[i], oracle[i], 1e-9) << i;
  EXPECT_EQ(detect_boundaries(ssm, 4, 0.3), std::vector<int>{8});
  EXPECT_EQ(oracle_peaks(oracle, 0.3), std::vector<int>{8});
}

TEST(Boundaries, UniformPieceHasNone) {
  ScoreBuilder b(12);
  for (int m = 0; m < 12; ++m) b.chord({60, 64, 67}, 4 * m, 4);
  auto s = b.build();
  EXPECT_TRUE(detect_boundaries(self_similarity(extract_frames(s)), 4, 0.3).empty());
  auto o = analyze_structure(s);
  ASSERT_EQ(o.segments.size(), 1u);
  EXPECT_EQ(o.form_string, "A");
}

TEST(Boundaries, NoveltyMatchesOracleOnRandomInput) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto ssm = self_similarity(extract_frames(random_score(rng, 6 + trial)));
    for (int half : {1, 2, 4}) {
      auto nov = novelty_curve(ssm, half);
      auto oracle = testsupport::oracle_novelty(ssm, half);
      for (std::size_t i = 0; i < nov.size(); ++i) EXPECT_NEAR(nov[i], oracle[i], 1e-9);
      EXPECT_EQ(detect_boundaries(ssm, half, 0.0), oracle_peaks(oracle, 0.0));
    }
  }
}

TEST(Boundaries, ThresholdMonotonicity) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto ssm = self_similarity(extract_frames(random_score(rng, 24)));
    std::vector<int> prev = detect_boundaries(ssm, 4, 0.0);
    for (double t = 0.05; t <= 1.0001; t += 0.05) {
      auto cur = detect_boundaries(ssm, 4, t);
      EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end())) << "threshold " << t;
      prev = cur;
    }
    EXPECT_LE(prev.size(), 1u);
  }
}

TEST(Boundaries, KernelWidthPrecondition) {
  auto ssm = self_similarity(extract_frames(testsupport::block_piece("AB")));
  EXPECT_THROW(detect_boundaries(ssm, 0, 0.3), RangeError);
}

TEST(Labels, GivenBoundariesXXYX) {
  auto s = testsupport::xxyx_fixture();
  auto frames = extract_frames(s);
  auto o = label_sections(frames, {4, 8, 12}, testsupport::xxyx_config());
  EXPECT_EQ(o.form_string, "AABA");
}

TEST(Labels, SegmentMeanOracleXXYX) {
  auto s = testsupport::xxyx_fixture();
  auto vecs = similarity_vectors(extract_frames(s));
  auto mean = [&](int from) {
    std::vector<double> m(vecs[0].size(), 0.0);
    for (int k = from; k < from + 4; ++k)
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += vecs[k][i] / 4;
    return m;
  };
  const double thr = testsupport::xxyx_config().letter_match;
  EXPECT_GE(cosine(mean(0), mean(4)), thr);
  EXPECT_LT(cosine(mean(0), mean(8)), thr);
  EXPECT_GE(cosine(mean(0), mean(12)), thr);
}

TEST(Labels, DetectedXXYX) {
  auto o = analyze_structure(testsupport::xxyx_fixture(), testsupport::xxyx_config());
  EXPECT_EQ(o.boundaries(), (std::vector<int>{4, 8, 12}));
  EXPECT_EQ(o.form_string, "AABA");
  EXPECT_EQ(o.segments.back().role, SectionRole::reprise);
}

TEST(Labels, SingleSegment) {
  auto frames = extract_frames(testsupport::block_piece("A"));
  auto o = label_sections(frames, {});
  ASSERT_EQ(o.segments.size(), 1u);
  EXPECT_EQ(o.segments[0].letter, "A");
  EXPECT_EQ(o.segments[0].role, SectionRole::exposition);
  EXPECT_EQ(o.segments[0].start_measure, 0);
  EXPECT_EQ(o.segments[0].end_measure, 3);
}

TEST(Labels, PopFormABABCB) {
  auto o = analyze_structure(testsupport::block_piece("ABABCB"));
  EXPECT_EQ(o.form_string, "ABABCB");
  EXPECT_EQ(o.boundaries(), (std::vector<int>{4, 8, 12, 16, 20}));
}

TEST(Labels, RolesDisabled) {
  StructuralConfig c;
  c.assign_roles = false;
  auto o = analyze_structure(testsupport::block_piece("ABA"), c);
  for (const auto& seg : o.segments) EXPECT_EQ(seg.role, SectionRole::section);
}

TEST(Labels, BoundariesMustBeSorted) {
  auto frames = extract_frames(testsupport::block_piece("AB"));
  EXPECT_THROW(label_sections(frames, {5, 3}), RangeError);
  EXPECT_THROW(label_sections(frames, {8}), RangeError);
}
