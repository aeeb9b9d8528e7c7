#include <gtest/gtest.h>

#include "support.hpp"

using namespace musagent;
using testsupport::ScoreBuilder;

namespace {

bool has_invariant(const std::vector<Violation>& v, const std::string& name) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.invariant == name; });
}

}  // namespace

TEST(Validate, OneNoteScoreIsClean) {
  auto s = ScoreBuilder(1).note(60, 0, 4).build();
  EXPECT_TRUE(validate(s).empty());
}

TEST(Validate, ZeroDurationNonGraceEvent) {
  auto s = ScoreBuilder(1).note(60, 0, 4).build();
  s.parts[0].events[0].duration = 0;
  auto v = validate(s);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].invariant, "duration");
  EXPECT_EQ(v[0].part, 0);
  EXPECT_EQ(v[0].event, 0);
}

TEST(Validate, GraceNoteMustHaveZeroDuration) {
  auto s = ScoreBuilder(1).note(60, 0, 4).build();
  s.parts[0].events[0].grace = true;
  EXPECT_TRUE(has_invariant(validate(s), "duration"));
  s.parts[0].events[0].duration = 0;
  EXPECT_TRUE(validate(s).empty());
}

TEST(Validate, UnsortedEvents) {
  auto s = ScoreBuilder(1).note(60, 0, 1).note(62, 1, 1).build();
  std::swap(s.parts[0].events[0], s.parts[0].events[1]);
  EXPECT_TRUE(has_invariant(validate(s), "ordering"));
}

TEST(Validate, EventPastTotalBeats) {
  auto s = ScoreBuilder(1).note(60, 0, 4).build();
  s.parts[0].events[0].duration = 5;
  EXPECT_TRUE(has_invariant(validate(s), "total-beats"));
}

TEST(Validate, MeasureLengthMustMatchMeter) {
  auto s = ScoreBuilder(2).note(60, 0, 8).build();
  s.measures[1].start_beat = 3;
  s.parts[0].events[0].measure_index = 0;
  EXPECT_TRUE(has_invariant(validate(s), "measure-length"));
  s.measures[0].irregular = true;
  EXPECT_FALSE(has_invariant(validate(s), "measure-length"));
}

TEST(Validate, PickupIsExempt) {
  auto s = ScoreBuilder(2).note(60, 0, 1).build();
  s.measures[1].start_beat = 1;
  s.total_beats = 5;
  s.metadata.pickup = true;
  EXPECT_TRUE(validate(s).empty());
}

TEST(Validate, PitchOutOfRange) {
  auto s = ScoreBuilder(1).note(60, 0, 4).build();
  s.parts[0].events[0].pitch->octave = 12;
  EXPECT_TRUE(has_invariant(validate(s), "pitch"));
}

TEST(Finalize, SortsAndAssignsIndices) {
  auto s = ScoreBuilder(2, 4, 4, 2).note(64, 5, 1, 1).note(60, 0, 1, 0).note(62, 4, 1, 1).build();
  EXPECT_TRUE(validate(s).empty());
  EXPECT_EQ(s.parts[1].events[0].midi(), 62);
  EXPECT_EQ(s.parts[1].events[0].part_index, 1);
  EXPECT_EQ(s.parts[1].events[0].measure_index, 1);
}

TEST(Pitch, MidiAndSpelling) {
  EXPECT_EQ((Pitch{'C', 0, 4}).midi(), 60);
  EXPECT_EQ((Pitch{'B', 1, 3}).midi(), 60);
  EXPECT_EQ((Pitch{'C', -1, 4}).midi(), 59);
  EXPECT_EQ(Pitch::from_midi(61, 0), (Pitch{'C', 1, 4}));
  EXPECT_EQ(Pitch::from_midi(61, -2), (Pitch{'D', -1, 4}));
  for (int m = 0; m < 128; ++m) {
    EXPECT_EQ(Pitch::from_midi(m, 3).midi(), m);
    EXPECT_EQ(Pitch::from_midi(m, -3).midi(), m);
  }
}

TEST(BeatText, ParseAndPrint) {
  EXPECT_EQ(parse_beat("3/2"), Beat(3, 2));
  EXPECT_EQ(parse_beat("4"), Beat(4));
  EXPECT_EQ(to_string(Beat(6, 4)), "3/2");
  EXPECT_THROW(parse_beat("1/0"), std::invalid_argument);
  EXPECT_THROW(parse_beat("x"), std::invalid_argument);
}

TEST(Slice, WholeRangeIsIdentity) {
  auto s = ScoreBuilder(2).note(60, 0, 2).note(64, 2, 4).note(67, 6, 2).build();
  auto t = slice(s, 0, s.total_beats);
  EXPECT_EQ(testsupport::event_multiset(t), testsupport::event_multiset(s));
  EXPECT_EQ(t.parts[0].events, s.parts[0].events);
}

TEST(Slice, ClipsDuration) {
  auto s = ScoreBuilder(1).note(60, 0, 4).build();
  auto t = slice(s, 0, 2);
  ASSERT_EQ(t.parts[0].events.size(), 1u);
  EXPECT_EQ(t.parts[0].events[0].duration, Beat(2));
  EXPECT_EQ(t.parts[0].events[0].midi(), 60);
}

TEST(Slice, MiddleMeasureKeepsAbsoluteOnsets) {
  auto s = ScoreBuilder(3).note(60, 0, 4).note(62, 4, 2).note(64, 6, 2).note(65, 8, 4).build();
  auto t = slice(s, 4, 8);
  ASSERT_EQ(t.parts[0].events.size(), 2u);
  EXPECT_EQ(t.parts[0].events[0].onset, Beat(4));
  EXPECT_EQ(t.parts[0].events[0].midi(), 62);
  EXPECT_EQ(t.parts[0].events[1].onset, Beat(6));
  EXPECT_EQ(t.parts[0].events[1].measure_index, 1);
  ASSERT_EQ(t.measures.size(), 1u);
  EXPECT_EQ(t.measures[0].index, 1);
}

TEST(Slice, RejectsEmptyWindow) {
  auto s = ScoreBuilder(1).note(60, 0, 4).build();
  EXPECT_THROW(slice(s, 2, 2), RangeError);
  EXPECT_THROW(slice(s, -1, 2), RangeError);
}

TEST(Flatten, MonophonicPartUnchanged) {
  auto s = ScoreBuilder(1).note(60, 0, 1).note(62, 1, 1).note(64, 2, 2).build();
  auto m = flatten_melody(s, 0);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0], (MelodyNote{0, 1, 60}));
  EXPECT_EQ(m[2], (MelodyNote{2, 2, 64}));
}

TEST(Flatten, ChordKeepsTop) {
  auto s = ScoreBuilder(1).chord({60, 64, 67}, 0, 4).build();
  auto m = flatten_melody(s, 0);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].midi, 67);
}

TEST(Flatten, RestOnlyIsEmptyInput) {
  auto s = ScoreBuilder(1).rest(0, 4).build();
  EXPECT_THROW(flatten_melody(s, 0), EmptyInputError);
  EXPECT_THROW(flatten_melody(s, 3), RangeError);
}

// Overlapping voices: the skyline equals the pointwise maximum on a fine grid.
TEST(Flatten, SkylineMatchesGridMaximum) {
  auto s = ScoreBuilder(2, 4, 4, 2)
               .note(60, 0, 3, 0)
               .note(72, 1, 1, 1)
               .note(65, Beat(5, 2), 3, 1)
               .note(62, 3, 3, 0)
               .note(70, 6, 1, 0)
               .note(55, 6, 2, 1)
               .build();
  auto m = flatten_melody(s, kAllParts);
  const Beat step(1, 4);
  for (Beat t = 0; t < s.total_beats; t += step) {
    int expect = -1;
    for (const auto& p : s.parts)
      for (const auto& e : p.events)
        if (e.onset <= t && t < e.end()) expect = std::max(expect, e.midi());
    int got = -1;
    for (const auto& n : m)
      if (n.onset <= t && t < n.onset + n.duration) got = n.midi;
    EXPECT_EQ(got, expect) << "at beat " << to_string(t);
  }
}
