#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "musagent/beat.hpp"
#include "musagent/errors.hpp"

namespace musagent {

// ---------------------------------------------------------------------------
// Pitch
// ---------------------------------------------------------------------------

inline int step_semitone(char step) {
  switch (step) {
    case 'C': return 0;
    case 'D': return 2;
    case 'E': return 4;
    case 'F': return 5;
    case 'G': return 7;
    case 'A': return 9;
    case 'B': return 11;
    default: return -1;
  }
}

struct Pitch {
  char step = 'C';  // A-G
  int alter = 0;    // -2..+2
  int octave = 4;   // scientific pitch; C4 = middle C

  int midi() const { return 12 * (octave + 1) + step_semitone(step) + alter; }
  int pitch_class() const { return ((midi() % 12) + 12) % 12; }

  // Spells a MIDI key. Flat spellings when key_fifths < 0, sharps otherwise.
  static Pitch from_midi(int midi, int key_fifths = 0) {
    static constexpr char kSharpStep[12] = {'C', 'C', 'D', 'D', 'E', 'F', 'F', 'G', 'G', 'A', 'A', 'B'};
    static constexpr int kSharpAlter[12] = {0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0};
    static constexpr char kFlatStep[12] = {'C', 'D', 'D', 'E', 'E', 'F', 'G', 'G', 'A', 'A', 'B', 'B'};
    static constexpr int kFlatAlter[12] = {0, -1, 0, -1, 0, 0, -1, 0, -1, 0, -1, 0};
    int pc = ((midi % 12) + 12) % 12;
    Pitch p;
    p.step = key_fifths < 0 ? kFlatStep[pc] : kSharpStep[pc];
    p.alter = key_fifths < 0 ? kFlatAlter[pc] : kSharpAlter[pc];
    p.octave = (midi - step_semitone(p.step) - p.alter) / 12 - 1;
    return p;
  }

  friend bool operator==(const Pitch& a, const Pitch& b) {
    return a.step == b.step && a.alter == b.alter && a.octave == b.octave;
  }
};

// ---------------------------------------------------------------------------
// Events, measures, parts
// ---------------------------------------------------------------------------

struct NoteEvent {
  Beat onset{0};
  Beat duration{0};
  std::optional<Pitch> pitch;  // nullopt = rest
  int voice = 1;
  int part_index = 0;
  int measure_index = 0;
  bool grace = false;

  bool is_rest() const { return !pitch.has_value(); }
  int midi() const { return pitch ? pitch->midi() : -1; }
  Beat end() const { return onset + duration; }

  friend bool operator==(const NoteEvent& a, const NoteEvent& b) {
    return a.onset == b.onset && a.duration == b.duration && a.pitch == b.pitch &&
           a.voice == b.voice && a.part_index == b.part_index &&
           a.measure_index == b.measure_index && a.grace == b.grace;
  }
};

struct TimeSignature {
  int numerator = 4;
  int denominator = 4;

  // Nominal measure length in quarter beats.
  Beat length() const { return Beat(4 * numerator, denominator); }

  friend bool operator==(const TimeSignature& a, const TimeSignature& b) {
    return a.numerator == b.numerator && a.denominator == b.denominator;
  }
};

struct Measure {
  int index = 0;
  Beat start_beat{0};
  TimeSignature time;
  std::optional<int> notated_key;  // sharps > 0, flats < 0
  // Partial or overfull measure that is not a pickup (e.g. split at a repeat).
  bool irregular = false;

  friend bool operator==(const Measure& a, const Measure& b) {
    return a.index == b.index && a.start_beat == b.start_beat && a.time == b.time &&
           a.notated_key == b.notated_key && a.irregular == b.irregular;
  }
};

struct Part {
  std::string id;
  std::string name;
  std::string instrument;
  std::vector<NoteEvent> events;
};

struct Metadata {
  std::string title;
  std::string composer;
  std::string source_format;
  bool pickup = false;  // measure 0 is an anacrusis
};

// Immutable once built; agents share it by const reference.
struct Score {
  Metadata metadata;
  std::vector<Part> parts;
  std::vector<Measure> measures;
  Beat total_beats{0};

  Beat measure_end(std::size_t k) const {
    return k + 1 < measures.size() ? measures[k + 1].start_beat : total_beats;
  }

  Beat measure_length(std::size_t k) const { return measure_end(k) - measures[k].start_beat; }

  // Position in the measure table of the measure containing beat b.
  std::size_t measure_position_at(const Beat& b) const {
    auto it = std::upper_bound(measures.begin(), measures.end(), b,
                               [](const Beat& x, const Measure& m) { return x < m.start_beat; });
    if (it == measures.begin()) return 0;
    return static_cast<std::size_t>(std::distance(measures.begin(), it) - 1);
  }

  int measure_index_at(const Beat& b) const {
    if (measures.empty()) return 0;
    return measures[measure_position_at(b)].index;
  }

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& p : parts) n += p.events.size();
    return n;
  }

  bool has_pitched_content() const {
    for (const auto& p : parts)
      for (const auto& e : p.events)
        if (!e.is_rest() && !e.grace) return true;
    return false;
  }
};

inline auto event_sort_key(const NoteEvent& e) {
  return std::make_tuple(e.onset, e.voice, e.midi(), e.grace ? 0 : 1, e.duration);
}

inline void sort_events(std::vector<NoteEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return event_sort_key(a) < event_sort_key(b);
  });
}

// Sorts events, stamps part and measure indices, and extends total_beats to
// cover every event. Parsers call this once before handing the score out.
inline void finalize(Score& score) {
  Beat max_end = score.total_beats;
  for (std::size_t p = 0; p < score.parts.size(); ++p) {
    auto& events = score.parts[p].events;
    sort_events(events);
    for (auto& e : events) {
      e.part_index = static_cast<int>(p);
      e.measure_index = score.measure_index_at(e.onset);
      max_end = beat_max(max_end, e.end());
    }
  }
  score.total_beats = max_end;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct Violation {
  std::string invariant;
  int part = -1;   // -1 when not event-specific
  int event = -1;
  std::string message;
};

inline std::vector<Violation> validate(const Score& score) {
  std::vector<Violation> out;
  auto add = [&](std::string inv, int part, int event, std::string msg) {
    out.push_back({std::move(inv), part, event, std::move(msg)});
  };

  for (std::size_t k = 0; k < score.measures.size(); ++k) {
    const auto& m = score.measures[k];
    if (k > 0) {
      const auto& prev = score.measures[k - 1];
      if (m.index != prev.index + 1)
        add("measure-index", -1, -1, "measure " + std::to_string(k) + " index not contiguous");
      if (!(m.start_beat > prev.start_beat)) {
        add("measure-order", -1, -1, "measure " + std::to_string(m.index) + " does not start after its predecessor");
      } else {
        bool exempt = prev.irregular || (k == 1 && prev.index == 0 && score.metadata.pickup);
        if (!exempt && m.start_beat - prev.start_beat != prev.time.length())
          add("measure-length", -1, -1,
              "measure " + std::to_string(prev.index) + " spans " + to_string(m.start_beat - prev.start_beat) +
                  " beats, time signature implies " + to_string(prev.time.length()));
      }
    }
    if (m.time.numerator <= 0 || m.time.denominator <= 0)
      add("time-signature", -1, -1, "measure " + std::to_string(m.index) + " has a nonpositive time signature");
    if (m.notated_key && (*m.notated_key < -7 || *m.notated_key > 7))
      add("key-signature", -1, -1, "measure " + std::to_string(m.index) + " key signature out of range");
  }
  if (!score.measures.empty() && score.total_beats < score.measures.back().start_beat)
    add("total-beats", -1, -1, "total_beats precedes the last measure start");

  for (std::size_t p = 0; p < score.parts.size(); ++p) {
    const auto& events = score.parts[p].events;
    const int pi = static_cast<int>(p);
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      const int ei = static_cast<int>(i);
      if (e.part_index != pi) add("part-index", pi, ei, "event part_index disagrees with its part");
      if (e.onset < 0) add("onset", pi, ei, "negative onset");
      if (e.grace) {
        if (e.duration != 0) add("duration", pi, ei, "grace note with nonzero duration");
      } else if (!(e.duration > 0)) {
        add("duration", pi, ei, "non-grace event with duration " + to_string(e.duration));
      }
      if (e.pitch) {
        if (step_semitone(e.pitch->step) < 0) add("pitch", pi, ei, "invalid step");
        if (e.pitch->alter < -2 || e.pitch->alter > 2) add("pitch", pi, ei, "alter out of range");
        int midi = e.pitch->midi();
        if (midi < 0 || midi > 127) add("pitch", pi, ei, "midi " + std::to_string(midi) + " out of range");
      }
      if (i > 0) {
        const auto& prev = events[i - 1];
        if (std::make_tuple(e.onset, e.voice, e.midi()) < std::make_tuple(prev.onset, prev.voice, prev.midi()))
          add("ordering", pi, ei, "events not sorted by (onset, voice, midi)");
      }
      if (!score.measures.empty() && e.measure_index != score.measure_index_at(e.onset))
        add("measure-index", pi, ei, "event measure_index inconsistent with measure table");
      if (e.end() > score.total_beats) add("total-beats", pi, ei, "event ends after total_beats");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// slice
// ---------------------------------------------------------------------------

// Events overlapping [from, to), clipped to the window. Beat positions and
// measure indices stay absolute.
inline Score slice(const Score& score, const Beat& from, const Beat& to) {
  if (from < 0 || !(from < to)) throw RangeError("slice requires 0 <= from < to");
  Score out;
  out.metadata = score.metadata;
  out.total_beats = beat_min(to, score.total_beats);
  if (out.total_beats < from) out.total_beats = from;
  for (std::size_t k = 0; k < score.measures.size(); ++k) {
    if (score.measures[k].start_beat < to && score.measure_end(k) > from) out.measures.push_back(score.measures[k]);
  }
  if (!out.measures.empty() && out.measures.front().index != 0) out.metadata.pickup = false;
  for (const auto& part : score.parts) {
    Part np{part.id, part.name, part.instrument, {}};
    for (const auto& e : part.events) {
      if (e.grace) {
        if (e.onset >= from && e.onset < to) np.events.push_back(e);
        continue;
      }
      if (e.onset < to && e.end() > from) {
        NoteEvent c = e;
        c.onset = beat_max(e.onset, from);
        c.duration = beat_min(e.end(), to) - c.onset;
        c.measure_index = out.measures.empty() ? 0 : out.measure_index_at(c.onset);
        np.events.push_back(c);
      }
    }
    out.parts.push_back(std::move(np));
  }
  return out;
}

// ---------------------------------------------------------------------------
// flatten_melody
// ---------------------------------------------------------------------------

struct MelodyNote {
  Beat onset{0};
  Beat duration{0};
  int midi = 0;

  friend bool operator==(const MelodyNote& a, const MelodyNote& b) {
    return a.onset == b.onset && a.duration == b.duration && a.midi == b.midi;
  }
};

inline constexpr int kAllParts = -1;

// Skyline reduction: the highest sounding pitch at every instant. Among
// sounding notes of equal pitch the earliest-onset one continues. Rests and
// grace notes are dropped. part_index == kAllParts uses the full texture.
inline std::vector<MelodyNote> flatten_melody(const Score& score, int part_index) {
  if (part_index != kAllParts && (part_index < 0 || part_index >= static_cast<int>(score.parts.size())))
    throw RangeError("part " + std::to_string(part_index) + " does not exist");

  std::vector<const NoteEvent*> notes;
  for (std::size_t p = 0; p < score.parts.size(); ++p) {
    if (part_index != kAllParts && static_cast<int>(p) != part_index) continue;
    for (const auto& e : score.parts[p].events)
      if (!e.is_rest() && !e.grace && e.duration > 0) notes.push_back(&e);
  }
  if (notes.empty()) throw EmptyInputError("empty melody: no pitched events");

  std::set<Beat> cuts;
  for (const auto* e : notes) {
    cuts.insert(e->onset);
    cuts.insert(e->end());
  }
  std::vector<Beat> grid(cuts.begin(), cuts.end());
  std::sort(notes.begin(), notes.end(), [](const NoteEvent* a, const NoteEvent* b) { return a->onset < b->onset; });

  std::vector<MelodyNote> out;
  const NoteEvent* current = nullptr;
  std::size_t next = 0;
  std::vector<const NoteEvent*> active;
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    const Beat& t0 = grid[g];
    const Beat& t1 = grid[g + 1];
    active.erase(std::remove_if(active.begin(), active.end(), [&](const NoteEvent* e) { return e->end() <= t0; }),
                 active.end());
    while (next < notes.size() && notes[next]->onset <= t0) {
      if (notes[next]->end() > t0) active.push_back(notes[next]);
      ++next;
    }
    const NoteEvent* top = nullptr;
    for (const auto* e : active) {
      if (!top || e->midi() > top->midi() || (e->midi() == top->midi() && e->onset < top->onset)) top = e;
    }
    if (!top) {
      current = nullptr;
      continue;
    }
    if (top == current && !out.empty() && out.back().onset + out.back().duration == t0) {
      out.back().duration += t1 - t0;
    } else {
      out.push_back({t0, t1 - t0, top->midi()});
    }
    current = top;
  }
  return out;
}

}  // namespace musagent
