#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "musagent/errors.hpp"
#include "musagent/harmonic.hpp"
#include "musagent/report.hpp"
#include "musagent/score.hpp"
#include "musagent/xml.hpp"

namespace musagent {

namespace writer_detail {

// One event or event fragment placed inside a measure.
struct Piece {
  Beat onset{0};  // relative to measure start
  Beat duration{0};
  std::optional<Pitch> pitch;
  int voice = 1;
  bool grace = false;
  bool tie_start = false;
  bool tie_stop = false;
};

// Sequential stream of pieces within one voice; simultaneous pieces of equal
// duration form chords.
struct Lane {
  int voice = 1;
  Beat cursor{0};
  std::vector<std::vector<Piece>> groups;
};

struct Annotation {
  enum Kind { section, words, harmony } kind = words;
  Beat offset{0};
  std::string text;
  std::string detail;  // role name for sections, unclosed harmony element for chords
};

inline std::int64_t lcm_of(std::int64_t a, std::int64_t b) { return std::lcm(a, b); }

inline std::string note_type(const Beat& d) {
  static const std::pair<Beat, const char*> kTypes[] = {
      {Beat(16), "long"},  {Beat(8), "breve"},   {Beat(4), "whole"},    {Beat(2), "half"},
      {Beat(1), "quarter"}, {Beat(1, 2), "eighth"}, {Beat(1, 4), "16th"}, {Beat(1, 8), "32nd"},
      {Beat(1, 16), "64th"}};
  for (const auto& [v, name] : kTypes) {
    if (d == v) return std::string("<type>") + name + "</type>";
    if (d == v * Beat(3, 2)) return std::string("<type>") + name + "</type><dot/>";
  }
  return {};
}

inline std::string harmony_kind(Quality q) {
  switch (q) {
    case Quality::maj: return "major";
    case Quality::min: return "minor";
    case Quality::dim: return "diminished";
    case Quality::aug: return "augmented";
    case Quality::dom7: return "dominant";
    case Quality::maj7: return "major-seventh";
    case Quality::min7: return "minor-seventh";
    case Quality::halfdim7: return "half-diminished";
    case Quality::dim7: return "diminished-seventh";
  }
  return "none";
}

inline std::string words_direction(const std::string& text, std::int64_t offset) {
  std::string out = "<direction placement=\"above\"><direction-type><words>" + xml::escape(text) +
                    "</words></direction-type>";
  if (offset) out += "<offset>" + std::to_string(offset) + "</offset>";
  return out + "</direction>";
}

}  // namespace writer_detail

// Serializes the score as partwise MusicXML with the report's findings
// attached to the first part as directions and harmony elements.
inline std::string write_annotated_musicxml(const Score& score, const AnalysisReport& report) {
  using namespace writer_detail;
  if (score.measures.empty()) throw EmptyInputError("score has no measures");
  const int last_measure = score.measures.back().index;
  const int first_measure = score.measures.front().index;

  auto position_of = [&](int measure_index) -> std::size_t {
    if (measure_index < first_measure || measure_index > last_measure)
      throw ConsistencyError("report refers to measure " + std::to_string(measure_index) +
                             " outside the score's measures " + std::to_string(first_measure) + "-" +
                             std::to_string(last_measure));
    return static_cast<std::size_t>(measure_index - first_measure);
  };
  auto check_beat = [&](const Beat& b, const char* what) {
    if (b < 0 || b > score.total_beats)
      throw ConsistencyError(std::string(what) + " at beat " + to_string(b) + " lies beyond the score's " +
                             to_string(score.total_beats) + " beats");
  };
  if (report.source.measures > 0 && report.source.measures != static_cast<int>(score.measures.size()))
    throw ConsistencyError("report describes " + std::to_string(report.source.measures) + " measures, score has " +
                           std::to_string(score.measures.size()));
  if (report.source.total_beats > 0 && report.source.total_beats != score.total_beats)
    throw ConsistencyError("report total beats " + to_string(report.source.total_beats) + " differ from score's " +
                           to_string(score.total_beats));

  // Split events at barlines.
  const std::size_t nm = score.measures.size();
  std::vector<std::vector<std::vector<Piece>>> pieces(score.parts.size(), std::vector<std::vector<Piece>>(nm));
  std::int64_t divisions = 1;
  auto absorb = [&](const Beat& b) { divisions = lcm_of(divisions, b.denominator()); };
  for (std::size_t k = 0; k < nm; ++k) {
    absorb(score.measures[k].start_beat);
    absorb(score.measure_length(k));
  }
  for (std::size_t p = 0; p < score.parts.size(); ++p) {
    for (const auto& e : score.parts[p].events) {
      std::size_t k = score.measure_position_at(e.onset);
      if (e.grace) {
        Piece pc{e.onset - score.measures[k].start_beat, 0, e.pitch, e.voice, true, false, false};
        absorb(pc.onset);
        pieces[p][k].push_back(pc);
        continue;
      }
      Beat t = e.onset;
      bool first = true;
      while (t < e.end()) {
        Beat end = k + 1 < nm ? beat_min(e.end(), score.measure_end(k)) : e.end();
        const bool tied = e.pitch.has_value();
        Piece pc{t - score.measures[k].start_beat, end - t, e.pitch, e.voice, false, tied && end < e.end(),
                 tied && !first};
        absorb(pc.onset);
        absorb(pc.duration);
        pieces[p][k].push_back(pc);
        first = false;
        t = end;
        ++k;
      }
    }
  }

  // Annotations, keyed by measure position.
  std::vector<std::vector<Annotation>> notes_at(nm);
  auto annotate = [&](const Beat& beat, Annotation a) {
    std::size_t k = score.measure_position_at(beat);
    a.offset = beat - score.measures[k].start_beat;
    absorb(a.offset);
    notes_at[k].push_back(std::move(a));
  };
  if (report.outline) {
    for (const auto& s : report.outline->segments) {
      std::size_t k = position_of(s.start_measure);
      position_of(s.end_measure);
      notes_at[k].push_back({Annotation::section, 0, s.letter, role_name(s.role)});
    }
  }
  if (report.harmony) {
    const auto& h = *report.harmony;
    notes_at[0].push_back({Annotation::words, 0, "Key: " + key_name(h.global_key.key), {}});
    for (const auto& m : h.modulations) {
      check_beat(m.beat, "modulation");
      position_of(m.measure);
      annotate(m.beat, {Annotation::words, 0, "Modulation: " + key_name(m.from) + " -> " + key_name(m.to), {}});
    }
    for (const auto& n : h.numerals) {
      check_beat(n.from, "numeral");
      check_beat(n.to, "numeral");
    }
    for (std::size_t i = 0; i < h.chords.size() && i < h.numerals.size(); ++i) {
      const auto& c = h.chords[i];
      const auto& n = h.numerals[i];
      Pitch root = Pitch::from_midi(60 + c.root, n.key.fifths());
      std::string x = "<harmony><root><root-step>" + std::string(1, root.step) + "</root-step>";
      if (root.alter) x += "<root-alter>" + std::to_string(root.alter) + "</root-alter>";
      x += "</root><kind text=\"" + xml::escape(n.numeral) + "\">" + harmony_kind(c.quality) + "</kind>";
      annotate(n.from, {Annotation::harmony, 0, n.numeral, x});
    }
  }

  auto units = [&](const Beat& b) -> std::int64_t {
    Beat u = b * divisions;
    return u.numerator() / u.denominator();
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<!DOCTYPE score-partwise PUBLIC \"-//Recordare//DTD MusicXML 3.1 Partwise//EN\" "
         "\"http://www.musicxml.org/dtds/partwise.dtd\">\n"
      << "<score-partwise version=\"3.1\">\n";
  if (!score.metadata.title.empty())
    out << "  <work><work-title>" << xml::escape(score.metadata.title) << "</work-title></work>\n";
  out << "  <identification>\n";
  if (!score.metadata.composer.empty())
    out << "    <creator type=\"composer\">" << xml::escape(score.metadata.composer) << "</creator>\n";
  out << "    <encoding><software>musagent</software></encoding>\n  </identification>\n";
  out << "  <part-list>\n";
  for (std::size_t p = 0; p < score.parts.size(); ++p) {
    const auto& part = score.parts[p];
    out << "    <score-part id=\"P" << p + 1 << "\"><part-name>" << xml::escape(part.name) << "</part-name>";
    if (!part.instrument.empty())
      out << "<score-instrument id=\"P" << p + 1 << "-I1\"><instrument-name>" << xml::escape(part.instrument)
          << "</instrument-name></score-instrument>";
    out << "</score-part>\n";
  }
  out << "  </part-list>\n";

  for (std::size_t p = 0; p < score.parts.size(); ++p) {
    out << "  <part id=\"P" << p + 1 << "\">\n";
    std::optional<int> key_state;
    std::optional<TimeSignature> time_state;
    for (std::size_t k = 0; k < nm; ++k) {
      const Measure& m = score.measures[k];
      const Beat length = score.measure_length(k);
      const bool implicit = k == 0 ? score.metadata.pickup : m.irregular;
      // Printed numbers start at 1, or at 0 for a pickup.
      out << "    <measure number=\"" << m.index + (score.metadata.pickup ? 0 : 1) << "\"" << (implicit ? " implicit=\"yes\"" : "") << ">\n";

      std::string attrs;
      if (k == 0) attrs += "<divisions>" + std::to_string(divisions) + "</divisions>";
      if (m.notated_key && m.notated_key != key_state)
        attrs += "<key><fifths>" + std::to_string(*m.notated_key) + "</fifths></key>";
      if (!time_state || !(m.time == *time_state))
        attrs += "<time><beats>" + std::to_string(m.time.numerator) + "</beats><beat-type>" +
                 std::to_string(m.time.denominator) + "</beat-type></time>";
      key_state = m.notated_key ? m.notated_key : key_state;
      time_state = m.time;
      if (!attrs.empty()) out << "      <attributes>" << attrs << "</attributes>\n";

      if (p == 0) {
        for (const auto& a : notes_at[k]) {
          const std::int64_t off = units(a.offset);
          switch (a.kind) {
            case Annotation::section:
              out << "      <direction placement=\"above\"><direction-type><rehearsal>" << xml::escape(a.text)
                  << "</rehearsal></direction-type><direction-type><words>" << xml::escape(a.detail)
                  << "</words></direction-type></direction>\n";
              break;
            case Annotation::words: out << "      " << words_direction(a.text, off) << "\n"; break;
            case Annotation::harmony:
              out << "      " << a.detail;
              if (off) out << "<offset>" << off << "</offset>";
              out << "</harmony>\n";
              out << "      " << words_direction(a.text, off) << "\n";
              break;
          }
        }
      }

      // Distribute pieces into lanes.
      auto ps = pieces[p][k];
      std::stable_sort(ps.begin(), ps.end(), [](const Piece& a, const Piece& b) {
        return std::make_tuple(a.voice, a.onset, a.grace ? 0 : 1) < std::make_tuple(b.voice, b.onset, b.grace ? 0 : 1);
      });
      std::vector<Lane> lanes;
      for (const auto& pc : ps) {
        Lane* target = nullptr;
        for (auto& lane : lanes) {
          if (lane.voice != pc.voice) continue;
          if (!pc.grace && pc.pitch && !lane.groups.empty()) {
            const Piece& head = lane.groups.back().front();
            if (!head.grace && head.pitch && head.onset == pc.onset && head.duration == pc.duration) {
              lane.groups.back().push_back(pc);
              target = &lane;
              break;
            }
          }
          if (lane.cursor <= pc.onset) {
            lane.groups.push_back({pc});
            lane.cursor = pc.onset + pc.duration;
            target = &lane;
            break;
          }
        }
        if (!target) {
          Lane lane;
          lane.voice = pc.voice;
          lane.groups.push_back({pc});
          lane.cursor = pc.onset + pc.duration;
          lanes.push_back(std::move(lane));
        }
      }

      Beat pos{0};
      for (std::size_t li = 0; li < lanes.size(); ++li) {
        if (pos > 0) out << "      <backup><duration>" << units(pos) << "</duration></backup>\n";
        pos = 0;
        for (const auto& group : lanes[li].groups) {
          const Beat onset = group.front().onset;
          if (onset > pos) out << "      <forward><duration>" << units(onset - pos) << "</duration></forward>\n";
          pos = onset;
          for (std::size_t gi = 0; gi < group.size(); ++gi) {
            const Piece& pc = group[gi];
            out << "      <note>";
            if (pc.grace) out << "<grace/>";
            if (gi > 0) out << "<chord/>";
            if (pc.pitch) {
              out << "<pitch><step>" << pc.pitch->step << "</step>";
              if (pc.pitch->alter) out << "<alter>" << pc.pitch->alter << "</alter>";
              out << "<octave>" << pc.pitch->octave << "</octave></pitch>";
            } else {
              out << "<rest/>";
            }
            if (!pc.grace) out << "<duration>" << units(pc.duration) << "</duration>";
            if (pc.tie_stop) out << "<tie type=\"stop\"/>";
            if (pc.tie_start) out << "<tie type=\"start\"/>";
            out << "<voice>" << pc.voice << "</voice>";
            out << (pc.grace ? std::string("<type>eighth</type>") : note_type(pc.duration));
            if (pc.tie_stop || pc.tie_start) {
              out << "<notations>";
              if (pc.tie_stop) out << "<tied type=\"stop\"/>";
              if (pc.tie_start) out << "<tied type=\"start\"/>";
              out << "</notations>";
            }
            out << "</note>\n";
          }
          pos += group.front().duration;
        }
      }
      if (pos < length) out << "      <forward><duration>" << units(length - pos) << "</duration></forward>\n";
      out << "    </measure>\n";
    }
    out << "  </part>\n";
  }
  out << "</score-partwise>\n";
  return out.str();
}

}  // namespace musagent
