#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "musagent/container.hpp"
#include "musagent/format.hpp"
#include "musagent/score.hpp"
#include "musagent/xml.hpp"

namespace musagent {

namespace musicxml_detail {

inline int to_int(const std::string& s, int fallback) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    return v;
  } catch (const std::exception&) {
    return fallback;
  }
}

// "3+2" style composite numerators are summed.
inline int parse_beats(const std::string& s) {
  int total = 0;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto plus = s.find('+', pos);
    int v = to_int(s.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos), 0);
    total += v;
    if (plus == std::string::npos) break;
    pos = plus + 1;
  }
  return total;
}

// Timewise documents are rewritten into the partwise layout.
inline xml::Node timewise_to_partwise(const xml::Node& root) {
  xml::Node out;
  out.name = "score-partwise";
  out.attributes = root.attributes;
  std::vector<std::string> order;
  std::map<std::string, xml::Node> parts;
  for (const auto& c : root.children) {
    if (c.name != "measure") {
      out.children.push_back(c);
      continue;
    }
    for (const auto& p : c.children) {
      if (p.name != "part") continue;
      std::string id = p.attr("id");
      if (!parts.count(id)) {
        order.push_back(id);
        xml::Node part;
        part.name = "part";
        part.attributes = {{"id", id}};
        parts[id] = part;
      }
      xml::Node m;
      m.name = "measure";
      m.attributes = c.attributes;
      m.line = c.line;
      m.children = p.children;
      parts[id].children.push_back(std::move(m));
    }
  }
  for (const auto& id : order) out.children.push_back(std::move(parts[id]));
  return out;
}

struct OpenTie {
  std::size_t event = 0;
  int voice = 1;
  int midi = 0;
};

}  // namespace musicxml_detail

inline ParsedScore parse_musicxml(std::string_view bytes) {
  using namespace musicxml_detail;
  std::string unwrapped;
  if (container::is_zip(bytes)) {
    unwrapped = container::unwrap_musicxml(bytes);
    bytes = unwrapped;
  }
  xml::Node root = xml::parse(bytes);
  if (root.name == "score-timewise") root = timewise_to_partwise(root);
  if (root.name != "score-partwise") throw ParseError("root element '" + root.name + "' is not a MusicXML score");

  ParsedScore result;
  Score& score = result.score;
  ParseDiagnostics& diag = result.diagnostics;
  score.metadata.source_format = "musicxml";

  if (const auto* work = root.child("work")) score.metadata.title = work->child_text("work-title");
  if (score.metadata.title.empty()) score.metadata.title = root.child_text("movement-title");
  if (const auto* ident = root.child("identification"))
    for (const auto* cr : ident->children_named("creator"))
      if (cr->attr("type") == "composer") score.metadata.composer = xml::Node::trimmed(cr->text);

  const xml::Node* part_list = root.child("part-list");
  std::map<std::string, std::pair<std::string, std::string>> part_info;  // id -> (name, instrument)
  std::vector<std::string> declared;
  if (part_list)
    for (const auto* sp : part_list->children_named("score-part")) {
      std::string instrument;
      if (const auto* si = sp->child("score-instrument")) instrument = si->child_text("instrument-name");
      part_info[sp->attr("id")] = {sp->child_text("part-name"), instrument};
      declared.push_back(sp->attr("id"));
    }
  if (declared.empty()) throw ParseError("empty part-list", part_list ? part_list->line : root.line);

  for (const auto& c : root.children) {
    if (c.name != "part" && c.name != "part-list" && c.name != "work" && c.name != "identification" &&
        c.name != "movement-title" && c.name != "movement-number")
      diag.skip(c.name);
  }

  for (const auto* part_node : root.children_named("part")) {
    const std::string id = part_node->attr("id");
    if (!part_info.count(id)) diag.warn("part " + id, "part not declared in part-list");
    Part part;
    part.id = id;
    part.name = part_info[id].first;
    part.instrument = part_info[id].second;
    const bool first_part = score.parts.empty();

    int divisions = 0;
    std::optional<int> fifths;
    TimeSignature time;
    bool time_seen = false;
    std::vector<OpenTie> open_ties;
    Beat measure_start{0};

    auto measures = part_node->children_named("measure");
    for (std::size_t k = 0; k < measures.size(); ++k) {
      const xml::Node& mnode = *measures[k];
      const std::string where = "part " + id + " measure " + mnode.attr("number", std::to_string(k));
      if (k < score.measures.size()) measure_start = score.measures[k].start_beat;

      Beat pos{0}, maxpos{0};
      Beat last_onset{0};
      TimeSignature time_at_start = time;
      std::optional<int> key_at_start = fifths;

      auto to_beats = [&](const std::string& text, int line) -> Beat {
        if (divisions <= 0) throw ParseError("missing divisions before first duration in " + where, line);
        double v = 0;
        try {
          v = std::stod(text);
        } catch (const std::exception&) {
          throw ParseError("bad duration '" + text + "' in " + where, line);
        }
        if (v < 0) throw ParseError("negative duration in " + where, line);
        if (std::floor(v) == v) return Beat(static_cast<std::int64_t>(v), divisions);
        diag.warn(where, "non-integer duration rounded");
        return Beat(std::llround(v * 960), 960LL * divisions);
      };

      for (const auto& el : mnode.children) {
        if (el.name == "attributes") {
          if (const auto* d = el.child("divisions")) {
            int dv = static_cast<int>(std::lround(std::atof(xml::Node::trimmed(d->text).c_str())));
            if (dv <= 0) throw ParseError("divisions must be positive in " + where, d->line);
            divisions = dv;
          }
          if (const auto* key = el.child("key")) {
            if (key->child("fifths")) fifths = to_int(key->child_text("fifths"), 0);
            else diag.skip("key(non-traditional)");
          }
          if (const auto* t = el.child("time")) {
            if (t->child("beats") && t->child("beat-type")) {
              int num = parse_beats(t->child_text("beats"));
              int den = to_int(t->child_text("beat-type"), 4);
              if (num > 0 && den > 0) {
                time = {num, den};
                time_seen = true;
              }
            } else {
              diag.skip("time(senza-misura)");
            }
          }
          for (const auto& a : el.children)
            if (a.name != "divisions" && a.name != "key" && a.name != "time") diag.skip("attributes/" + a.name);
          if (pos == 0) {
            time_at_start = time;
            key_at_start = fifths;
          }
        } else if (el.name == "note") {
          const bool grace = el.child("grace") != nullptr;
          const bool chord = el.child("chord") != nullptr;
          const bool cue = el.child("cue") != nullptr;
          Beat dur{0};
          if (!grace) {
            const auto* d = el.child("duration");
            if (!d) throw ParseError("note without duration in " + where, el.line);
            dur = to_beats(xml::Node::trimmed(d->text), d->line);
          }
          Beat onset = chord ? last_onset : pos;
          if (!chord && !grace) {
            last_onset = pos;
            pos += dur;
            maxpos = beat_max(maxpos, pos);
          } else if (!chord) {
            last_onset = pos;
          }
          if (cue) {
            diag.skip("note(cue)");
            continue;
          }
          std::optional<Pitch> pitch;
          if (const auto* p = el.child("pitch")) {
            Pitch pp;
            std::string step = p->child_text("step");
            if (step.size() != 1 || step_semitone(step[0]) < 0) throw ParseError("bad pitch step in " + where, p->line);
            pp.step = step[0];
            double alter = std::atof(p->child_text("alter", "0").c_str());
            if (std::floor(alter) != alter) diag.warn(where, "microtonal alter rounded");
            pp.alter = static_cast<int>(std::lround(alter));
            pp.octave = to_int(p->child_text("octave"), 4);
            if (pp.alter < -2 || pp.alter > 2 || pp.midi() < 0 || pp.midi() > 127) {
              diag.warn(where, "pitch out of range dropped");
              continue;
            }
            pitch = pp;
          } else if (el.child("unpitched")) {
            diag.skip("note(unpitched)");
            continue;
          } else if (!el.child("rest")) {
            diag.warn(where, "note without pitch or rest treated as rest");
          }
          if (!grace && dur == 0) {
            diag.warn(where, "zero-duration note dropped");
            continue;
          }
          int voice = to_int(el.child_text("voice", "1"), 1);
          bool tie_start = false, tie_stop = false;
          for (const auto* t : el.children_named("tie")) {
            if (t->attr("type") == "start") tie_start = true;
            if (t->attr("type") == "stop") tie_stop = true;
          }
          const Beat abs_onset = measure_start + onset;
          if (pitch && !grace && tie_stop) {
            int midi = pitch->midi();
            auto match = open_ties.end();
            for (auto it = open_ties.begin(); it != open_ties.end(); ++it) {
              const auto& ev = part.events[it->event];
              if (it->midi != midi || ev.end() != abs_onset) continue;
              if (match == open_ties.end() || it->voice == voice) match = it;
            }
            if (match != open_ties.end()) {
              std::size_t idx = match->event;
              part.events[idx].duration += dur;
              open_ties.erase(match);
              if (tie_start) open_ties.push_back({idx, voice, midi});
              continue;
            }
            diag.warn(where, "tie stop without matching start");
          }
          NoteEvent ev;
          ev.onset = abs_onset;
          ev.duration = grace ? Beat(0) : dur;
          ev.pitch = pitch;
          ev.voice = voice;
          ev.grace = grace;
          part.events.push_back(ev);
          if (pitch && !grace && tie_start) open_ties.push_back({part.events.size() - 1, voice, pitch->midi()});
        } else if (el.name == "backup") {
          const auto* d = el.child("duration");
          if (!d) throw ParseError("backup without duration in " + where, el.line);
          Beat b = to_beats(xml::Node::trimmed(d->text), d->line);
          pos -= b;
          if (pos < 0) {
            diag.warn(where, "backup before measure start clamped");
            pos = 0;
          }
        } else if (el.name == "forward") {
          const auto* d = el.child("duration");
          if (!d) throw ParseError("forward without duration in " + where, el.line);
          pos += to_beats(xml::Node::trimmed(d->text), d->line);
          maxpos = beat_max(maxpos, pos);
        } else {
          diag.skip(el.name);
        }
      }

      Beat length = maxpos > 0 ? maxpos : time_at_start.length();
      if (first_part) {
        Measure m;
        m.index = static_cast<int>(k);
        m.start_beat = measure_start;
        m.time = time_at_start;
        m.notated_key = key_at_start;
        const bool implicit = mnode.attr("implicit") == "yes";
        if (k == 0 && (implicit || length < time_at_start.length())) {
          score.metadata.pickup = true;
        } else {
          m.irregular = implicit || length != time_at_start.length();
        }
        score.measures.push_back(m);
      } else if (k >= score.measures.size()) {
        Measure m;
        m.index = static_cast<int>(k);
        m.start_beat = measure_start;
        m.time = time_at_start;
        m.notated_key = key_at_start;
        m.irregular = length != time_at_start.length();
        score.measures.push_back(m);
        diag.warn(where, "part has more measures than the first part");
      }
      measure_start += length;
    }
    if (first_part && !time_seen) diag.warn("part " + id, "no time signature; assumed 4/4");
    score.total_beats = beat_max(score.total_beats, measure_start);
    score.parts.push_back(std::move(part));
  }
  if (score.parts.empty()) throw ParseError("score has no parts");
  finalize(score);
  return result;
}

}  // namespace musagent
