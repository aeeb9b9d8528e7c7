#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "musagent/format.hpp"
#include "musagent/score.hpp"

// Humdrum **kern reader. Supported: recip durations with dots and N%M
// ratios, pitch case/repetition octaves, accidentals, rests, ties, grace
// notes, chords, barlines, *M time signatures, *k key signatures, and the
// spine manipulators *^ *v *x *+ *-. Editorial and layout signifiers are
// stripped; non-kern spines are carried for column bookkeeping only.

namespace musagent {

namespace kern_detail {

struct Spine {
  bool kern = false;
  int column = 0;  // originating column, maps to a part
  Beat busy_until{0};
};

struct Token {
  std::optional<Beat> duration;
  std::optional<Pitch> pitch;
  bool rest = false;
  bool grace = false;
  bool tie_start = false;
  bool tie_continue = false;
  bool tie_end = false;
};

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto e = s.find(sep, pos);
    out.push_back(s.substr(pos, e == std::string_view::npos ? std::string_view::npos : e - pos));
    if (e == std::string_view::npos) break;
    pos = e + 1;
  }
  return out;
}

inline Token parse_token(std::string_view tok, int line) {
  Token t;
  std::size_t i = 0;
  std::optional<int> recip;
  int dots = 0;
  std::optional<int> ratio_den;
  while (i < tok.size()) {
    char c = tok[i];
    if (std::isdigit(static_cast<unsigned char>(c)) && !recip) {
      std::size_t b = i;
      while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
      std::string digits(tok.substr(b, i - b));
      if (digits.size() > 6) throw ParseError("duration value too large '" + std::string(tok) + "'", line);
      // Leading zeros mean breve (0) and longa (00).
      recip = digits == "00" ? -2 : digits == "0" ? -1 : std::stoi(digits);
      if (i < tok.size() && tok[i] == '%') {
        std::size_t b2 = ++i;
        while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
        if (i == b2 || i - b2 > 6) throw ParseError("bad rational duration '" + std::string(tok) + "'", line);
        ratio_den = std::stoi(std::string(tok.substr(b2, i - b2)));
      }
      while (i < tok.size() && tok[i] == '.') {
        ++dots;
        ++i;
      }
      continue;
    }
    if ((c >= 'a' && c <= 'g') || (c >= 'A' && c <= 'G')) {
      std::size_t b = i;
      while (i < tok.size() && tok[i] == c) ++i;
      int n = static_cast<int>(i - b);
      Pitch p;
      p.step = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      p.octave = std::islower(static_cast<unsigned char>(c)) ? 3 + n : 4 - n;
      p.alter = 0;
      t.pitch = p;
      continue;
    }
    switch (c) {
      case '#': if (t.pitch) ++t.pitch->alter; break;
      case '-': if (t.pitch) --t.pitch->alter; break;
      case 'r': t.rest = true; break;
      case 'q': case 'Q': t.grace = true; break;
      case '[': t.tie_start = true; break;
      case '_': t.tie_continue = true; break;
      case ']': t.tie_end = true; break;
      default: break;  // stems, beams, articulations, editorial marks
    }
    ++i;
  }
  if (recip) {
    Beat base;
    if (*recip == -2) base = Beat(16);
    else if (*recip == -1) base = Beat(8);
    else if (*recip == 0) throw ParseError("zero duration in token '" + std::string(tok) + "'", line);
    else base = Beat(4, *recip);
    if (ratio_den) {
      if (*ratio_den == 0) throw ParseError("zero ratio in token '" + std::string(tok) + "'", line);
      base *= *ratio_den;
    }
    Beat dur = base, add = base;
    for (int d = 0; d < dots; ++d) {
      add /= 2;
      dur += add;
    }
    t.duration = dur;
  }
  if (t.rest) t.pitch.reset();
  if (t.pitch && (t.pitch->alter < -2 || t.pitch->alter > 2 || t.pitch->midi() < 0 || t.pitch->midi() > 127))
    throw ParseError("pitch out of range in token '" + std::string(tok) + "'", line);
  if (!t.pitch && !t.rest) throw ParseError("token '" + std::string(tok) + "' has neither pitch nor rest", line);
  if (!t.duration && !t.grace) throw ParseError("token '" + std::string(tok) + "' has no duration", line);
  return t;
}

inline std::optional<TimeSignature> parse_meter(std::string_view tok) {
  if (tok.size() < 5 || tok.substr(0, 2) != "*M" || !std::isdigit(static_cast<unsigned char>(tok[2]))) return {};
  auto slash = tok.find('/');
  if (slash == std::string_view::npos) return {};
  try {
    int num = std::stoi(std::string(tok.substr(2, slash - 2)));
    int den = std::stoi(std::string(tok.substr(slash + 1)));
    if (num <= 0 || den <= 0) return {};
    return TimeSignature{num, den};
  } catch (const std::exception&) {
    return {};
  }
}

inline std::optional<int> parse_key_signature(std::string_view tok) {
  if (tok.size() < 4 || tok.substr(0, 3) != "*k[") return {};
  int sharps = 0, flats = 0;
  for (char c : tok.substr(3)) {
    if (c == '#') ++sharps;
    if (c == '-') ++flats;
  }
  return sharps - flats;
}

}  // namespace kern_detail

inline ParsedScore parse_kern(std::string_view text) {
  using namespace kern_detail;
  ParsedScore result;
  Score& score = result.score;
  ParseDiagnostics& diag = result.diagnostics;
  score.metadata.source_format = "kern";

  std::vector<Spine> spines;
  bool started = false;
  int next_column = 0;
  std::map<int, std::vector<NoteEvent>> events_by_column;
  struct Open {
    int column;
    int midi;
    std::size_t event;
  };
  std::vector<Open> open_ties;

  Beat now{0};
  TimeSignature time;
  std::optional<int> key;
  bool time_seen = false;
  Measure current;
  current.index = 0;
  current.start_beat = 0;
  current.time = time;
  bool current_has_content = false;

  auto close_measure = [&](bool final) {
    Beat len = now - current.start_beat;
    if (len == 0 && !current_has_content) return false;
    if (score.measures.empty() && len < current.time.length()) score.metadata.pickup = true;
    else current.irregular = len != current.time.length();
    score.measures.push_back(current);
    if (!final) {
      current = Measure{};
      current.index = static_cast<int>(score.measures.size());
      current.start_beat = now;
      current.time = time;
      current.notated_key = key;
      current_has_content = false;
    }
    return true;
  };

  int line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.substr(0, 2) == "!!") {
      if (line.substr(0, 8) == "!!!COM: ") score.metadata.composer = std::string(line.substr(8));
      else if (line.substr(0, 8) == "!!!OTL: ") score.metadata.title = std::string(line.substr(8));
      continue;
    }
    auto tokens = split(line, '\t');
    if (!started) {
      if (line.substr(0, 2) != "**") throw ParseError("data before exclusive interpretation", line_no);
      for (auto tok : tokens) spines.push_back({tok == "**kern", next_column++, Beat(0)});
      if (std::none_of(spines.begin(), spines.end(), [](const Spine& s) { return s.kern; }))
        throw ParseError("no **kern spine", line_no);
      started = true;
      continue;
    }
    if (spines.empty()) {
      diag.warn("line " + std::to_string(line_no), "content after all spines terminated ignored");
      break;
    }
    if (tokens.size() != spines.size())
      throw ParseError("spine count mismatch: expected " + std::to_string(spines.size()) + " tokens, found " +
                           std::to_string(tokens.size()),
                       line_no);

    if (line[0] == '!') continue;  // local comments and layout

    if (line[0] == '*') {
      std::vector<Spine> next;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::string_view tok = tokens[i];
        const Spine& sp = spines[i];
        if (tok == "*^") {
          next.push_back(sp);
          next.push_back(sp);
        } else if (tok == "*v") {
          Spine merged = sp;
          while (i + 1 < tokens.size() && tokens[i + 1] == "*v") {
            ++i;
            merged.busy_until = beat_max(merged.busy_until, spines[i].busy_until);
          }
          next.push_back(merged);
        } else if (tok == "*x" && i + 1 < tokens.size() && tokens[i + 1] == "*x") {
          next.push_back(spines[i + 1]);
          next.push_back(sp);
          ++i;
        } else if (tok == "*-") {
          // terminated
        } else if (tok == "*+") {
          next.push_back(sp);
          next.push_back({false, next_column++, now});
        } else if (tok.substr(0, 2) == "**") {
          Spine s = sp;
          s.kern = tok == "**kern";
          next.push_back(s);
        } else {
          if (sp.kern) {
            if (auto m = parse_meter(tok)) {
              time = *m;
              time_seen = true;
              if (now == current.start_beat) current.time = time;
            } else if (auto k = parse_key_signature(tok)) {
              key = *k;
              if (now == current.start_beat) current.notated_key = key;
            }
          }
          next.push_back(sp);
        }
      }
      spines = std::move(next);
      continue;
    }

    if (line[0] == '=') {
      close_measure(false);
      continue;
    }

    // Data line.
    std::map<int, int> voice_counter;  // column -> next voice number on this line
    Beat next_time{-1};
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      Spine& sp = spines[i];
      int voice = ++voice_counter[sp.column];
      if (!sp.kern) continue;
      std::string_view tok = tokens[i];
      if (tok == ".") continue;
      std::optional<Beat> shortest;
      for (auto sub : split(tok, ' ')) {
        if (sub.empty() || sub == ".") continue;
        Token t = parse_token(sub, line_no);
        Beat dur = t.grace ? Beat(0) : *t.duration;
        if (!t.grace && (!shortest || dur < *shortest)) shortest = dur;
        current_has_content = true;
        auto& col_events = events_by_column[sp.column];
        if (t.pitch && !t.grace && (t.tie_continue || t.tie_end)) {
          int midi = t.pitch->midi();
          auto it = std::find_if(open_ties.begin(), open_ties.end(), [&](const Open& o) {
            return o.column == sp.column && o.midi == midi && col_events[o.event].end() == now;
          });
          if (it != open_ties.end()) {
            col_events[it->event].duration += dur;
            if (t.tie_end) open_ties.erase(it);
            continue;
          }
          diag.warn("line " + std::to_string(line_no), "tie continuation without start");
        }
        NoteEvent e;
        e.onset = now;
        e.duration = dur;
        e.pitch = t.pitch;
        e.voice = voice;
        e.grace = t.grace;
        col_events.push_back(e);
        if (t.pitch && !t.grace && t.tie_start) open_ties.push_back({sp.column, t.pitch->midi(), col_events.size() - 1});
      }
      if (shortest) sp.busy_until = now + *shortest;
    }
    for (const auto& sp : spines)
      if (sp.kern && sp.busy_until > now && (next_time < 0 || sp.busy_until < next_time)) next_time = sp.busy_until;
    if (next_time > now) now = next_time;
  }
  if (!started) throw ParseError("no exclusive interpretation line");
  if (!open_ties.empty()) diag.warn("end", "unterminated tie");
  if (!spines.empty()) diag.warn("end", "spines not terminated with *-");

  // Trailing material after the last barline forms the final measure.
  if (!close_measure(true) && score.measures.empty()) score.measures.push_back(current);
  if (!time_seen) diag.warn("header", "no *M time signature; assumed 4/4");
  score.total_beats = now;

  // Humdrum lists the lowest staff first; parts are stored top-down.
  std::vector<int> columns;
  for (const auto& [col, evs] : events_by_column) columns.push_back(col);
  std::reverse(columns.begin(), columns.end());
  for (int col : columns) {
    Part p;
    p.id = "S" + std::to_string(col + 1);
    p.name = "spine " + std::to_string(col + 1);
    p.events = std::move(events_by_column[col]);
    score.parts.push_back(std::move(p));
  }
  finalize(score);
  return result;
}

}  // namespace musagent
