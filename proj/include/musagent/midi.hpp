#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "musagent/format.hpp"
#include "musagent/score.hpp"

// Standard MIDI File reader. Positions are metric (ticks / division); tempo
// changes do not move events.

namespace musagent {

namespace midi_detail {

class Reader {
 public:
  explicit Reader(std::string_view b, std::size_t base = 0) : b_(b), base_(base) {}

  bool done() const { return pos_ >= b_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint8_t peek() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_]);
  }
  std::uint16_t u16() {
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  std::uint32_t u32() {
    std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      std::uint8_t c = u8();
      v = (v << 7) | (c & 0x7Fu);
      if (!(c & 0x80u)) return v;
    }
    throw ParseError("variable-length quantity longer than 4 bytes at byte " + std::to_string(base_ + pos_));
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw ParseError("truncated MIDI data at byte " + std::to_string(base_ + pos_));
  }
  std::string_view b_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

struct TimeSigEvent {
  std::uint64_t tick;
  TimeSignature time;
};

struct KeySigEvent {
  std::uint64_t tick;
  int fifths;
};

struct RawNote {
  std::uint64_t on;
  std::uint64_t off;
  int key;
  int channel;
};

struct TrackData {
  std::string name;
  std::string instrument;
  std::vector<RawNote> notes;
  std::uint64_t end_tick = 0;
};

}  // namespace midi_detail

inline ParsedScore parse_midi(std::string_view bytes) {
  using namespace midi_detail;
  ParsedScore result;
  Score& score = result.score;
  ParseDiagnostics& diag = result.diagnostics;
  score.metadata.source_format = "midi";

  Reader hdr(bytes);
  if (hdr.bytes(4) != "MThd") throw ParseError("missing MThd header");
  std::uint32_t hlen = hdr.u32();
  if (hlen < 6) throw ParseError("MThd chunk shorter than 6 bytes");
  std::uint16_t format = hdr.u16();
  std::uint16_t ntracks = hdr.u16();
  std::uint16_t division = hdr.u16();
  hdr.bytes(hlen - 6);
  if (format == 2) throw UnsupportedFormatError("SMF format 2 (sequential tracks) is not supported");
  if (format > 2) throw ParseError("unknown SMF format " + std::to_string(format));
  if (division & 0x8000u) throw UnsupportedFormatError("SMPTE time division is not supported");
  if (division == 0) throw ParseError("zero ticks-per-quarter division");

  std::vector<TrackData> tracks;
  std::vector<TimeSigEvent> time_sigs;
  std::vector<KeySigEvent> key_sigs;
  std::size_t offset = hdr.pos();
  while (tracks.size() < ntracks && offset < bytes.size()) {
    const std::size_t t = tracks.size();
    Reader chunk(bytes.substr(offset), offset);
    std::string_view tag = chunk.bytes(4);
    std::uint32_t len = chunk.u32();
    if (offset + 8 + len > bytes.size()) throw ParseError("truncated chunk in track " + std::to_string(t));
    if (tag != "MTrk") {
      diag.skip("chunk:" + std::string(tag));
      offset += 8 + len;
      continue;
    }
    Reader r(bytes.substr(offset + 8, len), offset + 8);
    offset += 8 + len;

    TrackData track;
    std::map<std::pair<int, int>, std::deque<std::uint64_t>> open;  // (channel, key) -> note-on ticks
    std::uint64_t tick = 0;
    std::uint8_t running = 0;
    bool ended = false;
    while (!r.done() && !ended) {
      tick += r.vlq();
      std::uint8_t status = r.peek();
      if (status & 0x80u) {
        r.u8();
      } else {
        if (!running) throw ParseError("data byte without running status in track " + std::to_string(t));
        status = running;
      }
      if (status == 0xFF) {
        std::uint8_t type = r.u8();
        std::string_view data = r.bytes(r.vlq());
        switch (type) {
          case 0x2F: ended = true; break;
          case 0x03: track.name = std::string(data); break;
          case 0x04: track.instrument = std::string(data); break;
          case 0x58:
            if (data.size() >= 2 && data[0] > 0 && static_cast<unsigned char>(data[1]) < 16)
              time_sigs.push_back({tick, {static_cast<unsigned char>(data[0]), 1 << static_cast<unsigned char>(data[1])}});
            break;
          case 0x59:
            if (!data.empty()) key_sigs.push_back({tick, static_cast<signed char>(data[0])});
            break;
          case 0x51: break;  // tempo: metric positions do not depend on it
          default: diag.skip("meta:" + std::to_string(type));
        }
        running = 0;
      } else if (status == 0xF0 || status == 0xF7) {
        r.bytes(r.vlq());
        diag.skip("sysex");
        running = 0;
      } else if (status >= 0xF0) {
        throw ParseError("unexpected system message in track " + std::to_string(t));
      } else {
        running = status;
        int kind = status & 0xF0;
        int channel = status & 0x0F;
        int d1 = r.u8();
        int d2 = (kind == 0xC0 || kind == 0xD0) ? 0 : r.u8();
        if (d1 > 127 || d2 > 127) throw ParseError("data byte out of range in track " + std::to_string(t));
        if (kind == 0x90 && d2 > 0) {
          open[{channel, d1}].push_back(tick);
        } else if (kind == 0x80 || (kind == 0x90 && d2 == 0)) {
          auto it = open.find({channel, d1});
          if (it == open.end() || it->second.empty()) {
            diag.warn("track " + std::to_string(t), "note-off without note-on for key " + std::to_string(d1));
          } else {
            std::uint64_t on = it->second.front();
            it->second.pop_front();
            if (tick > on) track.notes.push_back({on, tick, d1, channel});
            else diag.warn("track " + std::to_string(t), "zero-length note dropped");
          }
        } else if (kind == 0xC0 && track.instrument.empty()) {
          track.instrument = "program " + std::to_string(d1);
        }
      }
    }
    track.end_tick = tick;
    for (auto& [key, ons] : open) {
      for (auto on : ons) {
        diag.warn("track " + std::to_string(t), "dangling note-on for key " + std::to_string(key.second) +
                                                    " closed at track end");
        if (tick > on) track.notes.push_back({on, tick, key.second, key.first});
      }
    }
    tracks.push_back(std::move(track));
  }
  if (tracks.size() < ntracks)
    throw ParseError("truncated file: header declares " + std::to_string(ntracks) + " tracks, found " +
                     std::to_string(tracks.size()));

  auto to_beat = [&](std::uint64_t ticks) { return Beat(static_cast<std::int64_t>(ticks), division); };

  std::uint64_t end_tick = 0;
  for (const auto& tr : tracks)
    for (const auto& n : tr.notes) end_tick = std::max(end_tick, n.off);
  Beat end = to_beat(end_tick);

  // Measure grid from time-signature events; 4/4 when none.
  std::stable_sort(time_sigs.begin(), time_sigs.end(), [](auto& a, auto& b) { return a.tick < b.tick; });
  std::stable_sort(key_sigs.begin(), key_sigs.end(), [](auto& a, auto& b) { return a.tick < b.tick; });
  if (time_sigs.empty()) {
    diag.warn("header", "no time signature; assumed 4/4");
    time_sigs.push_back({0, {4, 4}});
  } else if (time_sigs.front().tick != 0) {
    diag.warn("header", "first time signature after tick 0; assumed 4/4 before it");
    time_sigs.insert(time_sigs.begin(), {0, {4, 4}});
  }
  std::size_t ts = 0, ks = 0;
  std::optional<int> key;
  Beat start{0};
  int index = 0;
  do {
    while (ts + 1 < time_sigs.size() && to_beat(time_sigs[ts + 1].tick) <= start) ++ts;
    while (ks < key_sigs.size() && to_beat(key_sigs[ks].tick) <= start) key = key_sigs[ks++].fifths;
    Measure m;
    m.index = index++;
    m.start_beat = start;
    m.time = time_sigs[ts].time;
    m.notated_key = key;
    Beat next = start + m.time.length();
    if (ts + 1 < time_sigs.size() && to_beat(time_sigs[ts + 1].tick) < next) {
      next = to_beat(time_sigs[ts + 1].tick);
      m.irregular = true;
    }
    score.measures.push_back(m);
    start = next;
  } while (start < end);
  score.total_beats = start;

  int key_fifths = key_sigs.empty() ? 0 : key_sigs.front().fifths;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    auto& tr = tracks[t];
    if (tr.notes.empty()) continue;
    Part part;
    part.id = "T" + std::to_string(t + 1);
    part.name = tr.name;
    part.instrument = tr.instrument;
    for (const auto& n : tr.notes) {
      NoteEvent e;
      e.onset = to_beat(n.on);
      e.duration = to_beat(n.off - n.on);
      e.pitch = Pitch::from_midi(n.key, key_fifths);
      e.voice = n.channel + 1;
      part.events.push_back(e);
    }
    score.parts.push_back(std::move(part));
  }
  if (score.parts.empty()) diag.warn("header", "no tracks contain notes");
  finalize(score);
  return result;
}

}  // namespace musagent
