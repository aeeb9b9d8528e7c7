#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "musagent/musagent.hpp"

namespace testsupport {

using musagent::Beat;

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(MUSAGENT_SOURCE_DIR) / "tests" / "fixtures" / name;
}

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(MUSAGENT_SOURCE_DIR) / rel;
}

// Builds scores with a fixed meter and measure count.
class ScoreBuilder {
 public:
  explicit ScoreBuilder(int measures, int num = 4, int den = 4, int parts = 1) : measures_(measures), time_{num, den} {
    score_.parts.resize(parts);
    for (int p = 0; p < parts; ++p) score_.parts[p].id = "P" + std::to_string(p + 1);
  }

  ScoreBuilder& key(int fifths) {
    key_ = fifths;
    return *this;
  }

  ScoreBuilder& note(int midi, Beat onset, Beat duration, int part = 0, int voice = 1) {
    musagent::NoteEvent e;
    e.onset = onset;
    e.duration = duration;
    e.pitch = musagent::Pitch::from_midi(midi, key_.value_or(0));
    e.voice = voice;
    score_.parts.at(part).events.push_back(e);
    return *this;
  }

  ScoreBuilder& chord(std::vector<int> midis, Beat onset, Beat duration, int part = 0) {
    for (int m : midis) note(m, onset, duration, part);
    return *this;
  }

  ScoreBuilder& rest(Beat onset, Beat duration, int part = 0) {
    musagent::NoteEvent e;
    e.onset = onset;
    e.duration = duration;
    score_.parts.at(part).events.push_back(e);
    return *this;
  }

  Beat measure_length() const { return time_.length(); }

  musagent::Score build() const {
    musagent::Score s = score_;
    s.metadata.source_format = "synthetic";
    for (int k = 0; k < measures_; ++k) {
      musagent::Measure m;
      m.index = k;
      m.start_beat = time_.length() * k;
      m.time = time_;
      m.notated_key = key_;
      s.measures.push_back(m);
    }
    s.total_beats = time_.length() * measures_;
    musagent::finalize(s);
    return s;
  }

 private:
  int measures_;
  musagent::TimeSignature time_;
  std::optional<int> key_;
  musagent::Score score_;
};

// Scale run, tonic triad, dominant, tonic: a key-defining fixture. Minor
// keys use the harmonic minor scale.
inline musagent::Score key_fixture(int tonic, bool major) {
  static const int kMajor[]{0, 2, 4, 5, 7, 9, 11};
  static const int kMinor[]{0, 2, 3, 5, 7, 8, 11};
  ScoreBuilder b(4);
  const int base = 60 + tonic;
  for (int i = 0; i < 7; ++i) b.note(base + (major ? kMajor : kMinor)[i], Beat(i, 2), Beat(1, 2));
  b.note(base + 12, Beat(7, 2), Beat(1, 2));
  const int third = major ? 4 : 3;
  b.chord({base, base + third, base + 7}, 4, 4);
  b.chord({base + 7, base + 11, base + 14}, 8, 2);
  b.chord({base, base + third, base + 7}, 10, 2);
  b.chord({base, base + third, base + 7, base + 12}, 12, 4);
  return b.build();
}

// Sixteen measures in four-measure blocks X X Y X. Both X blocks sound the C
// major triad, the first as sustained four-voice chords and the second as a
// sixteenth-note arpeggio; Y sustains an A minor triad. A literal repeat has
// no novelty at its seam, so the X statements differ in texture only.
inline musagent::Score xxyx_fixture() {
  ScoreBuilder b(16);
  auto sustained = [&](int first, std::vector<int> chord, Beat len) {
    for (int m = first; m < first + 4; ++m)
      for (Beat t = 0; t < 4; t += len) b.chord(chord, Beat(4 * m) + t, len);
  };
  sustained(0, {48, 64, 67, 72}, 4);
  for (int m = 4; m < 8; ++m)
    for (int k = 0; k < 16; ++k) b.note(std::vector<int>{60, 64, 67, 72}[k % 4], Beat(4 * m) + Beat(k, 4), Beat(1, 4));
  sustained(8, {57, 60, 64, 69}, 2);
  sustained(12, {48, 64, 67, 72}, 4);
  return b.build();
}

inline musagent::StructuralConfig xxyx_config() {
  musagent::StructuralConfig c;
  c.threshold = 0.2;
  return c;
}

// Blocks of whole-note triads, one per letter, each block four measures.
inline musagent::Score block_piece(const std::string& letters) {
  static const std::map<char, std::vector<int>> kChord{
      {'A', {60, 64, 67}}, {'B', {62, 66, 69}}, {'C', {61, 65, 68}}, {'D', {63, 70, 71}}};
  ScoreBuilder b(static_cast<int>(letters.size()) * 4);
  for (std::size_t i = 0; i < letters.size(); ++i)
    for (int m = 0; m < 4; ++m) b.chord(kChord.at(letters[i]), Beat(16 * static_cast<int>(i) + 4 * m), 4);
  return b.build();
}

// ---------------------------------------------------------------------------
// Oracles, written independently of the library code paths.
// ---------------------------------------------------------------------------

inline const std::array<double, 12>& kk_major() {
  static const std::array<double, 12> v{6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
  return v;
}
inline const std::array<double, 12>& kk_minor() {
  static const std::array<double, 12> v{6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17};
  return v;
}

// Duration-weighted pitch-class histogram by direct summation.
inline std::array<double, 12> oracle_histogram(const musagent::Score& s) {
  std::array<double, 12> h{};
  for (const auto& p : s.parts)
    for (const auto& e : p.events)
      if (e.pitch && !e.grace) h[((e.pitch->midi() % 12) + 12) % 12] += musagent::to_double(e.duration);
  return h;
}

inline double oracle_pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
  double mx = 0, my = 0;
  for (int i = 0; i < 12; ++i) {
    mx += x[i] / 12;
    my += y[i] / 12;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct OracleKey {
  int tonic = 0;
  bool major = true;
  double r = -2;
};

// Best of the 24 rotated profiles; ties resolved toward the key signature
// with fewer accidentals, then major.
inline OracleKey oracle_key(const std::array<double, 12>& h) {
  auto accidentals = [](int tonic, bool major) {
    int rel = major ? tonic : (tonic + 3) % 12;
    int fifths = (rel * 7) % 12;
    if (fifths > 6) fifths -= 12;
    return std::abs(fifths);
  };
  OracleKey best;
  for (int major = 1; major >= 0; --major)
    for (int t = 0; t < 12; ++t) {
      std::array<double, 12> prof{};
      for (int i = 0; i < 12; ++i) prof[(i + t) % 12] = (major ? kk_major() : kk_minor())[i];
      double r = oracle_pearson(h, prof);
      bool take = r > best.r + 1e-12;
      if (!take && std::abs(r - best.r) <= 1e-12) {
        int a = accidentals(t, major), b = accidentals(best.tonic, best.major);
        take = a < b || (a == b && major && !best.major);
      }
      if (take) best = {t, static_cast<bool>(major), r};
    }
  return best;
}

// Minimum normalized cost over every monotone alignment path, enumerated
// recursively; ties go to the longer path.
inline double oracle_dtw(const std::vector<int>& a, const std::vector<int>& b) {
  double best_cost = std::numeric_limits<double>::infinity();
  int best_len = 0;
  std::function<void(std::size_t, std::size_t, double, int)> walk = [&](std::size_t i, std::size_t j, double cost,
                                                                         int len) {
    cost += std::abs(a[i] - b[j]);
    ++len;
    if (i + 1 == a.size() && j + 1 == b.size()) {
      if (cost < best_cost || (cost == best_cost && len > best_len)) {
        best_cost = cost;
        best_len = len;
      }
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, cost, len);
    if (j + 1 < b.size()) walk(i, j + 1, cost, len);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, cost, len);
  };
  walk(0, 0, 0, 0);
  return best_cost / best_len;
}

inline double oracle_entropy_bits(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  double h = 0;
  for (int c : counts)
    if (c) h -= c / total * std::log2(c / total);
  return h;
}

// Checkerboard novelty at every position by direct summation.
inline std::vector<double> oracle_novelty(const std::vector<std::vector<double>>& s, int half) {
  const int n = static_cast<int>(s.size());
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    int l = std::min({half, i, n - i});
    if (l == 0) continue;
    double sum = 0;
    for (int a = i - l; a < i + l; ++a)
      for (int b = i - l; b < i + l; ++b) {
        bool same_side = (a < i) == (b < i);
        sum += (same_side ? 1.0 : -1.0) * s[a][b];
      }
    out[i] = sum;
  }
  return out;
}

// Every recurring interval n-gram, by scanning all windows, with the
// containment filter applied occurrence by occurrence.
inline int oracle_motifs(const std::vector<int>& iv, int min_len, int max_len, int min_occ) {
  const int m = static_cast<int>(iv.size());
  std::map<std::vector<int>, std::vector<int>> occ;
  for (int n = min_len; n <= std::min(max_len, m); ++n)
    for (int s = 0; s + n <= m; ++s) occ[{iv.begin() + s, iv.begin() + s + n}].push_back(s);
  std::vector<std::pair<int, int>> counted;  // (start, length) of every counted occurrence
  for (const auto& [g, starts] : occ)
    if (static_cast<int>(starts.size()) >= min_occ)
      for (int s : starts) counted.emplace_back(s, static_cast<int>(g.size()));
  int count = 0;
  for (const auto& [g, starts] : occ) {
    if (static_cast<int>(starts.size()) < min_occ) continue;
    const int n = static_cast<int>(g.size());
    bool every_inside = true;
    for (int s : starts) {
      bool inside = false;
      for (const auto& [cs, cl] : counted)
        if (cl > n && cs <= s && s + n <= cs + cl) inside = true;
      every_inside = every_inside && inside;
    }
    if (!every_inside) ++count;
  }
  return count;
}

inline std::vector<musagent::MelodyNote> melody_of(const std::vector<int>& midis, Beat step = Beat(1)) {
  std::vector<musagent::MelodyNote> out;
  for (std::size_t i = 0; i < midis.size(); ++i)
    out.push_back({step * static_cast<std::int64_t>(i), step, midis[i]});
  return out;
}

// (onset, duration, midi) multiset of a score's sounding and rest events.
inline std::vector<std::tuple<Beat, Beat, int, bool>> event_multiset(const musagent::Score& s) {
  std::vector<std::tuple<Beat, Beat, int, bool>> out;
  for (const auto& p : s.parts)
    for (const auto& e : p.events) out.emplace_back(e.onset, e.duration, e.midi(), e.grace);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace testsupport
