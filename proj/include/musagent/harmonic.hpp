#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "musagent/errors.hpp"
#include "musagent/score.hpp"

namespace musagent {

// ---------------------------------------------------------------------------
// Keys
// ---------------------------------------------------------------------------

enum class Mode { major, minor };

inline std::string mode_name(Mode m) { return m == Mode::major ? "major" : "minor"; }

struct Key {
  int tonic = 0;  // pitch class
  Mode mode = Mode::major;

  // Signed accidental count of the key signature, -6..+6.
  int fifths() const {
    int major_tonic = mode == Mode::major ? tonic : (tonic + 3) % 12;
    int f = (major_tonic * 7) % 12;
    return f > 6 ? f - 12 : f;
  }
  friend bool operator==(const Key&, const Key&) = default;
};

inline std::string pitch_class_name(int pc, bool prefer_flat) {
  static constexpr const char* kSharp[12] = {"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
  static constexpr const char* kFlat[12] = {"C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B"};
  pc = ((pc % 12) + 12) % 12;
  return prefer_flat ? kFlat[pc] : kSharp[pc];
}

inline std::string key_name(const Key& k) {
  return pitch_class_name(k.tonic, k.fifths() < 0) + " " + mode_name(k.mode);
}

// "C major", "f# minor", "Bb minor", "E-flat major".
inline Key parse_key_name(const std::string& s) {
  auto space = s.find(' ');
  if (space == std::string::npos || space == 0) throw SchemaError("key", "expected '<tonic> <mode>', got '" + s + "'");
  std::string tonic = s.substr(0, space);
  std::string mode = s.substr(space + 1);
  int step = step_semitone(static_cast<char>(std::toupper(static_cast<unsigned char>(tonic[0]))));
  if (step < 0) throw SchemaError("key", "bad tonic '" + tonic + "'");
  std::string acc = tonic.substr(1);
  int alter = 0;
  if (acc == "#" || acc == "-sharp") alter = 1;
  else if (acc == "b" || acc == "-" || acc == "-flat") alter = -1;
  else if (!acc.empty()) throw SchemaError("key", "bad accidental in '" + tonic + "'");
  Key k;
  k.tonic = ((step + alter) % 12 + 12) % 12;
  if (mode == "major") k.mode = Mode::major;
  else if (mode == "minor") k.mode = Mode::minor;
  else throw SchemaError("key", "bad mode '" + mode + "'");
  return k;
}

inline bool keys_related(const Key& a, const Key& b) {
  if (a == b) return false;
  if (a.tonic == b.tonic) return true;  // parallel
  if (a.mode != b.mode) {
    const Key& maj = a.mode == Mode::major ? a : b;
    const Key& min = a.mode == Mode::major ? b : a;
    return (maj.tonic + 9) % 12 == min.tonic;  // relative
  }
  int d = ((a.tonic - b.tonic) % 12 + 12) % 12;
  return d == 7 || d == 5;  // fifth-adjacent
}

struct KeyProfiles {
  std::string name = "krumhansl-kessler";
  std::array<double, 12> major{6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
  std::array<double, 12> minor{6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17};
};

struct KeyCandidate {
  Key key;
  double correlation = 0;
  friend bool operator==(const KeyCandidate&, const KeyCandidate&) = default;
};

struct KeyEstimate {
  Key key;
  double correlation = 0;
  KeyCandidate runner_up;
  friend bool operator==(const KeyEstimate&, const KeyEstimate&) = default;
};

using PcHistogram = std::array<double, 12>;

// Duration-weighted pitch classes of the events sounding in [from, to).
inline PcHistogram pc_histogram(const Score& score, const Beat& from, const Beat& to) {
  PcHistogram h{};
  for (const auto& part : score.parts)
    for (const auto& e : part.events) {
      if (e.is_rest() || e.grace) continue;
      Beat lo = beat_max(e.onset, from), hi = beat_min(e.end(), to);
      if (hi > lo) h[e.pitch->pitch_class()] += to_double(hi - lo);
    }
  return h;
}

inline PcHistogram pc_histogram(const Score& score) { return pc_histogram(score, Beat(0), score.total_beats); }

inline double pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
  double mx = 0, my = 0;
  for (int i = 0; i < 12; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= 12;
  my /= 12;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

inline double key_correlation(const PcHistogram& h, const Key& k, const KeyProfiles& p = {}) {
  const auto& prof = k.mode == Mode::major ? p.major : p.minor;
  std::array<double, 12> rotated{};
  for (int i = 0; i < 12; ++i) rotated[(i + k.tonic) % 12] = prof[i];
  return pearson(h, rotated);
}

// All 24 keys ranked best first: correlation, then fewer accidentals, then
// major, then lower tonic.
inline std::vector<KeyCandidate> rank_keys(const PcHistogram& h, const KeyProfiles& p = {}) {
  std::vector<KeyCandidate> all;
  for (Mode m : {Mode::major, Mode::minor})
    for (int t = 0; t < 12; ++t) all.push_back({{t, m}, key_correlation(h, {t, m}, p)});
  constexpr double kTie = 1e-12;
  std::stable_sort(all.begin(), all.end(), [](const KeyCandidate& a, const KeyCandidate& b) {
    if (std::abs(a.correlation - b.correlation) > kTie) return a.correlation > b.correlation;
    int fa = std::abs(a.key.fifths()), fb = std::abs(b.key.fifths());
    if (fa != fb) return fa < fb;
    if (a.key.mode != b.key.mode) return a.key.mode == Mode::major;
    return a.key.tonic < b.key.tonic;
  });
  return all;
}

inline KeyEstimate estimate_from_histogram(const PcHistogram& h, const KeyProfiles& p = {}) {
  auto ranked = rank_keys(h, p);
  return {ranked[0].key, ranked[0].correlation, ranked[1]};
}

inline bool histogram_empty(const PcHistogram& h) {
  return std::all_of(h.begin(), h.end(), [](double v) { return v <= 0; });
}

inline KeyEstimate estimate_global_key(const Score& score, const KeyProfiles& p = {}) {
  auto h = pc_histogram(score);
  if (histogram_empty(h)) throw EmptyInputError("no pitched content for key estimation");
  return estimate_from_histogram(h, p);
}

// Estimate pinned to a given key; runner-up is the best other key.
inline KeyEstimate estimate_for_key(const PcHistogram& h, const Key& k, const KeyProfiles& p = {}) {
  KeyEstimate e{k, key_correlation(h, k, p), {}};
  for (const auto& c : rank_keys(h, p))
    if (!(c.key == k)) {
      e.runner_up = c;
      break;
    }
  return e;
}

// ---------------------------------------------------------------------------
// Key trajectory
// ---------------------------------------------------------------------------

struct KeyRegion {
  Beat from{0};
  Beat to{0};
  int start_measure = 0;
  KeyEstimate estimate;
  friend bool operator==(const KeyRegion&, const KeyRegion&) = default;
};

struct Modulation {
  Beat beat{0};
  int measure = 0;
  Key from;
  Key to;
  friend bool operator==(const Modulation&, const Modulation&) = default;
};

struct KeyTrajectory {
  std::vector<KeyRegion> regions;
  std::vector<Modulation> modulations;
};

struct HarmonicConfig {
  int window_measures = 4;
  int hop = 1;
  int min_dwell = 2;
  Beat grid{1};
  double chord_floor = 0.6;
  KeyProfiles profiles;
};

// Run-length smoothing: runs shorter than min_dwell windows merge into a
// neighbour (the preceding run when there is one).
inline std::vector<std::pair<Key, int>> smooth_runs(const std::vector<Key>& windows, int min_dwell) {
  std::vector<std::pair<Key, int>> runs;  // key, window count
  for (const auto& k : windows) {
    if (!runs.empty() && runs.back().first == k) ++runs.back().second;
    else runs.push_back({k, 1});
  }
  auto coalesce = [&] {
    std::vector<std::pair<Key, int>> out;
    for (const auto& r : runs) {
      if (!out.empty() && out.back().first == r.first) out.back().second += r.second;
      else out.push_back(r);
    }
    runs = std::move(out);
  };
  while (runs.size() > 1) {
    std::size_t shortest = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (runs[i].second < min_dwell && (shortest == runs.size() || runs[i].second < runs[shortest].second))
        shortest = i;
    if (shortest == runs.size()) break;
    std::size_t into = shortest > 0 ? shortest - 1 : 1;
    runs[into].second += runs[shortest].second;
    runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(shortest));
    coalesce();
  }
  return runs;
}

inline KeyTrajectory track_keys(const Score& score, const HarmonicConfig& cfg = {}) {
  if (cfg.window_measures < 2) throw RangeError("window_measures must be >= 2");
  if (cfg.hop < 1) throw RangeError("hop must be >= 1");
  const int m = static_cast<int>(score.measures.size());
  KeyTrajectory out;
  auto whole = pc_histogram(score);
  if (histogram_empty(whole)) throw EmptyInputError("no pitched content for key tracking");
  KeyEstimate global = estimate_from_histogram(whole, cfg.profiles);

  if (cfg.window_measures > m) {
    out.regions.push_back({Beat(0), score.total_beats, m ? score.measures[0].index : 0, global});
    return out;
  }

  std::vector<Key> windows;
  Key last = global.key;
  for (int j = 0; j * cfg.hop + cfg.window_measures <= m; ++j) {
    int first = j * cfg.hop;
    auto h = pc_histogram(score, score.measures[first].start_beat,
                          score.measure_end(static_cast<std::size_t>(first + cfg.window_measures - 1)));
    if (!histogram_empty(h)) last = estimate_from_histogram(h, cfg.profiles).key;
    windows.push_back(last);
  }
  auto runs = smooth_runs(windows, cfg.min_dwell);

  // A run starting at window j changes key at the window's centre measure.
  const int centre = (cfg.window_measures - cfg.hop) / 2;
  std::vector<int> starts{0};
  int j = 0;
  for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
    j += runs[r].second;
    starts.push_back(std::min(m - 1, j * cfg.hop + centre));
  }
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto pos = static_cast<std::size_t>(starts[r]);
    Beat from = r == 0 ? Beat(0) : score.measures[pos].start_beat;
    Beat to = r + 1 < runs.size() ? score.measures[static_cast<std::size_t>(starts[r + 1])].start_beat
                                  : score.total_beats;
    if (to <= from) continue;
    auto h = pc_histogram(score, from, to);
    KeyRegion region{from, to, score.measures[pos].index, estimate_for_key(h, runs[r].first, cfg.profiles)};
    if (!out.regions.empty() && out.regions.back().estimate.key == region.estimate.key) {
      out.regions.back().to = to;
      continue;
    }
    if (!out.regions.empty())
      out.modulations.push_back({from, region.start_measure, out.regions.back().estimate.key, region.estimate.key});
    out.regions.push_back(region);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chords
// ---------------------------------------------------------------------------

enum class Quality { maj, min, dim, aug, dom7, maj7, min7, halfdim7, dim7 };

inline constexpr std::array<Quality, 9> kQualities{Quality::maj,  Quality::min,  Quality::dim,
                                                   Quality::aug,  Quality::dom7, Quality::maj7,
                                                   Quality::min7, Quality::halfdim7, Quality::dim7};

inline std::string quality_name(Quality q) {
  static constexpr const char* kNames[] = {"maj", "min", "dim", "aug", "dom7", "maj7", "min7", "halfdim7", "dim7"};
  return kNames[static_cast<int>(q)];
}

inline Quality parse_quality(const std::string& s) {
  for (auto q : kQualities)
    if (quality_name(q) == s) return q;
  throw SchemaError("quality", "unknown chord quality '" + s + "'");
}

inline std::vector<int> quality_intervals(Quality q) {
  switch (q) {
    case Quality::maj: return {0, 4, 7};
    case Quality::min: return {0, 3, 7};
    case Quality::dim: return {0, 3, 6};
    case Quality::aug: return {0, 4, 8};
    case Quality::dom7: return {0, 4, 7, 10};
    case Quality::maj7: return {0, 4, 7, 11};
    case Quality::min7: return {0, 3, 7, 10};
    case Quality::halfdim7: return {0, 3, 6, 10};
    case Quality::dim7: return {0, 3, 6, 9};
  }
  return {};
}

inline bool is_seventh(Quality q) { return static_cast<int>(q) >= static_cast<int>(Quality::dom7); }

struct ChordLabel {
  int root = 0;
  Quality quality = Quality::maj;
  Beat from{0};
  Beat to{0};
  double score = 0;
  friend bool operator==(const ChordLabel&, const ChordLabel&) = default;
};

struct ChordMatch {
  int root = 0;
  Quality quality = Quality::maj;
  double score = 0;
};

// Best template by cosine; ties go to the simpler quality, then lower root.
inline std::optional<ChordMatch> match_chord(const PcHistogram& h) {
  double norm = 0;
  for (double v : h) norm += v * v;
  if (norm <= 0) return std::nullopt;
  norm = std::sqrt(norm);
  std::optional<ChordMatch> best;
  constexpr double kTie = 1e-12;
  for (auto q : kQualities) {
    auto iv = quality_intervals(q);
    for (int root = 0; root < 12; ++root) {
      double dot = 0;
      for (int i : iv) dot += h[(root + i) % 12];
      double s = dot / (norm * std::sqrt(static_cast<double>(iv.size())));
      if (!best || s > best->score + kTie) best = ChordMatch{root, q, s};
    }
  }
  return best;
}

struct ChordAnalysis {
  std::vector<ChordLabel> chords;
  int unclassified_slices = 0;
};

inline ChordAnalysis classify_chords(const Score& score, const Beat& grid, double chord_floor = 0.6) {
  if (!(grid > 0)) throw RangeError("chord grid must be positive");
  ChordAnalysis out;
  double weighted = 0;  // duration-weighted score of the label being extended
  for (Beat t{0}; t < score.total_beats; t += grid) {
    Beat end = beat_min(t + grid, score.total_beats);
    auto m = match_chord(pc_histogram(score, t, end));
    if (!m || m->score < chord_floor) {
      ++out.unclassified_slices;
      continue;
    }
    double len = to_double(end - t);
    if (!out.chords.empty()) {
      auto& prev = out.chords.back();
      if (prev.to == t && prev.root == m->root && prev.quality == m->quality) {
        weighted += m->score * len;
        prev.to = end;
        prev.score = weighted / to_double(prev.to - prev.from);
        continue;
      }
    }
    weighted = m->score * len;
    out.chords.push_back({m->root, m->quality, t, end, m->score});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Roman numerals
// ---------------------------------------------------------------------------

struct RomanNumeral {
  std::string numeral;          // e.g. "V7/V", "ii", "bVI"
  int degree = 0;               // 0..6 scale degree of the root
  Quality quality = Quality::maj;
  std::optional<int> applied_of;  // target degree of a secondary dominant
  bool chromatic = false;       // nondiatonic and not a secondary dominant
  Key key;
  Beat from{0};
  Beat to{0};
  friend bool operator==(const RomanNumeral&, const RomanNumeral&) = default;
};

namespace roman_detail {

inline constexpr std::array<int, 7> kMajorDegrees{0, 2, 4, 5, 7, 9, 11};
inline constexpr std::array<int, 7> kMinorDegrees{0, 2, 3, 5, 7, 8, 10};

// Degree index of a semitone offset from the tonic, or -1.
inline int degree_of(int offset, Mode mode) {
  offset = ((offset % 12) + 12) % 12;
  if (mode == Mode::minor && offset == 11) return 6;  // leading-tone vii
  const auto& deg = mode == Mode::major ? kMajorDegrees : kMinorDegrees;
  for (int i = 0; i < 7; ++i)
    if (deg[i] == offset) return i;
  return -1;
}

// Qualities accepted as diatonic on a root offset; minor admits the
// natural, harmonic and melodic forms.
inline bool diatonic(int offset, Mode mode, Quality q) {
  using Q = Quality;
  auto in = [&](std::initializer_list<Q> qs) { return std::find(qs.begin(), qs.end(), q) != qs.end(); };
  if (mode == Mode::major) {
    switch (offset) {
      case 0: case 5: return in({Q::maj, Q::maj7});
      case 2: case 4: case 9: return in({Q::min, Q::min7});
      case 7: return in({Q::maj, Q::dom7});
      case 11: return in({Q::dim, Q::halfdim7});
      default: return false;
    }
  }
  switch (offset) {
    case 0: return in({Q::min, Q::min7});
    case 2: return in({Q::dim, Q::halfdim7, Q::min, Q::min7});
    case 3: return in({Q::maj, Q::maj7, Q::aug});
    case 5: return in({Q::min, Q::min7, Q::maj, Q::dom7});
    case 7: return in({Q::min, Q::min7, Q::maj, Q::dom7});
    case 8: return in({Q::maj, Q::maj7});
    case 10: return in({Q::maj, Q::dom7});
    case 11: return in({Q::dim, Q::dim7, Q::halfdim7});
    default: return false;
  }
}

// Triad quality of a degree in the key's primary scale (natural minor with a
// raised leading tone).
inline Quality primary_triad(int degree, Mode mode) {
  static constexpr std::array<Quality, 7> kMajor{Quality::maj, Quality::min, Quality::min, Quality::maj,
                                                 Quality::maj, Quality::min, Quality::dim};
  static constexpr std::array<Quality, 7> kMinor{Quality::min, Quality::dim, Quality::maj, Quality::min,
                                                 Quality::maj, Quality::maj, Quality::dim};
  return mode == Mode::major ? kMajor[degree] : kMinor[degree];
}

inline bool upper_case(Quality q) {
  return q == Quality::maj || q == Quality::aug || q == Quality::dom7 || q == Quality::maj7;
}

inline std::string suffix(Quality q) {
  switch (q) {
    case Quality::dim: return "o";
    case Quality::aug: return "+";
    case Quality::dom7: return "7";
    case Quality::maj7: return "M7";
    case Quality::min7: return "7";
    case Quality::halfdim7: return "ø7";
    case Quality::dim7: return "o7";
    default: return "";
  }
}

inline std::string numeral_text(int degree, Quality q) {
  static constexpr const char* kUpper[7] = {"I", "II", "III", "IV", "V", "VI", "VII"};
  static constexpr const char* kLower[7] = {"i", "ii", "iii", "iv", "v", "vi", "vii"};
  return std::string(upper_case(q) ? kUpper[degree] : kLower[degree]) + suffix(q);
}

}  // namespace roman_detail

inline RomanNumeral roman_numeral(const ChordLabel& chord, const Key& key) {
  using namespace roman_detail;
  RomanNumeral rn;
  rn.quality = chord.quality;
  rn.key = key;
  rn.from = chord.from;
  rn.to = chord.to;
  const int offset = ((chord.root - key.tonic) % 12 + 12) % 12;
  const int degree = degree_of(offset, key.mode);

  if (degree >= 0 && diatonic(offset, key.mode, chord.quality)) {
    rn.degree = degree;
    rn.numeral = numeral_text(degree, chord.quality);
    return rn;
  }
  if (chord.quality == Quality::maj || chord.quality == Quality::dom7) {
    const int target_offset = (offset + 5) % 12;  // a fifth below the root
    const int target = degree_of(target_offset, key.mode);
    if (target > 0 && primary_triad(target, key.mode) != Quality::dim) {
      rn.degree = degree >= 0 ? degree : target;
      rn.applied_of = target;
      rn.numeral = std::string(chord.quality == Quality::dom7 ? "V7/" : "V/") +
                   numeral_text(target, primary_triad(target, key.mode));
      return rn;
    }
  }
  rn.chromatic = true;
  if (degree >= 0) {
    rn.degree = degree;
    rn.numeral = numeral_text(degree, chord.quality);
  } else {
    const int up = degree_of(offset + 1, key.mode);
    if (up >= 0) {
      rn.degree = up;
      rn.numeral = "b" + numeral_text(up, chord.quality);
    } else {
      rn.degree = std::max(0, degree_of(offset - 1, key.mode));
      rn.numeral = "#" + numeral_text(rn.degree, chord.quality);
    }
  }
  return rn;
}

inline const KeyRegion* region_at(const std::vector<KeyRegion>& regions, const Beat& b) {
  for (const auto& r : regions)
    if (r.from <= b && b < r.to) return &r;
  return regions.empty() ? nullptr : &regions.back();
}

inline std::vector<RomanNumeral> roman_numerals(const std::vector<ChordLabel>& chords,
                                                const std::vector<KeyRegion>& trajectory) {
  std::vector<RomanNumeral> out;
  if (trajectory.empty()) return out;
  for (const auto& c : chords) out.push_back(roman_numeral(c, region_at(trajectory, c.from)->estimate.key));
  return out;
}

// ---------------------------------------------------------------------------
// Coherence
// ---------------------------------------------------------------------------

enum class HarmonicFunction { tonic, subdominant, dominant, applied, other };

inline HarmonicFunction harmonic_function(const RomanNumeral& rn) {
  if (rn.applied_of) return HarmonicFunction::applied;
  if (rn.chromatic) return HarmonicFunction::other;
  // Same degree sets in both modes; minor VII counts as dominant.
  switch (rn.degree) {
    case 0: case 2: case 5: return HarmonicFunction::tonic;
    case 1: case 3: return HarmonicFunction::subdominant;
    case 4: case 6: return HarmonicFunction::dominant;
  }
  return HarmonicFunction::other;
}

inline bool transition_allowed(const RomanNumeral& a, const RomanNumeral& b) {
  if (a.numeral == b.numeral && a.key == b.key) return true;
  using F = HarmonicFunction;
  F fa = harmonic_function(a), fb = harmonic_function(b);
  switch (fa) {
    case F::tonic: return true;
    case F::subdominant: return fb == F::dominant || fb == F::tonic || fb == F::subdominant;
    case F::dominant: return fb == F::tonic || fb == F::dominant;
    case F::applied: return !b.chromatic && !b.applied_of && b.degree == *a.applied_of;
    case F::other: return false;
  }
  return false;
}

inline double harmonic_coherence(const std::vector<RomanNumeral>& numerals) {
  if (numerals.size() < 2) throw UndefinedMetricError("harmonic coherence needs at least 2 numerals");
  int ok = 0;
  for (std::size_t i = 0; i + 1 < numerals.size(); ++i) ok += transition_allowed(numerals[i], numerals[i + 1]);
  return 10.0 * ok / static_cast<double>(numerals.size() - 1);
}

// ---------------------------------------------------------------------------
// Agent
// ---------------------------------------------------------------------------

struct HarmonicMap {
  KeyEstimate global_key;
  std::vector<KeyRegion> trajectory;
  std::vector<Modulation> modulations;
  std::vector<ChordLabel> chords;
  std::vector<RomanNumeral> numerals;
  std::optional<double> coherence;  // undefined with fewer than 2 numerals
  int unclassified_slices = 0;
  friend bool operator==(const HarmonicMap&, const HarmonicMap&) = default;
};

inline HarmonicMap analyze_harmony(const Score& score, const HarmonicConfig& cfg = {}) {
  HarmonicMap map;
  map.global_key = estimate_global_key(score, cfg.profiles);
  auto traj = track_keys(score, cfg);
  map.trajectory = std::move(traj.regions);
  map.modulations = std::move(traj.modulations);
  auto chords = classify_chords(score, cfg.grid, cfg.chord_floor);
  map.chords = std::move(chords.chords);
  map.unclassified_slices = chords.unclassified_slices;
  map.numerals = roman_numerals(map.chords, map.trajectory);
  if (map.numerals.size() >= 2) map.coherence = harmonic_coherence(map.numerals);
  return map;
}

}  // namespace musagent
