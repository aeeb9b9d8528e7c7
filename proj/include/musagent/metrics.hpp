#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "musagent/errors.hpp"
#include "musagent/score.hpp"
#include "musagent/structural.hpp"

namespace musagent {

inline std::vector<int> interval_series(const std::vector<MelodyNote>& melody) {
  std::vector<int> out;
  for (std::size_t i = 1; i < melody.size(); ++i) out.push_back(melody[i].midi - melody[i - 1].midi);
  return out;
}

// ---------------------------------------------------------------------------
// DTW
// ---------------------------------------------------------------------------

struct DtwResult {
  double cost = 0;
  int path_length = 0;
  double normalized() const { return path_length ? cost / path_length : 0; }
};

// Classic DTW, steps (1,0), (0,1), (1,1), local cost |x - y|. Among
// minimum-cost paths the longest one is taken.
inline DtwResult dtw(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() || b.empty()) throw UndefinedMetricError("DTW needs non-empty sequences");
  const std::size_t n = a.size(), m = b.size();
  struct Cell {
    double cost = std::numeric_limits<double>::infinity();
    int len = 0;
  };
  auto better = [](const Cell& x, const Cell& y) { return x.cost < y.cost || (x.cost == y.cost && x.len > y.len); };
  std::vector<std::vector<Cell>> d(n, std::vector<Cell>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double c = std::abs(a[i] - b[j]);
      if (i == 0 && j == 0) {
        d[i][j] = {c, 1};
        continue;
      }
      Cell best;
      if (i > 0 && better(d[i - 1][j], best)) best = d[i - 1][j];
      if (j > 0 && better(d[i][j - 1], best)) best = d[i][j - 1];
      if (i > 0 && j > 0 && better(d[i - 1][j - 1], best)) best = d[i - 1][j - 1];
      d[i][j] = {best.cost + c, best.len + 1};
    }
  return {d[n - 1][m - 1].cost, d[n - 1][m - 1].len};
}

inline double dtw_interval_distance(const std::vector<int>& a, const std::vector<int>& b) { return dtw(a, b).normalized(); }

inline double dtw_melodic_distance(const std::vector<MelodyNote>& a, const std::vector<MelodyNote>& b) {
  if (a.size() < 2 || b.size() < 2) throw UndefinedMetricError("DTW needs melodies of at least 2 notes");
  return dtw_interval_distance(interval_series(a), interval_series(b));
}

// ---------------------------------------------------------------------------
// Rhythmic entropy
// ---------------------------------------------------------------------------

struct EntropyConfig {
  Beat grid{1, 4};
  Beat cap{8};
};

inline double shannon_entropy_bits(const std::map<Beat, int>& histogram) {
  double total = 0;
  for (const auto& [k, c] : histogram) total += c;
  double h = 0;
  for (const auto& [k, c] : histogram)
    if (c > 0) {
      double p = c / total;
      h -= p * std::log2(p);
    }
  return h == 0 ? 0.0 : h;  // avoid -0
}

// Inter-onset intervals rounded to the nearest grid step, capped.
inline std::map<Beat, int> ioi_histogram(const std::vector<Beat>& onsets, const EntropyConfig& cfg = {}) {
  std::map<Beat, int> hist;
  for (std::size_t i = 1; i < onsets.size(); ++i) {
    Beat steps = (onsets[i] - onsets[i - 1]) / cfg.grid + Beat(1, 2);
    Beat q = Beat(steps.numerator() / steps.denominator()) * cfg.grid;  // onsets ascend, so this is floor
    ++hist[beat_min(q, cfg.cap)];
  }
  return hist;
}

inline double rhythmic_entropy(const std::vector<Beat>& onsets, const EntropyConfig& cfg = {}) {
  if (onsets.size() < 2) throw UndefinedMetricError("rhythmic entropy needs at least 2 onsets");
  return shannon_entropy_bits(ioi_histogram(onsets, cfg));
}

inline double rhythmic_entropy(const Score& score, const EntropyConfig& cfg = {}) {
  std::vector<MelodyNote> melody;
  try {
    melody = flatten_melody(score, kAllParts);
  } catch (const EmptyInputError&) {
    throw UndefinedMetricError("rhythmic entropy needs at least 2 onsets");
  }
  std::vector<Beat> onsets;
  for (const auto& n : melody) onsets.push_back(n.onset);
  return rhythmic_entropy(onsets, cfg);
}

// ---------------------------------------------------------------------------
// Form diversity
// ---------------------------------------------------------------------------

// Natural-log Shannon index of section letters weighted by length.
inline double shannon_form_diversity(const FormOutline& outline) {
  if (outline.segments.empty()) throw EmptyInputError("form diversity needs a non-empty outline");
  std::map<std::string, double> weight;
  double total = 0;
  for (const auto& s : outline.segments) {
    weight[s.letter] += s.length();
    total += s.length();
  }
  double h = 0;
  for (const auto& [l, w] : weight)
    if (w > 0) h -= (w / total) * std::log(w / total);
  return h == 0 ? 0.0 : h;
}

// ---------------------------------------------------------------------------
// Motifs
// ---------------------------------------------------------------------------

struct MotifConfig {
  int min_len = 3;
  int max_len = 6;
  int min_occurrences = 3;
};

struct MotifResult {
  int count = 0;
  std::vector<std::vector<int>> motifs;  // surviving interval n-grams, sorted
  std::string note;                       // set when the melody is too short
};

// Distinct interval n-grams recurring at least min_occurrences times
// (overlaps allowed). An n-gram is dropped when each of its occurrences
// lies inside an occurrence of a longer counted n-gram.
inline MotifResult motif_complexity(const std::vector<int>& intervals, const MotifConfig& cfg = {}) {
  MotifResult out;
  const int m = static_cast<int>(intervals.size());
  if (cfg.min_len < 1 || cfg.max_len < cfg.min_len) throw RangeError("bad motif length range");
  if (m < cfg.min_len) {
    out.note = "melody too short for motif counting";
    return out;
  }
  const int top = std::min(cfg.max_len, m);
  std::map<std::vector<int>, std::vector<int>> starts_of;
  for (int n = cfg.min_len; n <= top; ++n)
    for (int s = 0; s + n <= m; ++s)
      starts_of[std::vector<int>(intervals.begin() + s, intervals.begin() + s + n)].push_back(s);

  // counted_start[n][s]: a counted n-gram occurs at s.
  std::vector<std::vector<bool>> counted_start(top + 1, std::vector<bool>(m, false));
  for (const auto& [g, starts] : starts_of)
    if (static_cast<int>(starts.size()) >= cfg.min_occurrences)
      for (int s : starts) counted_start[g.size()][s] = true;

  auto covered = [&](int s, int n) {
    for (int len = n + 1; len <= top; ++len)
      for (int t = std::max(0, s + n - len); t <= s; ++t)
        if (counted_start[len][t]) return true;
    return false;
  };
  for (const auto& [g, starts] : starts_of) {
    if (static_cast<int>(starts.size()) < cfg.min_occurrences) continue;
    const int n = static_cast<int>(g.size());
    bool all_covered = std::all_of(starts.begin(), starts.end(), [&](int s) { return covered(s, n); });
    if (!all_covered) out.motifs.push_back(g);
  }
  out.count = static_cast<int>(out.motifs.size());
  return out;
}

inline MotifResult motif_complexity(const std::vector<MelodyNote>& melody, const MotifConfig& cfg = {}) {
  if (static_cast<int>(melody.size()) < cfg.min_len + 1) {
    MotifResult out;
    out.note = "melody has fewer than " + std::to_string(cfg.min_len + 1) + " notes";
    return out;
  }
  return motif_complexity(interval_series(melody), cfg);
}

}  // namespace musagent
