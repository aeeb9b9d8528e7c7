#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "musagent/errors.hpp"
#include "musagent/score.hpp"

namespace musagent {

struct FeatureFrame {
  int measure_index = 0;
  std::array<double, 12> pc_vector{};  // duration weights, L1-normalized
  double onset_density = 0;            // attacks per beat
  double voice_count = 0;              // mean simultaneous sounding notes
};

enum class SectionRole { introduction, exposition, development, reprise, coda, section };

inline std::string role_name(SectionRole r) {
  switch (r) {
    case SectionRole::introduction: return "introduction";
    case SectionRole::exposition: return "exposition";
    case SectionRole::development: return "development";
    case SectionRole::reprise: return "reprise";
    case SectionRole::coda: return "coda";
    case SectionRole::section: return "section";
  }
  return "section";
}

inline SectionRole parse_role(const std::string& s) {
  for (auto r : {SectionRole::introduction, SectionRole::exposition, SectionRole::development, SectionRole::reprise,
                 SectionRole::coda, SectionRole::section})
    if (role_name(r) == s) return r;
  throw SchemaError("role", "unknown section role '" + s + "'");
}

struct Segment {
  int start_measure = 0;
  int end_measure = 0;  // inclusive
  std::string letter;
  SectionRole role = SectionRole::section;
  double confidence = 0;

  int length() const { return end_measure - start_measure + 1; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct FormOutline {
  std::vector<Segment> segments;
  std::string form_string;

  // Segment starts after the first one.
  std::vector<int> boundaries() const {
    std::vector<int> out;
    for (std::size_t i = 1; i < segments.size(); ++i) out.push_back(segments[i].start_measure);
    return out;
  }
  friend bool operator==(const FormOutline&, const FormOutline&) = default;
};

struct StructuralConfig {
  int kernel_half_width = 4;
  double threshold = 0.3;
  double letter_match = 0.85;
  // Feature weights inside the similarity vector.
  double pc_weight = 1.0;
  double density_weight = 0.5;
  double voice_weight = 0.5;
  // Role heuristics.
  bool assign_roles = true;
  double intro_density_ratio = 0.75;
  int intro_max_measures = 8;
  double coda_length_ratio = 0.5;
};

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

inline std::vector<FeatureFrame> extract_frames(const Score& score) {
  if (score.measures.empty()) throw EmptyInputError("score has no measures");
  const std::size_t n = score.measures.size();
  std::vector<FeatureFrame> frames(n);
  std::vector<double> sounding(n, 0.0);
  std::vector<int> attacks(n, 0);
  for (std::size_t k = 0; k < n; ++k) frames[k].measure_index = score.measures[k].index;

  for (const auto& part : score.parts)
    for (const auto& e : part.events) {
      if (e.is_rest() || e.grace || e.duration <= 0) continue;
      std::size_t k = score.measure_position_at(e.onset);
      ++attacks[k];
      const int pc = e.pitch->pitch_class();
      for (; k < n && score.measures[k].start_beat < e.end(); ++k) {
        Beat lo = beat_max(e.onset, score.measures[k].start_beat);
        Beat hi = beat_min(e.end(), score.measure_end(k));
        if (hi <= lo) continue;
        double w = to_double(hi - lo);
        frames[k].pc_vector[pc] += w;
        sounding[k] += w;
      }
    }

  for (std::size_t k = 0; k < n; ++k) {
    auto& f = frames[k];
    double total = 0;
    for (double v : f.pc_vector) total += v;
    if (total > 0)
      for (double& v : f.pc_vector) v /= total;
    double len = to_double(score.measure_length(k));
    if (len > 0) {
      f.onset_density = attacks[k] / len;
      f.voice_count = sounding[k] / len;
    }
  }
  return frames;
}

// Weighted vector compared by cosine: unit-length pc profile, then density
// and voice count scaled by their maxima over the piece.
inline std::vector<std::vector<double>> similarity_vectors(const std::vector<FeatureFrame>& frames,
                                                           const StructuralConfig& cfg = {}) {
  double max_density = 0, max_voices = 0;
  for (const auto& f : frames) {
    max_density = std::max(max_density, f.onset_density);
    max_voices = std::max(max_voices, f.voice_count);
  }
  std::vector<std::vector<double>> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    std::vector<double> v(14, 0.0);
    double norm = 0;
    for (double x : f.pc_vector) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (int i = 0; i < 12; ++i) v[i] = cfg.pc_weight * f.pc_vector[i] / norm;
    if (max_density > 0) v[12] = cfg.density_weight * f.onset_density / max_density;
    if (max_voices > 0) v[13] = cfg.voice_weight * f.voice_count / max_voices;
    out.push_back(std::move(v));
  }
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

using Matrix = std::vector<std::vector<double>>;

inline Matrix self_similarity(const std::vector<FeatureFrame>& frames, const StructuralConfig& cfg = {}) {
  if (frames.size() < 2) throw RangeError("self-similarity needs at least 2 frames");
  auto vecs = similarity_vectors(frames, cfg);
  const std::size_t n = vecs.size();
  Matrix s(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    s[i][i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) s[i][j] = s[j][i] = cosine(vecs[i], vecs[j]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Boundaries
// ---------------------------------------------------------------------------

// Checkerboard novelty at the seam before frame i, kernel truncated
// symmetrically near the edges.
inline std::vector<double> novelty_curve(const Matrix& s, int half_width) {
  const int n = static_cast<int>(s.size());
  std::vector<double> nov(n, 0.0);
  for (int i = 1; i < n; ++i) {
    int l = std::min({half_width, i, n - i});
    double sum = 0;
    for (int a = 1; a <= l; ++a)
      for (int b = 1; b <= l; ++b)
        sum += s[i - a][i - b] + s[i + a - 1][i + b - 1] - s[i - a][i + b - 1] - s[i + a - 1][i - b];
    nov[i] = sum;
  }
  return nov;
}

// Frame positions (> 0) starting a new section. Position 0 is implicit.
inline std::vector<int> detect_boundaries(const Matrix& s, int kernel_half_width, double threshold) {
  if (kernel_half_width < 1) throw RangeError("kernel_half_width must be >= 1");
  auto nov = novelty_curve(s, kernel_half_width);
  const int n = static_cast<int>(nov.size());
  double peak = 0;
  for (double v : nov) peak = std::max(peak, v);
  std::vector<int> out;
  constexpr double kEps = 1e-9;
  if (peak <= kEps) return out;
  for (int i = 1; i < n; ++i) {
    bool rising = nov[i] > nov[i - 1];
    bool not_falling_after = i + 1 >= n || nov[i] >= nov[i + 1];
    if (rising && not_falling_after && nov[i] > kEps && nov[i] >= threshold * peak) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels and roles
// ---------------------------------------------------------------------------

inline std::string section_letter(std::size_t k) {
  if (k < 26) return std::string(1, static_cast<char>('A' + k));
  return "Z" + std::to_string(k - 25);
}

inline FormOutline label_sections(const std::vector<FeatureFrame>& frames, const std::vector<int>& boundaries,
                                  const StructuralConfig& cfg = {}) {
  FormOutline outline;
  if (frames.empty()) return outline;
  const int n = static_cast<int>(frames.size());
  std::vector<int> starts{0};
  for (int b : boundaries) {
    if (b <= starts.back() || b >= n) throw RangeError("boundaries must be sorted and inside the frame range");
    starts.push_back(b);
  }

  auto vecs = similarity_vectors(frames, cfg);
  struct Span {
    int from, to;  // frame positions, half-open
    std::vector<double> mean;
    double density = 0;
  };
  std::vector<Span> spans;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Span sp{starts[i], i + 1 < starts.size() ? starts[i + 1] : n, std::vector<double>(vecs[0].size(), 0.0), 0};
    for (int f = sp.from; f < sp.to; ++f) {
      for (std::size_t d = 0; d < sp.mean.size(); ++d) sp.mean[d] += vecs[f][d];
      sp.density += frames[f].onset_density;
    }
    const double len = sp.to - sp.from;
    for (double& v : sp.mean) v /= len;
    sp.density /= len;
    spans.push_back(std::move(sp));
  }

  std::vector<std::size_t> first_of_letter;  // span index of each letter's first occurrence
  std::vector<std::size_t> letter_of(spans.size());
  std::vector<double> match_sim(spans.size(), 1.0);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    double best = -1;
    std::size_t best_letter = 0;
    for (std::size_t l = 0; l < first_of_letter.size(); ++l) {
      double sim = cosine(spans[i].mean, spans[first_of_letter[l]].mean);
      if (sim > best) {
        best = sim;
        best_letter = l;
      }
    }
    if (best >= cfg.letter_match) {
      letter_of[i] = best_letter;
      match_sim[i] = best;
    } else {
      letter_of[i] = first_of_letter.size();
      first_of_letter.push_back(i);
    }
  }

  double mean_density = 0;
  for (const auto& f : frames) mean_density += f.onset_density;
  mean_density /= n;
  const double mean_len = static_cast<double>(n) / spans.size();

  bool other_material = false;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& sp = spans[i];
    Segment seg;
    seg.start_measure = frames[sp.from].measure_index;
    seg.end_measure = frames[sp.to - 1].measure_index;
    seg.letter = section_letter(letter_of[i]);
    seg.role = SectionRole::section;
    seg.confidence = 0.5;
    const int len = sp.to - sp.from;
    if (cfg.assign_roles) {
      const bool multi = spans.size() > 1;
      if (multi && i == 0 && sp.density < cfg.intro_density_ratio * mean_density && len < cfg.intro_max_measures) {
        seg.role = SectionRole::introduction;
        seg.confidence = 0.6;
      } else if (multi && i + 1 == spans.size() && len < cfg.coda_length_ratio * mean_len) {
        seg.role = SectionRole::coda;
        seg.confidence = 0.6;
      } else if (letter_of[i] == 0 && other_material) {
        seg.role = SectionRole::reprise;
        seg.confidence = match_sim[i];
      } else if (2 * sp.from < n || !multi) {
        seg.role = SectionRole::exposition;
        seg.confidence = multi ? 0.5 : 1.0;
      } else {
        seg.role = SectionRole::development;
        seg.confidence = 0.5;
      }
    }
    if (letter_of[i] != 0) other_material = true;
    outline.form_string += seg.letter;
    outline.segments.push_back(std::move(seg));
  }
  return outline;
}

// Full structural pass with the configured parameters.
inline FormOutline analyze_structure(const Score& score, const StructuralConfig& cfg = {}) {
  auto frames = extract_frames(score);
  std::vector<int> boundaries;
  if (frames.size() >= 2)
    boundaries = detect_boundaries(self_similarity(frames, cfg), cfg.kernel_half_width, cfg.threshold);
  return label_sections(frames, boundaries, cfg);
}

}  // namespace musagent
