#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "musagent/config.hpp"
#include "musagent/errors.hpp"
#include "musagent/reference.hpp"
#include "musagent/report.hpp"

namespace musagent {

// ---------------------------------------------------------------------------
// Tolerance matching
// ---------------------------------------------------------------------------

struct MatchResult {
  int matched = 0;
  std::vector<std::pair<int, int>> pairs;  // (claimed, reference)
  std::vector<int> unmatched_claimed;
  std::vector<int> unmatched_reference;
};

// Greedy one-to-one pairing, nearest pairs first; ties by position.
inline MatchResult match_positions(const std::vector<int>& claimed, const std::vector<int>& reference, int tolerance) {
  std::vector<std::tuple<int, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < claimed.size(); ++i)
    for (std::size_t k = 0; k < reference.size(); ++k) {
      int d = std::abs(claimed[i] - reference[k]);
      if (d <= tolerance) candidates.emplace_back(d, i, k);
    }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> used_c(claimed.size()), used_r(reference.size());
  MatchResult out;
  for (const auto& [d, i, k] : candidates) {
    if (used_c[i] || used_r[k]) continue;
    used_c[i] = used_r[k] = true;
    out.pairs.emplace_back(claimed[i], reference[k]);
    ++out.matched;
  }
  for (std::size_t i = 0; i < claimed.size(); ++i)
    if (!used_c[i]) out.unmatched_claimed.push_back(claimed[i]);
  for (std::size_t k = 0; k < reference.size(); ++k)
    if (!used_r[k]) out.unmatched_reference.push_back(reference[k]);
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

struct BoundaryScores {
  double precision = 1;
  double recall = 1;
  double f1 = 1;
};

// The opening measure is an implicit boundary on both sides and is excluded.
inline BoundaryScores boundary_scores(std::vector<int> claimed, std::vector<int> reference, int tolerance,
                                      int first_measure = 0) {
  std::erase(claimed, first_measure);
  std::erase(reference, first_measure);
  auto m = match_positions(claimed, reference, tolerance);
  BoundaryScores s;
  s.precision = claimed.empty() ? 1.0 : static_cast<double>(m.matched) / claimed.size();
  s.recall = reference.empty() ? 1.0 : static_cast<double>(m.matched) / reference.size();
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline std::vector<int> modulation_measures(const HarmonicMap& h) {
  std::vector<int> out;
  for (const auto& m : h.modulations) out.push_back(m.measure);
  return out;
}

inline int first_measure_of(const AnalysisReport& r) {
  if (r.outline && !r.outline->segments.empty()) return r.outline->segments.front().start_measure;
  return 0;
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

enum class TonalAgreement { exact, related, disagree };

inline std::string tonal_agreement_name(TonalAgreement t) {
  switch (t) {
    case TonalAgreement::exact: return "exact";
    case TonalAgreement::related: return "related";
    case TonalAgreement::disagree: return "disagree";
  }
  return "";
}

inline TonalAgreement tonal_agreement(const Key& claimed, const Key& reference) {
  if (claimed == reference) return TonalAgreement::exact;
  if (keys_related(claimed, reference)) return TonalAgreement::related;
  return TonalAgreement::disagree;
}

struct AgreementStats {
  double segmentation_precision = 1;
  double segmentation_recall = 1;
  double segmentation_f1 = 1;
  double boundary_match_pct = 100;
  std::optional<TonalAgreement> tonal_agreement;  // absent when the reference has no key
  double modulation_jaccard = 1;
  bool segmentation_assessed = false;
  bool modulation_assessed = false;
};

inline AgreementStats compare_to_reference(const AnalysisReport& report, const ReferenceAnnotation& ref,
                                           const EvaluationConfig& cfg = {}) {
  if (report.source.work_id != ref.work_id)
    throw IdentityError("report work id '" + report.source.work_id + "' does not match reference '" + ref.work_id + "'");
  AgreementStats s;
  const int first = first_measure_of(report);
  if (ref.boundaries && report.outline) {
    auto b = boundary_scores(report.outline->boundaries(), *ref.boundaries, cfg.boundary_tolerance, first);
    s.segmentation_precision = b.precision;
    s.segmentation_recall = b.recall;
    s.segmentation_f1 = b.f1;
    s.boundary_match_pct = 100.0 * b.recall;
    s.segmentation_assessed = true;
  }
  if (ref.global_key && report.harmony) s.tonal_agreement = tonal_agreement(report.harmony->global_key.key, *ref.global_key);
  if (ref.modulations && report.harmony) {
    auto claimed = modulation_measures(*report.harmony);
    auto m = match_positions(claimed, *ref.modulations, cfg.modulation_tolerance);
    std::size_t uni = claimed.size() + ref.modulations->size() - m.matched;
    s.modulation_jaccard = uni == 0 ? 1.0 : static_cast<double>(m.matched) / uni;
    s.modulation_assessed = true;
  }
  return s;
}

// The report's own findings recast as a reference annotation.
inline ReferenceAnnotation reference_from_report(const AnalysisReport& r) {
  ReferenceAnnotation ref;
  ref.work_id = r.source.work_id;
  if (r.outline) {
    std::vector<int> b;
    for (const auto& s : r.outline->segments) b.push_back(s.start_measure);
    ref.boundaries = b;
    ref.letters = r.outline->form_string;
  }
  if (r.harmony) {
    ref.global_key = r.harmony->global_key.key;
    ref.modulations = modulation_measures(*r.harmony);
  }
  if (r.style) ref.style = r.style->top_label;
  return ref;
}

// ---------------------------------------------------------------------------
// Corpus summary
// ---------------------------------------------------------------------------

struct CorpusEntry {
  std::string work_id;
  std::optional<AgreementStats> stats;
  std::vector<ConsistencyVerdict> verdicts;
  std::string error;  // analysis failure, empty on success
};

struct CorpusSummary {
  int works = 0;
  int failures = 0;
  std::map<Dimension, std::map<Verdict, int>> verdict_counts;
  double mean_f1 = 0;
  double mean_boundary_match_pct = 0;
  int segmentation_assessed = 0;
  std::map<TonalAgreement, int> tonal;
};

inline CorpusSummary corpus_summary(const std::vector<CorpusEntry>& entries) {
  if (entries.empty()) throw EmptyInputError("corpus summary needs at least one entry");
  CorpusSummary s;
  s.works = static_cast<int>(entries.size());
  for (auto d : {Dimension::structural, Dimension::harmonic, Dimension::stylistic})
    for (auto v : {Verdict::Consistent, Verdict::MinorError, Verdict::Hallucination}) s.verdict_counts[d][v] = 0;
  for (auto t : {TonalAgreement::exact, TonalAgreement::related, TonalAgreement::disagree}) s.tonal[t] = 0;
  for (const auto& e : entries) {
    if (!e.error.empty()) ++s.failures;
    for (const auto& v : e.verdicts) ++s.verdict_counts[v.dimension][v.verdict];
    if (!e.stats) continue;
    if (e.stats->segmentation_assessed) {
      s.mean_f1 += e.stats->segmentation_f1;
      s.mean_boundary_match_pct += e.stats->boundary_match_pct;
      ++s.segmentation_assessed;
    }
    if (e.stats->tonal_agreement) ++s.tonal[*e.stats->tonal_agreement];
  }
  if (s.segmentation_assessed) {
    s.mean_f1 /= s.segmentation_assessed;
    s.mean_boundary_match_pct /= s.segmentation_assessed;
  }
  return s;
}

// Tab-separated per-work table. Columns: work_id, status, structural,
// harmonic, stylistic, precision, recall, f1, boundary_match_pct,
// tonal_agreement, modulation_jaccard. Unassessed cells are "-".
inline std::string corpus_table_tsv(const std::vector<CorpusEntry>& entries) {
  std::ostringstream out;
  out << "work_id\tstatus\tstructural\tharmonic\tstylistic\tprecision\trecall\tf1\tboundary_match_pct\t"
         "tonal_agreement\tmodulation_jaccard\n";
  auto verdict_cell = [](const CorpusEntry& e, Dimension d) {
    for (const auto& v : e.verdicts)
      if (v.dimension == d) return verdict_name(v.verdict);
    return std::string("-");
  };
  auto num = [](double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(4);
    s << v;
    return s.str();
  };
  for (const auto& e : entries) {
    out << e.work_id << '\t' << (e.error.empty() ? "ok" : "failed") << '\t' << verdict_cell(e, Dimension::structural)
        << '\t' << verdict_cell(e, Dimension::harmonic) << '\t' << verdict_cell(e, Dimension::stylistic);
    if (e.stats && e.stats->segmentation_assessed)
      out << '\t' << num(e.stats->segmentation_precision) << '\t' << num(e.stats->segmentation_recall) << '\t'
          << num(e.stats->segmentation_f1) << '\t' << num(e.stats->boundary_match_pct);
    else
      out << "\t-\t-\t-\t-";
    out << '\t' << (e.stats && e.stats->tonal_agreement ? tonal_agreement_name(*e.stats->tonal_agreement) : "-");
    out << '\t' << (e.stats && e.stats->modulation_assessed ? num(e.stats->modulation_jaccard) : "-") << '\n';
  }
  return out.str();
}

inline std::string corpus_summary_text(const CorpusSummary& s) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "works\t" << s.works << "\nfailures\t" << s.failures << '\n';
  out << "dimension\tConsistent\tMinorError\tHallucination\n";
  for (const auto& [d, counts] : s.verdict_counts)
    out << dimension_name(d) << '\t' << counts.at(Verdict::Consistent) << '\t' << counts.at(Verdict::MinorError) << '\t'
        << counts.at(Verdict::Hallucination) << '\n';
  out << "mean_f1\t" << s.mean_f1 << "\nmean_boundary_match_pct\t" << s.mean_boundary_match_pct << '\n';
  out << "tonal_exact\t" << s.tonal.at(TonalAgreement::exact) << "\ntonal_related\t"
      << s.tonal.at(TonalAgreement::related) << "\ntonal_disagree\t" << s.tonal.at(TonalAgreement::disagree) << '\n';
  return out.str();
}

}  // namespace musagent
