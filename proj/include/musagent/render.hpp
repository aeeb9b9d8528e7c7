#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "musagent/report.hpp"

namespace musagent {

namespace render_detail {

inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string failure_line(const AnalysisReport& r, AgentName a) {
  const AgentEnvelope* e = r.envelope(a);
  if (!e) return "(" + agent_name(a) + " agent not run)\n";
  if (!e->ok) return "(" + agent_name(a) + " agent failed: " + (e->error() ? *e->error() : "") + ")\n";
  return "";
}

}  // namespace render_detail

// Plain-text report with six '#' sections: header, form, harmony, style,
// metrics, verdicts.
inline std::string render_human(const AnalysisReport& r) {
  using namespace render_detail;
  std::ostringstream out;
  const auto& src = r.source;
  out << "# Analysis of " << (src.title.empty() ? (src.work_id.empty() ? src.path : src.work_id) : src.title) << "\n";
  if (!src.composer.empty()) out << "composer: " << src.composer << "\n";
  if (!src.work_id.empty()) out << "work id: " << src.work_id << "\n";
  if (!src.path.empty()) out << "source: " << src.path << " (" << src.format << ")\n";
  out << "measures: " << src.measures << ", parts: " << src.parts << ", beats: " << to_string(src.total_beats) << "\n";
  out << "score digest: " << src.score_digest << "\n\n";

  out << "# Form\n";
  if (r.outline) {
    out << "form: " << r.outline->form_string << "\n";
    for (const auto& s : r.outline->segments)
      out << "  " << s.letter << "  measures " << s.start_measure << "-" << s.end_measure << "  " << role_name(s.role)
          << " (confidence " << fixed(s.confidence, 2) << ")\n";
  } else {
    out << failure_line(r, AgentName::structural);
  }
  out << "\n";

  out << "# Harmony\n";
  if (r.harmony) {
    const auto& h = *r.harmony;
    out << "global key: " << key_name(h.global_key.key) << " (r = " << fixed(h.global_key.correlation)
        << "; runner-up " << key_name(h.global_key.runner_up.key) << ", r = " << fixed(h.global_key.runner_up.correlation)
        << ")\n";
    out << "key trajectory:\n";
    for (const auto& reg : h.trajectory)
      out << "  from measure " << reg.start_measure << " (beat " << to_string(reg.from) << "): "
          << key_name(reg.estimate.key) << "\n";
    if (h.modulations.empty()) out << "modulations: none\n";
    for (const auto& m : h.modulations)
      out << "modulation at measure " << m.measure << " (beat " << to_string(m.beat) << "): " << key_name(m.from)
          << " -> " << key_name(m.to) << "\n";
    out << "chords: " << h.chords.size() << " labelled, " << h.unclassified_slices << " unclassified slices\n";
    constexpr std::size_t kShown = 24;
    out << "numerals:";
    for (std::size_t i = 0; i < h.numerals.size() && i < kShown; ++i) out << " " << h.numerals[i].numeral;
    if (h.numerals.size() > kShown) out << " ... (" << h.numerals.size() << " total)";
    out << "\n";
    std::map<std::string, int> counts;
    for (const auto& n : h.numerals) ++counts[n.numeral];
    std::vector<std::pair<std::string, int>> common(counts.begin(), counts.end());
    std::stable_sort(common.begin(), common.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    out << "most frequent:";
    for (std::size_t i = 0; i < common.size() && i < 6; ++i) out << " " << common[i].first << " x" << common[i].second;
    out << "\n";
  } else {
    out << failure_line(r, AgentName::harmonic);
  }
  out << "\n";

  out << "# Style\n";
  if (r.style) {
    auto dist = r.style->distribution;
    std::stable_sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    out << "top label: " << r.style->top_label << (r.style->degenerate ? " (degenerate: all likelihoods underflowed)" : "")
        << "\n";
    for (const auto& [label, p] : dist) out << "  " << label << ": " << fixed(p, 4) << "\n";
    if (!r.style->instrumentation_notes.empty()) out << "instrumentation: " << r.style->instrumentation_notes << "\n";
    if (!r.style->ornamentation_notes.empty()) out << "ornamentation: " << r.style->ornamentation_notes << "\n";
  } else {
    out << failure_line(r, AgentName::stylistic);
  }
  out << "\n";

  out << "# Metrics\n";
  for (const auto& [name, v] : r.metrics) out << "  " << name << ": " << fixed(v, 4) << "\n";
  for (const auto& [name, note] : r.metric_notes)
    if (!r.metrics.count(name)) out << "  " << name << ": undefined (" << note << ")\n";
  out << "\n";

  out << "# Verdicts\n";
  if (r.verdicts.empty() && r.verdict_notes.empty()) out << "no reference annotation supplied\n";
  for (const auto& v : r.verdicts)
    out << "  " << dimension_name(v.dimension) << ": " << verdict_name(v.verdict) << " (" << v.note << ")\n";
  for (const auto& n : r.verdict_notes) out << "  skipped " << n << "\n";
  return out.str();
}

}  // namespace musagent
