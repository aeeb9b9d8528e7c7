#pragma once

#include <algorithm>
#include <chrono>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "musagent/config.hpp"
#include "musagent/evaluation.hpp"
#include "musagent/harmonic.hpp"
#include "musagent/metrics.hpp"
#include "musagent/reference.hpp"
#include "musagent/report.hpp"
#include "musagent/score.hpp"
#include "musagent/structural.hpp"
#include "musagent/stylistic.hpp"

namespace musagent {

// Every planned agent failed; the envelopes say why.
class AnalysisError : public Error {
 public:
  AnalysisError(const std::string& msg, std::vector<AgentEnvelope> envelopes)
      : Error(msg), envelopes_(std::move(envelopes)) {}
  const std::vector<AgentEnvelope>& envelopes() const { return envelopes_; }

 private:
  std::vector<AgentEnvelope> envelopes_;
};

// ---------------------------------------------------------------------------
// Plan
// ---------------------------------------------------------------------------

struct AgentTask {
  AgentName agent = AgentName::structural;
  std::set<AgentName> depends_on;
  int stage = 0;  // tasks sharing a stage may run concurrently
  nlohmann::json config;
};

inline std::set<AgentName> default_dependencies(AgentName a) {
  if (a == AgentName::stylistic) return {AgentName::structural, AgentName::harmonic};
  return {};
}

inline nlohmann::json agent_config_json(AgentName a, const AnalysisConfig& cfg) {
  switch (a) {
    case AgentName::structural: return to_json(cfg.structural);
    case AgentName::harmonic: return to_json(cfg.harmonic);
    case AgentName::stylistic: return to_json(cfg.stylistic);
  }
  return {};
}

// Topological order; within a stage agents keep their canonical order.
inline std::vector<AgentTask> plan(const AnalysisConfig& cfg) {
  if (cfg.agents.empty()) throw PlanError("configuration names no agents");
  std::set<AgentName> requested;
  for (auto a : cfg.agents)
    if (!requested.insert(a).second) throw PlanError("agent '" + agent_name(a) + "' listed twice");
  std::map<AgentName, std::set<AgentName>> deps;
  for (auto a : requested) {
    auto it = cfg.depends_on.find(a);
    deps[a] = it != cfg.depends_on.end() ? it->second : default_dependencies(a);
    for (auto d : deps[a])
      if (!requested.count(d))
        throw PlanError("agent '" + agent_name(a) + "' depends on '" + agent_name(d) + "', which is not planned");
  }
  std::vector<AgentTask> out;
  std::map<AgentName, int> stage_of;
  std::set<AgentName> remaining = requested;
  for (int stage = 0; !remaining.empty(); ++stage) {
    std::vector<AgentName> ready;
    for (auto a : remaining) {
      bool ok = std::all_of(deps[a].begin(), deps[a].end(), [&](AgentName d) { return stage_of.count(d) > 0; });
      if (ok) ready.push_back(a);
    }
    if (ready.empty()) {
      std::string names;
      for (auto a : remaining) names += (names.empty() ? "" : ", ") + agent_name(a);
      throw PlanError("dependency cycle among: " + names);
    }
    for (auto a : ready) {
      stage_of[a] = stage;
      remaining.erase(a);
      out.push_back({a, deps[a], stage, agent_config_json(a, cfg)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Score identity
// ---------------------------------------------------------------------------

inline std::string score_digest(const Score& score) {
  std::ostringstream s;
  s << score.measures.size() << ';' << to_string(score.total_beats) << ';';
  for (const auto& m : score.measures)
    s << m.index << ',' << to_string(m.start_beat) << ',' << m.time.numerator << '/' << m.time.denominator << ','
      << (m.notated_key ? std::to_string(*m.notated_key) : "-") << ';';
  for (const auto& p : score.parts) {
    s << '|' << p.id << ';';
    for (const auto& e : p.events)
      s << to_string(e.onset) << ',' << to_string(e.duration) << ',' << e.midi() << ',' << e.voice << ','
        << e.grace << ';';
  }
  return fnv1a_hex(s.str());
}

inline SourceInfo source_info(const Score& score, const std::string& path, const std::string& work_id) {
  SourceInfo src;
  src.path = path;
  src.work_id = work_id;
  src.format = score.metadata.source_format;
  src.title = score.metadata.title;
  src.composer = score.metadata.composer;
  src.score_digest = score_digest(score);
  src.measures = static_cast<int>(score.measures.size());
  src.parts = static_cast<int>(score.parts.size());
  src.total_beats = score.total_beats;
  return src;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// Metrics over whatever the agents produced; undefined ones get a note.
inline void compute_metrics(const Score& score, AnalysisReport& report, const EvaluationConfig& cfg) {
  auto guard = [&](const std::string& name, auto&& fn) {
    try {
      report.metrics[name] = fn();
    } catch (const Error& e) {
      report.metric_notes[name] = e.what();
    }
  };
  if (report.harmony) {
    if (report.harmony->coherence) report.metrics["harmonic_coherence"] = *report.harmony->coherence;
    else report.metric_notes["harmonic_coherence"] = "fewer than 2 numerals";
  } else {
    report.metric_notes["harmonic_coherence"] = "harmonic agent unavailable";
  }
  guard("rhythmic_entropy_bits", [&] { return rhythmic_entropy(score, cfg.entropy); });
  if (report.outline) guard("form_diversity", [&] { return shannon_form_diversity(*report.outline); });
  else report.metric_notes["form_diversity"] = "structural agent unavailable";

  std::vector<MelodyNote> melody;
  try {
    melody = flatten_melody(score, kAllParts);
  } catch (const Error& e) {
    report.metric_notes["motif_complexity"] = e.what();
  }
  if (!melody.empty()) {
    auto motifs = motif_complexity(melody, cfg.motif);
    report.metrics["motif_complexity"] = motifs.count;
    if (!motifs.note.empty()) report.metric_notes["motif_complexity"] = motifs.note;
  }

  // Melodic distance between the opening and closing sections.
  if (!report.outline || report.outline->segments.size() < 2) {
    report.metric_notes["melodic_dtw_first_last"] = "needs at least 2 sections";
  } else {
    guard("melodic_dtw_first_last", [&] {
      auto span = [&](const Segment& seg) {
        Beat from{0}, to = score.total_beats;
        for (std::size_t k = 0; k < score.measures.size(); ++k) {
          if (score.measures[k].index == seg.start_measure) from = score.measures[k].start_beat;
          if (score.measures[k].index == seg.end_measure) to = score.measure_end(k);
        }
        return flatten_melody(slice(score, from, to), kAllParts);
      };
      return dtw_melodic_distance(span(report.outline->segments.front()), span(report.outline->segments.back()));
    });
  }
}

// ---------------------------------------------------------------------------
// run_analysis
// ---------------------------------------------------------------------------

// Structural and harmonic agents run concurrently on the shared score;
// stylistic runs once both have joined. Envelopes are keyed by agent, so the
// report does not depend on completion order.
inline AnalysisReport run_analysis(const Score& score, const AnalysisConfig& cfg, const StyleDatabase& db,
                                   const std::string& path = "", const std::string& work_id = "") {
  if (auto v = validate(score); !v.empty())
    throw ConsistencyError("score violates invariant '" + v.front().invariant + "': " + v.front().message);
  auto tasks = plan(cfg);

  std::map<AgentName, AgentEnvelope> done;
  auto run_one = [&](const AgentTask& task) {
    AgentEnvelope env;
    env.agent = task.agent;
    env.config_digest = fnv1a_hex(task.config.dump());
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (cfg.fail_agents.count(task.agent)) throw Error("injected failure");
      for (auto d : task.depends_on)
        if (!done.at(d).ok) throw Error("dependency '" + agent_name(d) + "' failed");
      switch (task.agent) {
        case AgentName::structural: env.payload = analyze_structure(score, cfg.structural); break;
        case AgentName::harmonic: env.payload = analyze_harmony(score, cfg.harmonic); break;
        case AgentName::stylistic: {
          const auto& outline = std::get<FormOutline>(done.at(AgentName::structural).payload);
          const auto& harmony = std::get<HarmonicMap>(done.at(AgentName::harmonic).payload);
          env.payload = analyze_style(score, harmony, outline, db, cfg.stylistic);
          break;
        }
      }
      env.ok = true;
    } catch (const std::exception& e) {
      env.ok = false;
      env.payload = std::string(e.what());
    }
    env.duration_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    return env;
  };

  for (std::size_t i = 0; i < tasks.size();) {
    std::size_t j = i;
    while (j < tasks.size() && tasks[j].stage == tasks[i].stage) ++j;
    std::vector<std::future<AgentEnvelope>> running;
    for (std::size_t k = i + 1; k < j; ++k) running.push_back(std::async(std::launch::async, run_one, std::cref(tasks[k])));
    AgentEnvelope first = run_one(tasks[i]);
    std::vector<AgentEnvelope> stage{std::move(first)};
    for (auto& f : running) stage.push_back(f.get());
    for (auto& e : stage) done.emplace(e.agent, std::move(e));
    i = j;
  }

  AnalysisReport report;
  report.source = source_info(score, path, work_id);
  for (auto& [agent, env] : done) {
    if (env.ok) {
      if (agent == AgentName::structural) report.outline = std::get<FormOutline>(env.payload);
      if (agent == AgentName::harmonic) report.harmony = std::get<HarmonicMap>(env.payload);
      if (agent == AgentName::stylistic) report.style = std::get<StyleAttribution>(env.payload);
    }
    report.envelopes.push_back(env);
  }
  if (std::none_of(report.envelopes.begin(), report.envelopes.end(), [](const AgentEnvelope& e) { return e.ok; }))
    throw AnalysisError("all agents failed", report.envelopes);
  compute_metrics(score, report, cfg.evaluation);
  return report;
}

// ---------------------------------------------------------------------------
// audit_consistency
// ---------------------------------------------------------------------------

struct AuditOutcome {
  std::vector<ConsistencyVerdict> verdicts;
  std::vector<std::string> notes;  // skipped dimensions
};

inline Verdict structural_verdict(double f1, const EvaluationConfig& cfg = {}) {
  if (f1 >= cfg.consistent_f1) return Verdict::Consistent;
  if (f1 >= cfg.minor_error_f1) return Verdict::MinorError;
  return Verdict::Hallucination;
}

inline AuditOutcome audit_consistency(const AnalysisReport& report, const ReferenceAnnotation& ref,
                                      const EvaluationConfig& cfg = {},
                                      const StyleDatabase& db = default_style_database()) {
  if (report.source.work_id != ref.work_id)
    throw IdentityError("report work id '" + report.source.work_id + "' does not match reference '" + ref.work_id + "'");
  AuditOutcome out;
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  };

  if (!ref.boundaries) {
    out.notes.push_back("structural: reference has no boundaries");
  } else if (!report.outline) {
    out.notes.push_back("structural: structural agent produced no outline");
  } else {
    auto b = boundary_scores(report.outline->boundaries(), *ref.boundaries, cfg.boundary_tolerance,
                             first_measure_of(report));
    Verdict v = structural_verdict(b.f1, cfg);
    std::string note = "boundary F1 " + fmt(b.f1);
    if (v != Verdict::Consistent) note += b.recall < b.precision ? "; structure split missed" : "; spurious section split";
    out.verdicts.push_back({Dimension::structural, v, note});
  }

  if (!ref.global_key) {
    out.notes.push_back("harmonic: reference has no global key");
  } else if (!report.harmony) {
    out.notes.push_back("harmonic: harmonic agent produced no map");
  } else {
    const auto agreement = tonal_agreement(report.harmony->global_key.key, *ref.global_key);
    int spurious = 0, missed = 0;
    if (ref.modulations) {
      auto m = match_positions(modulation_measures(*report.harmony), *ref.modulations, cfg.modulation_tolerance);
      spurious = static_cast<int>(m.unmatched_claimed.size());
      missed = static_cast<int>(m.unmatched_reference.size());
    }
    std::string note = "key " + key_name(report.harmony->global_key.key) + " vs " + key_name(*ref.global_key) + " (" +
                       tonal_agreement_name(agreement) + ")";
    if (ref.modulations)
      note += ", " + std::to_string(spurious) + " spurious / " + std::to_string(missed) + " missed modulations";
    Verdict v;
    if (spurious >= 2) {
      v = Verdict::Hallucination;
      note += "; modulation misdetected";
    } else if (agreement == TonalAgreement::exact && spurious == 0 && missed == 0) {
      v = Verdict::Consistent;
    } else if (agreement != TonalAgreement::disagree) {
      v = Verdict::MinorError;
      note += "; harmony mislabel";
    } else {
      v = Verdict::Hallucination;
      note += "; key contradicts reference";
    }
    out.verdicts.push_back({Dimension::harmonic, v, note});
  }

  if (!ref.style) {
    out.notes.push_back("stylistic: reference has no style label");
  } else if (!report.style) {
    out.notes.push_back("stylistic: stylistic agent produced no attribution");
  } else {
    const std::string& claimed = report.style->top_label;
    const StyleProfile* cp = db.find(claimed);
    const StyleProfile* rp = db.find(*ref.style);
    bool same = claimed == *ref.style || (cp && rp && cp == rp);
    Verdict v = same ? Verdict::Consistent : db.adjacent(claimed, *ref.style) ? Verdict::MinorError : Verdict::Hallucination;
    std::string note = claimed + " vs " + *ref.style;
    if (v != Verdict::Consistent) note += "; stylistic period confusion";
    out.verdicts.push_back({Dimension::stylistic, v, note});
  }
  return out;
}

}  // namespace musagent
