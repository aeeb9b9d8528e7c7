#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "musagent/errors.hpp"
#include "musagent/harmonic.hpp"
#include "musagent/structural.hpp"
#include "musagent/stylistic.hpp"

namespace musagent {

inline constexpr int kReportVersion = 1;

enum class AgentName { structural, harmonic, stylistic };

inline std::string agent_name(AgentName a) {
  switch (a) {
    case AgentName::structural: return "structural";
    case AgentName::harmonic: return "harmonic";
    case AgentName::stylistic: return "stylistic";
  }
  return "";
}

inline AgentName parse_agent_name(const std::string& s) {
  for (auto a : {AgentName::structural, AgentName::harmonic, AgentName::stylistic})
    if (agent_name(a) == s) return a;
  throw SchemaError("agent", "unknown agent '" + s + "'");
}

enum class Dimension { structural, harmonic, stylistic };

inline std::string dimension_name(Dimension d) { return agent_name(static_cast<AgentName>(d)); }
inline Dimension parse_dimension(const std::string& s) { return static_cast<Dimension>(parse_agent_name(s)); }

enum class Verdict { Consistent, MinorError, Hallucination };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "Consistent";
    case Verdict::MinorError: return "MinorError";
    case Verdict::Hallucination: return "Hallucination";
  }
  return "";
}

inline Verdict parse_verdict(const std::string& s) {
  for (auto v : {Verdict::Consistent, Verdict::MinorError, Verdict::Hallucination})
    if (verdict_name(v) == s) return v;
  throw SchemaError("verdict", "unknown verdict '" + s + "'");
}

struct ConsistencyVerdict {
  Dimension dimension = Dimension::structural;
  Verdict verdict = Verdict::Consistent;
  std::string note;
  friend bool operator==(const ConsistencyVerdict&, const ConsistencyVerdict&) = default;
};

using AgentPayload = std::variant<std::string, FormOutline, HarmonicMap, StyleAttribution>;  // string = error

struct AgentEnvelope {
  AgentName agent = AgentName::structural;
  bool ok = false;
  AgentPayload payload;
  std::int64_t duration_ms = 0;  // wall time; not serialized
  std::string config_digest;

  const std::string* error() const { return std::get_if<std::string>(&payload); }

  // duration_ms is deliberately ignored.
  friend bool operator==(const AgentEnvelope& a, const AgentEnvelope& b) {
    return a.agent == b.agent && a.ok == b.ok && a.payload == b.payload && a.config_digest == b.config_digest;
  }
};

struct SourceInfo {
  std::string path;
  std::string work_id;
  std::string format;
  std::string title;
  std::string composer;
  std::string score_digest;
  int measures = 0;
  int parts = 0;
  Beat total_beats{0};
  friend bool operator==(const SourceInfo&, const SourceInfo&) = default;
};

struct AnalysisReport {
  int version = kReportVersion;
  SourceInfo source;
  std::optional<FormOutline> outline;
  std::optional<HarmonicMap> harmony;
  std::optional<StyleAttribution> style;
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> metric_notes;  // why a metric is absent
  std::vector<ConsistencyVerdict> verdicts;
  std::vector<std::string> verdict_notes;  // skipped dimensions
  std::vector<AgentEnvelope> envelopes;
  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;

  const AgentEnvelope* envelope(AgentName a) const {
    for (const auto& e : envelopes)
      if (e.agent == a) return &e;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace report_json {

using nlohmann::json;

inline const json& at(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(path + "." + key, "missing");
  return j[key];
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw SchemaError(path + "." + key, "wrong type");
  }
}

inline Beat get_beat(const json& j, const std::string& key, const std::string& path) {
  try {
    return parse_beat(get<std::string>(j, key, path));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path + "." + key, e.what());
  }
}

inline json key_json(const Key& k) { return key_name(k); }

inline Key key_from(const json& j, const std::string& key, const std::string& path) {
  try {
    return parse_key_name(get<std::string>(j, key, path));
  } catch (const SchemaError& e) {
    throw SchemaError(path + "." + key, e.what());
  }
}

inline json estimate_json(const KeyEstimate& e) {
  return {{"key", key_json(e.key)},
          {"correlation", e.correlation},
          {"runner_up", {{"key", key_json(e.runner_up.key)}, {"correlation", e.runner_up.correlation}}}};
}

inline KeyEstimate estimate_from(const json& j, const std::string& path) {
  KeyEstimate e;
  e.key = key_from(j, "key", path);
  e.correlation = get<double>(j, "correlation", path);
  const json& r = at(j, "runner_up", path);
  e.runner_up.key = key_from(r, "key", path + ".runner_up");
  e.runner_up.correlation = get<double>(r, "correlation", path + ".runner_up");
  return e;
}

inline json outline_json(const FormOutline& o) {
  json segs = json::array();
  for (const auto& s : o.segments)
    segs.push_back({{"start_measure", s.start_measure},
                    {"end_measure", s.end_measure},
                    {"letter", s.letter},
                    {"role", role_name(s.role)},
                    {"confidence", s.confidence}});
  return {{"form_string", o.form_string}, {"segments", segs}};
}

inline FormOutline outline_from(const json& j, const std::string& path) {
  FormOutline o;
  o.form_string = get<std::string>(j, "form_string", path);
  const json& segs = at(j, "segments", path);
  if (!segs.is_array()) throw SchemaError(path + ".segments", "expected an array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string p = path + ".segments[" + std::to_string(i) + "]";
    Segment s;
    s.start_measure = get<int>(segs[i], "start_measure", p);
    s.end_measure = get<int>(segs[i], "end_measure", p);
    s.letter = get<std::string>(segs[i], "letter", p);
    try {
      s.role = parse_role(get<std::string>(segs[i], "role", p));
    } catch (const SchemaError& e) {
      throw SchemaError(p + ".role", e.what());
    }
    s.confidence = get<double>(segs[i], "confidence", p);
    if (s.end_measure < s.start_measure) throw SchemaError(p, "end_measure before start_measure");
    o.segments.push_back(std::move(s));
  }
  return o;
}

inline json harmony_json(const HarmonicMap& h) {
  json j;
  j["global_key"] = estimate_json(h.global_key);
  j["trajectory"] = json::array();
  for (const auto& r : h.trajectory)
    j["trajectory"].push_back({{"from", to_string(r.from)},
                               {"to", to_string(r.to)},
                               {"start_measure", r.start_measure},
                               {"estimate", estimate_json(r.estimate)}});
  j["modulations"] = json::array();
  for (const auto& m : h.modulations)
    j["modulations"].push_back(
        {{"beat", to_string(m.beat)}, {"measure", m.measure}, {"from", key_json(m.from)}, {"to", key_json(m.to)}});
  j["chords"] = json::array();
  for (const auto& c : h.chords)
    j["chords"].push_back({{"root", c.root},
                           {"quality", quality_name(c.quality)},
                           {"from", to_string(c.from)},
                           {"to", to_string(c.to)},
                           {"score", c.score}});
  j["numerals"] = json::array();
  for (const auto& n : h.numerals) {
    json nj = {{"numeral", n.numeral},
               {"degree", n.degree},
               {"quality", quality_name(n.quality)},
               {"chromatic", n.chromatic},
               {"key", key_json(n.key)},
               {"from", to_string(n.from)},
               {"to", to_string(n.to)}};
    if (n.applied_of) nj["applied_of"] = *n.applied_of;
    j["numerals"].push_back(std::move(nj));
  }
  if (h.coherence) j["coherence"] = *h.coherence;
  j["unclassified_slices"] = h.unclassified_slices;
  return j;
}

inline const json& array_at(const json& j, const std::string& key, const std::string& path) {
  const json& a = at(j, key, path);
  if (!a.is_array()) throw SchemaError(path + "." + key, "expected an array");
  return a;
}

inline Quality quality_from(const json& j, const std::string& path) {
  try {
    return parse_quality(get<std::string>(j, "quality", path));
  } catch (const SchemaError& e) {
    throw SchemaError(path + ".quality", e.what());
  }
}

inline HarmonicMap harmony_from(const json& j, const std::string& path) {
  HarmonicMap h;
  h.global_key = estimate_from(at(j, "global_key", path), path + ".global_key");
  const json& traj = array_at(j, "trajectory", path);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::string p = path + ".trajectory[" + std::to_string(i) + "]";
    h.trajectory.push_back({get_beat(traj[i], "from", p), get_beat(traj[i], "to", p),
                            get<int>(traj[i], "start_measure", p), estimate_from(at(traj[i], "estimate", p), p + ".estimate")});
  }
  const json& mods = array_at(j, "modulations", path);
  for (std::size_t i = 0; i < mods.size(); ++i) {
    const std::string p = path + ".modulations[" + std::to_string(i) + "]";
    h.modulations.push_back({get_beat(mods[i], "beat", p), get<int>(mods[i], "measure", p), key_from(mods[i], "from", p),
                             key_from(mods[i], "to", p)});
  }
  const json& chords = array_at(j, "chords", path);
  for (std::size_t i = 0; i < chords.size(); ++i) {
    const std::string p = path + ".chords[" + std::to_string(i) + "]";
    h.chords.push_back({get<int>(chords[i], "root", p), quality_from(chords[i], p), get_beat(chords[i], "from", p),
                        get_beat(chords[i], "to", p), get<double>(chords[i], "score", p)});
  }
  const json& nums = array_at(j, "numerals", path);
  for (std::size_t i = 0; i < nums.size(); ++i) {
    const std::string p = path + ".numerals[" + std::to_string(i) + "]";
    RomanNumeral n;
    n.numeral = get<std::string>(nums[i], "numeral", p);
    n.degree = get<int>(nums[i], "degree", p);
    n.quality = quality_from(nums[i], p);
    n.chromatic = get<bool>(nums[i], "chromatic", p);
    n.key = key_from(nums[i], "key", p);
    n.from = get_beat(nums[i], "from", p);
    n.to = get_beat(nums[i], "to", p);
    if (nums[i].contains("applied_of")) n.applied_of = get<int>(nums[i], "applied_of", p);
    h.numerals.push_back(std::move(n));
  }
  if (j.contains("coherence")) h.coherence = get<double>(j, "coherence", path);
  h.unclassified_slices = get<int>(j, "unclassified_slices", path);
  return h;
}

inline json features_json(const StyleFeatureVector& f) {
  json j = json::object();
  for (const auto& [name, field] : style_fields()) j[name] = f.*field;
  return j;
}

inline json style_json(const StyleAttribution& s) {
  json dist = json::array();
  for (const auto& [label, p] : s.distribution) dist.push_back({{"label", label}, {"probability", p}});
  return {{"distribution", dist},
          {"top_label", s.top_label},
          {"instrumentation_notes", s.instrumentation_notes},
          {"ornamentation_notes", s.ornamentation_notes},
          {"degenerate", s.degenerate},
          {"features", features_json(s.features)}};
}

inline StyleAttribution style_from(const json& j, const std::string& path) {
  StyleAttribution s;
  const json& dist = array_at(j, "distribution", path);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const std::string p = path + ".distribution[" + std::to_string(i) + "]";
    s.distribution.emplace_back(get<std::string>(dist[i], "label", p), get<double>(dist[i], "probability", p));
  }
  s.top_label = get<std::string>(j, "top_label", path);
  s.instrumentation_notes = get<std::string>(j, "instrumentation_notes", path);
  s.ornamentation_notes = get<std::string>(j, "ornamentation_notes", path);
  s.degenerate = get<bool>(j, "degenerate", path);
  const json& f = at(j, "features", path);
  for (const auto& [name, field] : style_fields()) s.features.*field = get<double>(f, name, path + ".features");
  return s;
}

}  // namespace report_json

inline nlohmann::json to_json(const AnalysisReport& r) {
  using namespace report_json;
  json j;
  j["format"] = "musagent-report";
  j["version"] = r.version;
  j["source"] = {{"path", r.source.path},
                 {"work_id", r.source.work_id},
                 {"format", r.source.format},
                 {"title", r.source.title},
                 {"composer", r.source.composer},
                 {"score_digest", r.source.score_digest},
                 {"measures", r.source.measures},
                 {"parts", r.source.parts},
                 {"total_beats", to_string(r.source.total_beats)}};
  j["outline"] = r.outline ? outline_json(*r.outline) : json(nullptr);
  j["harmony"] = r.harmony ? harmony_json(*r.harmony) : json(nullptr);
  j["style"] = r.style ? style_json(*r.style) : json(nullptr);
  j["metrics"] = json::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  j["metric_notes"] = json::object();
  for (const auto& [k, v] : r.metric_notes) j["metric_notes"][k] = v;
  j["verdicts"] = json::array();
  for (const auto& v : r.verdicts)
    j["verdicts"].push_back(
        {{"dimension", dimension_name(v.dimension)}, {"verdict", verdict_name(v.verdict)}, {"note", v.note}});
  j["verdict_notes"] = r.verdict_notes;
  j["envelopes"] = json::array();
  for (const auto& e : r.envelopes) {
    json ej = {{"agent", agent_name(e.agent)}, {"status", e.ok ? "ok" : "failed"}, {"config_digest", e.config_digest}};
    if (e.error()) ej["error"] = *e.error();
    j["envelopes"].push_back(std::move(ej));
  }
  return j;
}

// Envelope payloads are not duplicated in the document; they are restored
// from the report sections they correspond to.
inline AnalysisReport report_from_json(const nlohmann::json& j) {
  using namespace report_json;
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  if (get<std::string>(j, "format", "$") != "musagent-report") throw SchemaError("$.format", "not a musagent report");
  AnalysisReport r;
  r.version = get<int>(j, "version", "$");
  if (r.version != kReportVersion) throw SchemaError("$.version", "unsupported report version " + std::to_string(r.version));
  const json& src = at(j, "source", "$");
  r.source.path = get<std::string>(src, "path", "$.source");
  r.source.work_id = get<std::string>(src, "work_id", "$.source");
  r.source.format = get<std::string>(src, "format", "$.source");
  r.source.title = get<std::string>(src, "title", "$.source");
  r.source.composer = get<std::string>(src, "composer", "$.source");
  r.source.score_digest = get<std::string>(src, "score_digest", "$.source");
  r.source.measures = get<int>(src, "measures", "$.source");
  r.source.parts = get<int>(src, "parts", "$.source");
  r.source.total_beats = get_beat(src, "total_beats", "$.source");
  if (!at(j, "outline", "$").is_null()) r.outline = outline_from(j["outline"], "$.outline");
  if (!at(j, "harmony", "$").is_null()) r.harmony = harmony_from(j["harmony"], "$.harmony");
  if (!at(j, "style", "$").is_null()) r.style = style_from(j["style"], "$.style");
  for (const auto& [k, v] : at(j, "metrics", "$").items()) {
    if (!v.is_number()) throw SchemaError("$.metrics." + k, "expected a number");
    r.metrics[k] = v.get<double>();
  }
  for (const auto& [k, v] : at(j, "metric_notes", "$").items()) {
    if (!v.is_string()) throw SchemaError("$.metric_notes." + k, "expected a string");
    r.metric_notes[k] = v.get<std::string>();
  }
  const json& verdicts = array_at(j, "verdicts", "$");
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const std::string p = "$.verdicts[" + std::to_string(i) + "]";
    try {
      r.verdicts.push_back({parse_dimension(get<std::string>(verdicts[i], "dimension", p)),
                            parse_verdict(get<std::string>(verdicts[i], "verdict", p)),
                            get<std::string>(verdicts[i], "note", p)});
    } catch (const SchemaError& e) {
      if (e.path().rfind("$", 0) == 0) throw;
      throw SchemaError(p, e.what());
    }
  }
  r.verdict_notes = get<std::vector<std::string>>(j, "verdict_notes", "$");
  const json& envs = array_at(j, "envelopes", "$");
  for (std::size_t i = 0; i < envs.size(); ++i) {
    const std::string p = "$.envelopes[" + std::to_string(i) + "]";
    AgentEnvelope e;
    try {
      e.agent = parse_agent_name(get<std::string>(envs[i], "agent", p));
    } catch (const SchemaError& err) {
      if (err.path().rfind("$", 0) == 0) throw;
      throw SchemaError(p + ".agent", err.what());
    }
    std::string status = get<std::string>(envs[i], "status", p);
    if (status != "ok" && status != "failed") throw SchemaError(p + ".status", "expected ok or failed");
    e.ok = status == "ok";
    e.config_digest = get<std::string>(envs[i], "config_digest", p);
    if (!e.ok) {
      e.payload = get<std::string>(envs[i], "error", p);
    } else if (e.agent == AgentName::structural && r.outline) {
      e.payload = *r.outline;
    } else if (e.agent == AgentName::harmonic && r.harmony) {
      e.payload = *r.harmony;
    } else if (e.agent == AgentName::stylistic && r.style) {
      e.payload = *r.style;
    } else {
      throw SchemaError(p, "ok envelope without the matching report section");
    }
    r.envelopes.push_back(std::move(e));
  }
  return r;
}

inline std::string serialize_report(const AnalysisReport& r) { return to_json(r).dump(2) + "\n"; }

inline AnalysisReport parse_report(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  return report_from_json(j);
}

}  // namespace musagent
