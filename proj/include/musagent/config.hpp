#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "musagent/errors.hpp"
#include "musagent/harmonic.hpp"
#include "musagent/metrics.hpp"
#include "musagent/report.hpp"
#include "musagent/structural.hpp"
#include "musagent/stylistic.hpp"

namespace musagent {

struct EvaluationConfig {
  int boundary_tolerance = 1;     // measures
  int modulation_tolerance = 2;   // measures
  double consistent_f1 = 0.9;
  double minor_error_f1 = 0.6;
  EntropyConfig entropy;
  MotifConfig motif;
};

struct AnalysisConfig {
  std::vector<AgentName> agents{AgentName::structural, AgentName::harmonic, AgentName::stylistic};
  // Overrides of the default dependency rule (stylistic needs both others).
  std::map<AgentName, std::set<AgentName>> depends_on;
  StructuralConfig structural;
  HarmonicConfig harmonic;
  StylisticConfig stylistic;
  EvaluationConfig evaluation;
  // Test hook: agents forced to fail.
  std::set<AgentName> fail_agents;
};

inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const StructuralConfig& c) {
  return {{"kernel_half_width", c.kernel_half_width},
          {"threshold", c.threshold},
          {"letter_match", c.letter_match},
          {"pc_weight", c.pc_weight},
          {"density_weight", c.density_weight},
          {"voice_weight", c.voice_weight},
          {"assign_roles", c.assign_roles},
          {"intro_density_ratio", c.intro_density_ratio},
          {"intro_max_measures", c.intro_max_measures},
          {"coda_length_ratio", c.coda_length_ratio}};
}

inline nlohmann::json to_json(const HarmonicConfig& c) {
  return {{"window_measures", c.window_measures},
          {"hop", c.hop},
          {"min_dwell", c.min_dwell},
          {"grid", to_string(c.grid)},
          {"chord_floor", c.chord_floor},
          {"profiles", {{"name", c.profiles.name}, {"major", c.profiles.major}, {"minor", c.profiles.minor}}}};
}

inline nlohmann::json to_json(const StylisticConfig& c) { return {{"ornament_threshold", to_string(c.ornament_threshold)}}; }

inline nlohmann::json to_json(const EvaluationConfig& c) {
  return {{"boundary_tolerance", c.boundary_tolerance},
          {"modulation_tolerance", c.modulation_tolerance},
          {"consistent_f1", c.consistent_f1},
          {"minor_error_f1", c.minor_error_f1},
          {"ioi_grid", to_string(c.entropy.grid)},
          {"ioi_cap", to_string(c.entropy.cap)},
          {"motif_min_len", c.motif.min_len},
          {"motif_max_len", c.motif.max_len},
          {"motif_min_occurrences", c.motif.min_occurrences}};
}

inline nlohmann::json to_json(const AnalysisConfig& c) {
  nlohmann::json j;
  j["agents"] = nlohmann::json::array();
  for (auto a : c.agents) j["agents"].push_back(agent_name(a));
  if (!c.depends_on.empty()) {
    j["depends_on"] = nlohmann::json::object();
    for (const auto& [a, deps] : c.depends_on) {
      auto& arr = j["depends_on"][agent_name(a)] = nlohmann::json::array();
      for (auto d : deps) arr.push_back(agent_name(d));
    }
  }
  j["structural"] = to_json(c.structural);
  j["harmonic"] = to_json(c.harmonic);
  j["stylistic"] = to_json(c.stylistic);
  j["evaluation"] = to_json(c.evaluation);
  return j;
}

namespace config_detail {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_, "expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_[key];
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
    else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer();
    else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
    else ok = v.is_string();
    if (!ok) throw SchemaError(path_ + "." + key, "wrong type");
    out = v.get<T>();
  }

  void read_beat(const char* key, Beat& out) {
    std::string s;
    read(key, s);
    if (!j_.contains(key)) return;
    try {
      out = parse_beat(s);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path_ + "." + key, e.what());
    }
  }

  void read_profile(const char* key, std::array<double, 12>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_[key];
    if (!v.is_array() || v.size() != 12) throw SchemaError(path_ + "." + key, "expected 12 numbers");
    for (std::size_t i = 0; i < 12; ++i) {
      if (!v[i].is_number()) throw SchemaError(path_ + "." + key, "expected 12 numbers");
      out[i] = v[i].get<double>();
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_[key] : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      (void)v;
      if (!seen_.count(k)) throw SchemaError(path_ + "." + k, "unknown field");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool cond, const std::string& path, const std::string& msg) {
  if (!cond) throw SchemaError(path, msg);
}

}  // namespace config_detail

// Missing fields keep their defaults; unknown fields are schema errors.
inline AnalysisConfig config_from_json(const nlohmann::json& j) {
  using namespace config_detail;
  AnalysisConfig c;
  Reader root(j, "$");
  if (const json* agents = root.child("agents")) {
    if (!agents->is_array()) throw SchemaError("$.agents", "expected an array");
    c.agents.clear();
    for (std::size_t i = 0; i < agents->size(); ++i) {
      const std::string p = "$.agents[" + std::to_string(i) + "]";
      if (!(*agents)[i].is_string()) throw SchemaError(p, "expected an agent name");
      try {
        c.agents.push_back(parse_agent_name((*agents)[i].get<std::string>()));
      } catch (const SchemaError& e) {
        throw SchemaError(p, e.what());
      }
    }
  }
  if (const json* deps = root.child("depends_on")) {
    if (!deps->is_object()) throw SchemaError("$.depends_on", "expected an object");
    for (const auto& [name, list] : deps->items()) {
      const std::string p = "$.depends_on." + name;
      AgentName a;
      try {
        a = parse_agent_name(name);
      } catch (const SchemaError& e) {
        throw SchemaError(p, e.what());
      }
      if (!list.is_array()) throw SchemaError(p, "expected an array");
      auto& set = c.depends_on[a];
      for (const auto& d : list) {
        if (!d.is_string()) throw SchemaError(p, "expected agent names");
        try {
          set.insert(parse_agent_name(d.get<std::string>()));
        } catch (const SchemaError& e) {
          throw SchemaError(p, e.what());
        }
      }
    }
  }
  if (const json* s = root.child("structural")) {
    Reader r(*s, "$.structural");
    auto& sc = c.structural;
    r.read("kernel_half_width", sc.kernel_half_width);
    r.read("threshold", sc.threshold);
    r.read("letter_match", sc.letter_match);
    r.read("pc_weight", sc.pc_weight);
    r.read("density_weight", sc.density_weight);
    r.read("voice_weight", sc.voice_weight);
    r.read("assign_roles", sc.assign_roles);
    r.read("intro_density_ratio", sc.intro_density_ratio);
    r.read("intro_max_measures", sc.intro_max_measures);
    r.read("coda_length_ratio", sc.coda_length_ratio);
    r.finish();
    require(sc.kernel_half_width >= 1, "$.structural.kernel_half_width", "must be >= 1");
    require(sc.threshold >= 0 && sc.threshold <= 1, "$.structural.threshold", "must be in [0, 1]");
    require(sc.letter_match >= 0 && sc.letter_match <= 1, "$.structural.letter_match", "must be in [0, 1]");
  }
  if (const json* h = root.child("harmonic")) {
    Reader r(*h, "$.harmonic");
    auto& hc = c.harmonic;
    r.read("window_measures", hc.window_measures);
    r.read("hop", hc.hop);
    r.read("min_dwell", hc.min_dwell);
    r.read_beat("grid", hc.grid);
    r.read("chord_floor", hc.chord_floor);
    if (const json* p = r.child("profiles")) {
      Reader pr(*p, "$.harmonic.profiles");
      pr.read("name", hc.profiles.name);
      pr.read_profile("major", hc.profiles.major);
      pr.read_profile("minor", hc.profiles.minor);
      pr.finish();
    }
    r.finish();
    require(hc.window_measures >= 2, "$.harmonic.window_measures", "must be >= 2");
    require(hc.hop >= 1, "$.harmonic.hop", "must be >= 1");
    require(hc.min_dwell >= 1, "$.harmonic.min_dwell", "must be >= 1");
    require(hc.grid > 0, "$.harmonic.grid", "must be positive");
  }
  if (const json* s = root.child("stylistic")) {
    Reader r(*s, "$.stylistic");
    r.read_beat("ornament_threshold", c.stylistic.ornament_threshold);
    r.finish();
  }
  if (const json* e = root.child("evaluation")) {
    Reader r(*e, "$.evaluation");
    auto& ec = c.evaluation;
    r.read("boundary_tolerance", ec.boundary_tolerance);
    r.read("modulation_tolerance", ec.modulation_tolerance);
    r.read("consistent_f1", ec.consistent_f1);
    r.read("minor_error_f1", ec.minor_error_f1);
    r.read_beat("ioi_grid", ec.entropy.grid);
    r.read_beat("ioi_cap", ec.entropy.cap);
    r.read("motif_min_len", ec.motif.min_len);
    r.read("motif_max_len", ec.motif.max_len);
    r.read("motif_min_occurrences", ec.motif.min_occurrences);
    r.finish();
    require(ec.entropy.grid > 0, "$.evaluation.ioi_grid", "must be positive");
    require(ec.motif.min_len >= 1 && ec.motif.max_len >= ec.motif.min_len, "$.evaluation.motif_max_len",
            "bad motif length range");
  }
  root.finish();
  return c;
}

}  // namespace musagent
