#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "musagent/errors.hpp"
#include "musagent/harmonic.hpp"

namespace musagent {

// Machine-readable stand-in for an expert analysis of one work. Every field
// but work_id may be absent; audits skip the dimensions it lacks.
struct ReferenceAnnotation {
  std::string work_id;
  std::optional<std::vector<int>> boundaries;  // section-start measures
  std::optional<std::string> letters;
  std::optional<Key> global_key;
  std::optional<std::vector<int>> modulations;  // measures
  std::optional<std::string> style;
  friend bool operator==(const ReferenceAnnotation&, const ReferenceAnnotation&) = default;
};

namespace reference_detail {

inline std::vector<int> int_list(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(j[i].get<int>());
    if (out.back() < 0) throw SchemaError(path + "[" + std::to_string(i) + "]", "must be >= 0");
    if (i > 0 && out[i] <= out[i - 1]) throw SchemaError(path, "must be strictly increasing");
  }
  return out;
}

inline std::string text(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

}  // namespace reference_detail

inline ReferenceAnnotation reference_from_json(const nlohmann::json& j) {
  using namespace reference_detail;
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  ReferenceAnnotation r;
  if (!j.contains("work_id")) throw SchemaError("$.work_id", "missing");
  r.work_id = text(j["work_id"], "$.work_id");
  if (r.work_id.empty()) throw SchemaError("$.work_id", "must not be empty");
  if (j.contains("boundaries")) r.boundaries = int_list(j["boundaries"], "$.boundaries");
  if (j.contains("letters")) r.letters = text(j["letters"], "$.letters");
  if (j.contains("global_key")) {
    try {
      r.global_key = parse_key_name(text(j["global_key"], "$.global_key"));
    } catch (const SchemaError& e) {
      throw SchemaError("$.global_key", e.what());
    }
  }
  if (j.contains("modulations")) r.modulations = int_list(j["modulations"], "$.modulations");
  if (j.contains("style")) r.style = text(j["style"], "$.style");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (k != "work_id" && k != "boundaries" && k != "letters" && k != "global_key" && k != "modulations" &&
        k != "style" && k != "notes")
      throw SchemaError("$." + k, "unknown field");
  }
  return r;
}

inline nlohmann::json to_json(const ReferenceAnnotation& r) {
  nlohmann::json j;
  j["work_id"] = r.work_id;
  if (r.boundaries) j["boundaries"] = *r.boundaries;
  if (r.letters) j["letters"] = *r.letters;
  if (r.global_key) j["global_key"] = key_name(*r.global_key);
  if (r.modulations) j["modulations"] = *r.modulations;
  if (r.style) j["style"] = *r.style;
  return j;
}

}  // namespace musagent
