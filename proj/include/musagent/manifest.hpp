#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "musagent/errors.hpp"
#include "musagent/format.hpp"

namespace musagent {

// One work of a corpus run. Relative paths resolve against the manifest's
// directory.
struct ManifestEntry {
  std::string path;
  std::string work_id;
  std::string composer;
  std::string title;
  std::optional<std::string> reference;
  std::optional<std::string> style;
  std::optional<SourceFormat> format;
};

struct CorpusManifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

// {"works": [{"path", "work_id", "composer"?, "title"?, "reference"?,
//             "style"?, "format"?}, ...]}
inline CorpusManifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {}) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (k != "works" && k != "notes") throw SchemaError("$." + k, "unknown field");
  }
  if (!j.contains("works") || !j["works"].is_array()) throw SchemaError("$.works", "expected an array");
  CorpusManifest m;
  m.base_dir = std::move(base_dir);
  std::set<std::string> ids;
  const auto& works = j["works"];
  if (works.empty()) throw SchemaError("$.works", "must not be empty");
  for (std::size_t i = 0; i < works.size(); ++i) {
    const std::string p = "$.works[" + std::to_string(i) + "]";
    const auto& w = works[i];
    if (!w.is_object()) throw SchemaError(p, "expected an object");
    ManifestEntry e;
    auto str = [&](const char* key, bool required) -> std::optional<std::string> {
      if (!w.contains(key)) {
        if (required) throw SchemaError(p + "." + key, "missing");
        return std::nullopt;
      }
      if (!w[key].is_string()) throw SchemaError(p + "." + key, "expected a string");
      return w[key].get<std::string>();
    };
    for (const auto& [k, v] : w.items()) {
      (void)v;
      if (k != "path" && k != "work_id" && k != "composer" && k != "title" && k != "reference" && k != "style" &&
          k != "format" && k != "notes")
        throw SchemaError(p + "." + k, "unknown field");
    }
    e.path = *str("path", true);
    e.work_id = *str("work_id", true);
    if (e.work_id.empty()) throw SchemaError(p + ".work_id", "must not be empty");
    if (!ids.insert(e.work_id).second) throw SchemaError(p + ".work_id", "duplicate work id '" + e.work_id + "'");
    e.composer = str("composer", false).value_or("");
    e.title = str("title", false).value_or("");
    e.reference = str("reference", false);
    e.style = str("style", false);
    if (auto f = str("format", false)) {
      try {
        e.format = parse_format_name(*f);
      } catch (const UnsupportedFormatError& err) {
        throw SchemaError(p + ".format", err.what());
      }
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace musagent
