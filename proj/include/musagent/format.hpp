#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "musagent/container.hpp"
#include "musagent/errors.hpp"
#include "musagent/score.hpp"
#include "musagent/xml.hpp"

namespace musagent {

enum class SourceFormat { musicxml, midi, kern };

inline std::string format_name(SourceFormat f) {
  switch (f) {
    case SourceFormat::musicxml: return "musicxml";
    case SourceFormat::midi: return "midi";
    case SourceFormat::kern: return "kern";
  }
  return "unknown";
}

inline SourceFormat parse_format_name(std::string_view name) {
  if (name == "musicxml" || name == "xml" || name == "mxl") return SourceFormat::musicxml;
  if (name == "midi" || name == "mid" || name == "smf") return SourceFormat::midi;
  if (name == "kern" || name == "krn" || name == "humdrum") return SourceFormat::kern;
  throw UnsupportedFormatError("unknown format name: " + std::string(name));
}

struct ParseWarning {
  std::string location;
  std::string message;
};

struct ParseDiagnostics {
  std::vector<ParseWarning> warnings;
  std::map<std::string, int> skipped_elements;

  void warn(std::string location, std::string message) {
    warnings.push_back({std::move(location), std::move(message)});
  }
  void skip(const std::string& kind) { ++skipped_elements[kind]; }
};

struct ParsedScore {
  Score score;
  ParseDiagnostics diagnostics;
};

inline bool has_kern_spine_line(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    if (line.substr(0, 6) == "**kern") return true;
    // Exclusive-interpretation line whose kern spine is not the first column.
    if (line.substr(0, 2) == "**" && line.find("\t**kern") != std::string_view::npos) return true;
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return false;
}

inline SourceFormat detect_format(std::string_view bytes) {
  if (bytes.empty()) throw UnsupportedFormatError("empty input");
  if (bytes.size() >= 4 && bytes.substr(0, 4) == "MThd") return SourceFormat::midi;
  if (container::is_zip(bytes)) {
    std::string inner;
    try {
      inner = container::unwrap_musicxml(bytes);
    } catch (const Error& e) {
      throw UnsupportedFormatError(std::string("zip archive is not a MusicXML container: ") + e.what());
    }
    std::string root = xml::sniff_root(inner);
    if (root == "score-partwise" || root == "score-timewise") return SourceFormat::musicxml;
    throw UnsupportedFormatError("zip container root element is '" + root + "'");
  }
  std::string root = xml::sniff_root(bytes);
  if (root == "score-partwise" || root == "score-timewise") return SourceFormat::musicxml;
  if (has_kern_spine_line(bytes)) return SourceFormat::kern;
  if (!root.empty()) throw UnsupportedFormatError("XML root '" + root + "' is not a MusicXML score");
  throw UnsupportedFormatError("unrecognized content");
}

}  // namespace musagent
