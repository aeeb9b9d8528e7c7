#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "musagent/errors.hpp"
#include "musagent/format.hpp"
#include "musagent/kern.hpp"
#include "musagent/midi.hpp"
#include "musagent/musicxml.hpp"

namespace musagent {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return buf.str();
}

inline ParsedScore parse_score(std::string_view bytes, std::optional<SourceFormat> format = std::nullopt) {
  switch (format ? *format : detect_format(bytes)) {
    case SourceFormat::musicxml: return parse_musicxml(bytes);
    case SourceFormat::midi: return parse_midi(bytes);
    case SourceFormat::kern: return parse_kern(bytes);
  }
  throw UnsupportedFormatError("unknown format");
}

// Reads and parses a score file; the format is sniffed from content unless
// given explicitly.
inline ParsedScore load_score(const std::filesystem::path& path, std::optional<SourceFormat> format = std::nullopt) {
  return parse_score(read_file(path), format);
}

}  // namespace musagent
