#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "musagent/errors.hpp"
#include "musagent/xml.hpp"

// Reader for the compressed MusicXML container (.mxl), a zip archive whose
// META-INF/container.xml names the score document.

namespace musagent::container {

inline constexpr std::size_t kMaxEntryBytes = 256u << 20;

struct Entry {
  std::string name;
  std::uint16_t method = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t size = 0;
  std::uint32_t local_offset = 0;
};

inline bool is_zip(std::string_view bytes) { return bytes.size() >= 4 && bytes.substr(0, 4) == "PK\x03\x04"; }

namespace detail {

inline std::uint16_t u16(std::string_view b, std::size_t at) {
  if (at + 2 > b.size()) throw ParseError("truncated zip container");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) | (static_cast<unsigned char>(b[at + 1]) << 8));
}

inline std::uint32_t u32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(u16(b, at)) | (static_cast<std::uint32_t>(u16(b, at + 2)) << 16);
}

}  // namespace detail

inline std::vector<Entry> list_entries(std::string_view zip) {
  using detail::u16;
  using detail::u32;
  if (zip.size() < 22) throw ParseError("truncated zip container");
  // End-of-central-directory record, searched backwards past any comment.
  std::size_t eocd = std::string_view::npos;
  std::size_t lowest = zip.size() > 22 + 0xFFFF ? zip.size() - 22 - 0xFFFF : 0;
  for (std::size_t i = zip.size() - 22 + 1; i-- > lowest;) {
    if (u32(zip, i) == 0x06054b50u) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw ParseError("zip container has no central directory");
  std::size_t count = u16(zip, eocd + 10);
  std::size_t pos = u32(zip, eocd + 16);
  std::vector<Entry> entries;
  for (std::size_t n = 0; n < count; ++n) {
    if (u32(zip, pos) != 0x02014b50u) throw ParseError("corrupt zip central directory");
    Entry e;
    e.method = u16(zip, pos + 10);
    e.compressed_size = u32(zip, pos + 20);
    e.size = u32(zip, pos + 24);
    std::size_t name_len = u16(zip, pos + 28);
    std::size_t extra_len = u16(zip, pos + 30);
    std::size_t comment_len = u16(zip, pos + 32);
    e.local_offset = u32(zip, pos + 42);
    if (pos + 46 + name_len > zip.size()) throw ParseError("truncated zip central directory");
    e.name = std::string(zip.substr(pos + 46, name_len));
    entries.push_back(std::move(e));
    pos += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

inline std::string read_entry(std::string_view zip, const Entry& e) {
  using detail::u16;
  using detail::u32;
  std::size_t at = e.local_offset;
  if (u32(zip, at) != 0x04034b50u) throw ParseError("corrupt zip local header for " + e.name);
  std::size_t data = at + 30 + u16(zip, at + 26) + u16(zip, at + 28);
  if (data + e.compressed_size > zip.size()) throw ParseError("truncated zip entry " + e.name);
  if (e.size > kMaxEntryBytes) throw ParseError("zip entry too large: " + e.name);
  std::string_view payload = zip.substr(data, e.compressed_size);
  if (e.method == 0) return std::string(payload);
  if (e.method != 8) throw UnsupportedFormatError("zip compression method " + std::to_string(e.method));

  std::string out(e.size, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error("inflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(payload.data()));
  zs.avail_in = static_cast<uInt>(payload.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw ParseError("corrupt deflate stream in " + e.name);
  out.resize(produced);
  return out;
}

// Returns the score document of an .mxl archive.
inline std::string unwrap_musicxml(std::string_view zip) {
  auto entries = list_entries(zip);
  std::optional<std::string> root_path;
  for (const auto& e : entries) {
    if (e.name == "META-INF/container.xml") {
      xml::Node doc = xml::parse(read_entry(zip, e));
      if (const auto* rootfiles = doc.child("rootfiles"))
        for (const auto* rf : rootfiles->children_named("rootfile")) {
          std::string mt = rf->attr("media-type");
          if (mt.empty() || mt == "application/vnd.recordare.musicxml+xml") {
            root_path = rf->attr("full-path");
            break;
          }
        }
    }
  }
  for (const auto& e : entries) {
    if (root_path ? e.name == *root_path
                  : (e.name.rfind("META-INF/", 0) != 0 &&
                     (e.name.ends_with(".xml") || e.name.ends_with(".musicxml"))))
      return read_entry(zip, e);
  }
  throw ParseError("zip container holds no MusicXML score");
}

}  // namespace musagent::container
