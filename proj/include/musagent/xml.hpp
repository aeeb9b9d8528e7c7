#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <expat.h>

#include "musagent/errors.hpp"

namespace musagent::xml {

// Minimal element tree. Text holds the concatenated character data of the
// element itself (not of its descendants).
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;
  std::string text;
  int line = 0;

  const Node* child(std::string_view n) const {
    for (const auto& c : children)
      if (c.name == n) return &c;
    return nullptr;
  }

  std::vector<const Node*> children_named(std::string_view n) const {
    std::vector<const Node*> out;
    for (const auto& c : children)
      if (c.name == n) out.push_back(&c);
    return out;
  }

  std::string attr(std::string_view n, std::string fallback = {}) const {
    for (const auto& [k, v] : attributes)
      if (k == n) return v;
    return fallback;
  }

  bool has_attr(std::string_view n) const {
    for (const auto& a : attributes)
      if (a.first == n) return true;
    return false;
  }

  // Trimmed text of a direct child, or fallback if absent.
  std::string child_text(std::string_view n, std::string fallback = {}) const {
    const Node* c = child(n);
    if (!c) return fallback;
    return trimmed(c->text);
  }

  static std::string trimmed(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
  }
};

namespace detail {

struct BuildState {
  XML_Parser parser = nullptr;
  Node root;
  std::vector<Node*> stack;
  bool have_root = false;
};

inline void on_start(void* data, const XML_Char* name, const XML_Char** atts) {
  auto* st = static_cast<BuildState*>(data);
  Node* node;
  if (st->stack.empty()) {
    node = &st->root;
    st->have_root = true;
  } else {
    st->stack.back()->children.emplace_back();
    node = &st->stack.back()->children.back();
  }
  node->name = name;
  node->line = static_cast<int>(XML_GetCurrentLineNumber(st->parser));
  for (int i = 0; atts[i]; i += 2) node->attributes.emplace_back(atts[i], atts[i + 1]);
  st->stack.push_back(node);
}

inline void on_end(void* data, const XML_Char*) {
  auto* st = static_cast<BuildState*>(data);
  st->stack.pop_back();
}

inline void on_text(void* data, const XML_Char* s, int len) {
  auto* st = static_cast<BuildState*>(data);
  if (!st->stack.empty()) st->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

}  // namespace detail

// Throws ParseError with line/column on malformed XML.
inline Node parse(std::string_view bytes) {
  detail::BuildState st;
  std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate(nullptr), &XML_ParserFree);
  if (!parser) throw Error("cannot allocate XML parser");
  st.parser = parser.get();
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), detail::on_start, detail::on_end);
  XML_SetCharacterDataHandler(parser.get(), detail::on_text);
  if (XML_Parse(parser.get(), bytes.data(), static_cast<int>(bytes.size()), XML_TRUE) == XML_STATUS_ERROR) {
    throw ParseError(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser.get())),
                     static_cast<int>(XML_GetCurrentLineNumber(parser.get())),
                     static_cast<int>(XML_GetCurrentColumnNumber(parser.get())) + 1);
  }
  if (!st.have_root) throw ParseError("XML document has no root element");
  return std::move(st.root);
}

inline std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Root element name without parsing the whole document; skips the XML
// declaration, comments, processing instructions and DOCTYPE.
inline std::string sniff_root(std::string_view s) {
  std::size_t i = 0;
  if (s.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < s.size()) {
    auto lt = s.find('<', i);
    if (lt == std::string_view::npos || lt + 1 >= s.size()) return {};
    for (std::size_t k = i; k < lt; ++k)
      if (s[k] != ' ' && s[k] != '\t' && s[k] != '\r' && s[k] != '\n') return {};
    char c = s[lt + 1];
    if (c == '?') {
      auto e = s.find("?>", lt);
      if (e == std::string_view::npos) return {};
      i = e + 2;
    } else if (s.substr(lt, 4) == "<!--") {
      auto e = s.find("-->", lt);
      if (e == std::string_view::npos) return {};
      i = e + 3;
    } else if (c == '!') {
      // DOCTYPE, possibly with an internal subset in brackets.
      int depth = 0;
      std::size_t k = lt + 2;
      for (; k < s.size(); ++k) {
        if (s[k] == '[') ++depth;
        else if (s[k] == ']') --depth;
        else if (s[k] == '>' && depth <= 0) break;
      }
      if (k >= s.size()) return {};
      i = k + 1;
    } else {
      std::size_t b = lt + 1, e = b;
      while (e < s.size() && s[e] != ' ' && s[e] != '>' && s[e] != '/' && s[e] != '\t' && s[e] != '\r' &&
             s[e] != '\n')
        ++e;
      return std::string(s.substr(b, e - b));
    }
  }
  return {};
}

}  // namespace musagent::xml
