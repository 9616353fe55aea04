#pragma once

#include <cctype>
#include <string>
#include <utility>
#include <vector>

namespace dashgen::test {

struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;  // document order

  const std::string* attr(const std::string& key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

struct XmlScan {
  std::string error;  // empty when well-formed
  std::vector<XmlElement> elements;
};

/// Minimal well-formedness check: balanced tags, one root, quoted unique
/// attributes, and only the five predefined entities or numeric references.
inline XmlScan scan_xml(const std::string& doc) {
  XmlScan out;
  std::vector<std::string> stack;
  int roots = 0;
  auto fail = [&](const std::string& why, std::size_t at) {
    if (out.error.empty()) out.error = why + " at byte " + std::to_string(at);
  };
  auto check_entities = [&](const std::string& s, std::size_t at) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] == '<') fail("raw '<' in text", at);
      if (s[k] != '&') continue;
      const auto semi = s.find(';', k);
      if (semi == std::string::npos) return fail("unterminated entity", at);
      const auto ent = s.substr(k + 1, semi - k - 1);
      if (ent != "amp" && ent != "lt" && ent != "gt" && ent != "quot" && ent != "apos" && (ent.empty() || ent[0] != '#')) {
        fail("unknown entity &" + ent + ";", at);
      }
    }
  };
  std::size_t i = 0;
  if (doc.rfind("<?xml", 0) == 0) i = doc.find("?>") + 2;
  while (i < doc.size() && out.error.empty()) {
    if (doc[i] != '<') {
      const auto next = doc.find('<', i);
      const auto chunk = doc.substr(i, next == std::string::npos ? std::string::npos : next - i);
      if (stack.empty() && chunk.find_first_not_of(" \t\r\n") != std::string::npos) fail("text outside root", i);
      check_entities(chunk, i);
      if (next == std::string::npos) break;
      i = next;
      continue;
    }
    if (doc.compare(i, 2, "</") == 0) {
      const auto end = doc.find('>', i);
      if (end == std::string::npos) return fail("unterminated end tag", i), out;
      const auto name = doc.substr(i + 2, end - i - 2);
      if (stack.empty() || stack.back() != name) fail("mismatched </" + name + ">", i);
      else stack.pop_back();
      i = end + 1;
      continue;
    }
    std::size_t j = i + 1;
    while (j < doc.size() && (std::isalnum(static_cast<unsigned char>(doc[j])) || doc[j] == '-' || doc[j] == ':')) ++j;
    XmlElement el{doc.substr(i + 1, j - i - 1), {}};
    if (el.name.empty()) return fail("bad tag", i), out;
    bool self_closing = false;
    while (j < doc.size()) {
      while (j < doc.size() && std::isspace(static_cast<unsigned char>(doc[j]))) ++j;
      if (doc[j] == '>') {
        ++j;
        break;
      }
      if (doc.compare(j, 2, "/>") == 0) {
        self_closing = true;
        j += 2;
        break;
      }
      const auto eq = doc.find('=', j);
      if (eq == std::string::npos || doc[eq + 1] != '"') return fail("unquoted attribute", j), out;
      const auto close = doc.find('"', eq + 2);
      const auto key = doc.substr(j, eq - j);
      const auto value = doc.substr(eq + 2, close - eq - 2);
      check_entities(value, j);
      if (el.attr(key)) fail("duplicate attribute " + key, j);
      el.attrs.emplace_back(key, value);
      j = close + 1;
    }
    if (stack.empty() && ++roots > 1) fail("second root element", i);
    if (!self_closing) stack.push_back(el.name);
    out.elements.push_back(std::move(el));
    i = j;
  }
  if (out.error.empty() && !stack.empty()) out.error = "unclosed <" + stack.back() + ">";
  if (out.error.empty() && roots != 1) out.error = "no root element";
  return out;
}

}  // namespace dashgen::test
