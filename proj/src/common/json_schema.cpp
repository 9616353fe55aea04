#include "dashgen/common/json_schema.hpp"

#include <cmath>
#include <regex>

namespace dashgen::schema {

namespace {

using nlohmann::json;

bool matches_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
  }
  return false;
}

std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void run(const json& v, const json& s, const std::string& path, std::vector<Violation>& out) {
    if (s.is_boolean()) {
      if (!s.get<bool>()) out.push_back({"schema", path, "value not permitted"});
      return;
    }
    if (!s.is_object()) return;

    if (auto it = s.find("$ref"); it != s.end()) {
      run(v, resolve(it->get<std::string>()), path, out);
      return;
    }

    if (auto it = s.find("type"); it != s.end()) {
      bool ok = false;
      if (it->is_string()) {
        ok = matches_type(v, it->get<std::string>());
      } else {
        for (const auto& t : *it) ok = ok || matches_type(v, t.get<std::string>());
      }
      if (!ok) {
        out.push_back({"schema", path, "expected type " + it->dump()});
        return;
      }
    }
    if (auto it = s.find("enum"); it != s.end()) {
      bool found = false;
      for (const auto& e : *it) found = found || e == v;
      if (!found) out.push_back({"schema", path, "value " + v.dump() + " not in " + it->dump()});
    }
    if (auto it = s.find("const"); it != s.end() && *it != v) {
      out.push_back({"schema", path, "expected constant " + it->dump()});
    }

    if (v.is_number()) numeric(v.get<double>(), s, path, out);
    if (v.is_string()) string(v.get<std::string>(), s, path, out);
    if (v.is_array()) array(v, s, path, out);
    if (v.is_object()) object(v, s, path, out);

    if (auto it = s.find("anyOf"); it != s.end()) {
      if (count_valid(v, *it, path) == 0) closest_branch(v, *it, path, "anyOf", out);
    }
    if (auto it = s.find("oneOf"); it != s.end()) {
      const auto n = count_valid(v, *it, path);
      if (n == 0) {
        closest_branch(v, *it, path, "oneOf", out);
      } else if (n > 1) {
        out.push_back({"schema", path,
                       "value matches " + std::to_string(n) + " branches of oneOf, expected 1"});
      }
    }
  }

 private:
  const json& resolve(const std::string& ref) {
    if (ref.rfind("#/", 0) != 0) {
      throw std::invalid_argument("only local $ref supported: " + ref);
    }
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  // Reports the failures of the branch that came closest to matching, so a
  // deep error surfaces at its own path rather than at the enclosing union.
  void closest_branch(const json& v, const json& branches, const std::string& path,
                      const char* keyword, std::vector<Violation>& out) {
    std::vector<Violation> best;
    bool have = false;
    for (const auto& b : branches) {
      std::vector<Violation> scratch;
      run(v, b, path, scratch);
      if (!have || scratch.size() < best.size()) {
        best = std::move(scratch);
        have = true;
      }
    }
    if (best.empty()) best.push_back({"schema", path, std::string("value matches no branch of ") + keyword});
    out.insert(out.end(), best.begin(), best.end());
  }

  std::size_t count_valid(const json& v, const json& branches, const std::string& path) {
    std::size_t n = 0;
    for (const auto& b : branches) {
      std::vector<Violation> scratch;
      run(v, b, path, scratch);
      if (scratch.empty()) ++n;
    }
    return n;
  }

  static void numeric(double d, const json& s, const std::string& path, std::vector<Violation>& out) {
    if (!std::isfinite(d)) out.push_back({"schema", path, "number must be finite"});
    if (auto it = s.find("minimum"); it != s.end() && d < it->get<double>()) {
      out.push_back({"schema", path, "below minimum " + it->dump()});
    }
    if (auto it = s.find("maximum"); it != s.end() && d > it->get<double>()) {
      out.push_back({"schema", path, "above maximum " + it->dump()});
    }
    if (auto it = s.find("exclusiveMinimum"); it != s.end() && d <= it->get<double>()) {
      out.push_back({"schema", path, "must be greater than " + it->dump()});
    }
    if (auto it = s.find("exclusiveMaximum"); it != s.end() && d >= it->get<double>()) {
      out.push_back({"schema", path, "must be less than " + it->dump()});
    }
  }

  void string(const std::string& str, const json& s, const std::string& path,
              std::vector<Violation>& out) {
    const auto len = utf8_length(str);
    if (auto it = s.find("minLength"); it != s.end() && len < it->get<std::size_t>()) {
      out.push_back({"schema", path, "string shorter than " + it->dump()});
    }
    if (auto it = s.find("maxLength"); it != s.end() && len > it->get<std::size_t>()) {
      out.push_back({"schema", path, "string longer than " + it->dump()});
    }
    if (auto it = s.find("pattern"); it != s.end()) {
      const std::regex re(it->get<std::string>(), std::regex::ECMAScript);
      if (!std::regex_search(str, re)) {
        out.push_back({"schema", path, "string does not match pattern " + it->dump()});
      }
    }
  }

  void array(const json& v, const json& s, const std::string& path, std::vector<Violation>& out) {
    if (auto it = s.find("minItems"); it != s.end() && v.size() < it->get<std::size_t>()) {
      out.push_back({"schema", path, "fewer than " + it->dump() + " items"});
    }
    if (auto it = s.find("maxItems"); it != s.end() && v.size() > it->get<std::size_t>()) {
      out.push_back({"schema", path, "more than " + it->dump() + " items"});
    }
    if (auto it = s.find("items"); it != s.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        run(v[i], *it, path + "[" + std::to_string(i) + "]", out);
      }
    }
  }

  void object(const json& v, const json& s, const std::string& path, std::vector<Violation>& out) {
    if (auto it = s.find("required"); it != s.end()) {
      for (const auto& key : *it) {
        if (!v.contains(key.get<std::string>())) {
          out.push_back({"schema", path, "missing required member '" + key.get<std::string>() + "'"});
        }
      }
    }
    const json* props = nullptr;
    if (auto it = s.find("properties"); it != s.end()) props = &*it;
    const json* additional = nullptr;
    if (auto it = s.find("additionalProperties"); it != s.end()) additional = &*it;

    for (const auto& [key, value] : v.items()) {
      const std::string child = path.empty() ? key : path + "." + key;
      if (props != nullptr && props->contains(key)) {
        run(value, (*props)[key], child, out);
      } else if (additional != nullptr) {
        if (additional->is_boolean() && !additional->get<bool>()) {
          out.push_back({"schema", child, "unexpected member"});
        } else {
          run(value, *additional, child, out);
        }
      }
    }
  }

  const json& root_;
};

}  // namespace

std::vector<Violation> validate(const nlohmann::json& instance, const nlohmann::json& schema,
                                const std::string& root_path) {
  std::vector<Violation> out;
  Validator(schema).run(instance, schema, root_path, out);
  return out;
}

}  // namespace dashgen::schema
