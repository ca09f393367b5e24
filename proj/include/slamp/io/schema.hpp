#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

// Structural JSON Schema check covering the keywords our published schemas
// use: local $ref, type, required, properties, additionalProperties (boolean or schema),
// minProperties, items, minItems, maxItems, minimum, maximum, enum, const.

namespace slamp {

namespace detail {

inline bool json_type_is(const nlohmann::json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
  if (t == "number") return v.is_number();
  return false;
}

inline void check_schema(const nlohmann::json& v, const nlohmann::json& s, const nlohmann::json& root,
                         const std::string& path, std::vector<std::string>& errors) {
  if (s.is_object() && s.contains("$ref")) {
    const std::string ref = s["$ref"].get<std::string>();
    if (ref.rfind("#", 0) != 0) {
      errors.push_back(path + ": unsupported $ref " + ref);
      return;
    }
    const nlohmann::json::json_pointer ptr(ref.substr(1));
    if (!root.contains(ptr)) {
      errors.push_back(path + ": unresolved $ref " + ref);
      return;
    }
    check_schema(v, root.at(ptr), root, path, errors);
    return;
  }
  if (s.is_boolean()) {
    if (!s.get<bool>()) errors.push_back(path + ": not allowed");
    return;
  }
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || json_type_is(v, t.get<std::string>());
    } else {
      ok = json_type_is(v, s["type"].get<std::string>());
    }
    if (!ok) {
      errors.push_back(path + ": expected type " + s["type"].dump() + ", got " + v.type_name());
      return;
    }
  }
  if (s.contains("const") && v != s["const"]) errors.push_back(path + ": expected " + s["const"].dump());
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) errors.push_back(path + ": " + v.dump() + " not in " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>()) errors.push_back(path + ": below minimum");
    if (s.contains("maximum") && x > s["maximum"].get<double>()) errors.push_back(path + ": above maximum");
  }
  if (v.is_object()) {
    for (const auto& r : s.value("required", nlohmann::json::array()))
      if (!v.contains(r.get<std::string>())) errors.push_back(path + ": missing required '" + r.get<std::string>() + "'");
    if (s.contains("minProperties") && v.size() < s["minProperties"].get<std::size_t>())
      errors.push_back(path + ": too few properties");
    const auto props = s.value("properties", nlohmann::json::object());
    for (const auto& [key, val] : v.items()) {
      if (props.contains(key)) {
        check_schema(val, props[key], root, path + "." + key, errors);
      } else if (s.contains("additionalProperties")) {
        check_schema(val, s["additionalProperties"], root, path + "." + key, errors);
      }
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) errors.push_back(path + ": too few items");
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) errors.push_back(path + ": too many items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check_schema(v[i], s["items"], root, path + "[" + std::to_string(i) + "]", errors);
  }
}

}  // namespace detail

/// Violations of `schema` by `doc`; empty when the document conforms.
inline std::vector<std::string> validate_json(const nlohmann::json& doc, const nlohmann::json& schema) {
  std::vector<std::string> errors;
  detail::check_schema(doc, schema, schema, "$", errors);
  return errors;
}

}  // namespace slamp
