#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "histoconv/error.hpp"

namespace histoconv {

// Config files are strict: any key outside the allowed set is a config error,
// so typos never pass silently.
inline void require_known_keys(const nlohmann::json& j,
                               std::initializer_list<const char*> allowed,
                               const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::config, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known) fail(ErrorCode::config, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T json_get(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::config, "bad value for '" + std::string(key) + "' in " + where);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::data, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::data, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::data, "write error on '" + path + "'");
}

inline nlohmann::json parse_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, "cannot parse '" + path + "' as JSON: " + e.what());
  }
}

}  // namespace histoconv
