#ifndef FILIPPOV_JSON_UTIL_HPP
#define FILIPPOV_JSON_UTIL_HPP

#include <cstdint>
#include <string>

#include "json.hpp"

#include "filippov/error.hpp"

namespace filippov::jsonpath {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing field");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

inline std::int64_t integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

inline bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

inline const json& array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array");
  return v;
}

/// Reads obj[key] into out when present.
template <class T, class Read>
void optional_field(const json& obj, const std::string& key, const std::string& path, T& out, Read read) {
  auto it = obj.find(key);
  if (it != obj.end()) out = static_cast<T>(read(*it, join(path, key)));
}

}  // namespace filippov::jsonpath

#endif  // FILIPPOV_JSON_UTIL_HPP
