#ifndef FILIPPOV_FORMAT_HPP
#define FILIPPOV_FORMAT_HPP

#include <charconv>
#include <string>

namespace filippov {

/// Shortest round-trip decimal form; stable across runs and platforms.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace filippov

#endif  // FILIPPOV_FORMAT_HPP
