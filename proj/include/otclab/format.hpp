#pragma once

#include <charconv>
#include <string>

namespace otclab {

// Shortest round-trip decimal rendering; identical doubles always produce
// identical text, which the determinism contract for logs depends on.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace otclab
