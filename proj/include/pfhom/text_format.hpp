#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace pfhom {

/// Shortest decimal string that round-trips to the same double.
/// Locale independent; used for every number written to an artifact file.
inline std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

/// Fixed significant digits for human-facing tables (still locale independent).
inline std::string fmt_sig(double v, int digits = 9) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, digits);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace pfhom
