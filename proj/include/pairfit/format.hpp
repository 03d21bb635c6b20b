#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace pairfit {

// 17 significant digits (%.17g), enough for every double to round-trip
// bit-exactly. Non-finite values have no JSON form and print as
// "null".
inline std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  if (x == 0.0) return std::signbit(x) ? "-0" : "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace pairfit
