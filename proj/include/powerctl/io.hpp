#pragma once

#include <cstdio>
#include <string>

namespace powerctl {

/// Tabular output format: 12 significant digits, '.' decimal separator.
inline std::string fmt12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace powerctl
