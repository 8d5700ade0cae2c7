// Copyright 2026 The CVM Analytics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CVM_FORMAT_HPP_
#define CVM_FORMAT_HPP_

// The single rounding and number-formatting policy used by every report,
// record and plot-data writer. Displayed percents and means are rounded
// half-away-from-zero; values are kept at full precision everywhere else.

#include <cmath>
#include <cstdio>
#include <string>

namespace cvm {

inline long round_half_away(double x) { return std::lround(x); }

// Rounds to `decimals` places, half away from zero.
inline double round_to(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double r = std::round(x * scale) / scale;
  return r == 0.0 ? 0.0 : r;  // no "-0.0"
}

inline std::string format_fixed(double x, int decimals) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_to(x, decimals));
  return buf;
}

inline std::string format_percent(double x) {
  return std::to_string(round_half_away(x));
}

// Full-precision text form that round-trips through strtod.
inline std::string format_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace cvm

#endif  // CVM_FORMAT_HPP_
