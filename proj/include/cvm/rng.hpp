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

#ifndef CVM_RNG_HPP_
#define CVM_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cvm {

// Reproducible random source for fixtures.
//
// Engine: std::mt19937_64 seeded with the 64-bit seed (the standard fixes
// its output sequence bit for bit). Conversions are done here rather than
// with <random> distributions, whose algorithms are implementation-defined:
//   uniform(): top 53 bits of one engine output, scaled to [0, 1).
//   normal():  Box-Muller cosine branch from two uniform() draws,
//              sqrt(-2 ln(1 - u1)) * cos(2 pi u2); one normal per call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cvm

#endif  // CVM_RNG_HPP_
