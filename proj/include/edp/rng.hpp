// Copyright 2026 The edp Authors
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

#ifndef EDP_RNG_HPP_
#define EDP_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace edp {

// Seeded random stream with reproducible output across platforms. All
// randomness in the library flows through this type so that a recorded seed
// replays a run exactly. std::mt19937_64 has a pinned algorithm; the uniform
// double is derived from raw bits instead of std::uniform_real_distribution,
// whose mapping is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Worker streams for parallel sampling: decorrelated by a fixed odd stride.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_index) {
    return Rng(seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1): never returns an endpoint, safe under log().
  double next_open_double() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Laplace(0, scale) by inverse CDF.
  double next_laplace(double scale) {
    const double u = next_open_double() - 0.5;
    return u < 0 ? scale * std::log1p(2.0 * u) : -scale * std::log1p(-2.0 * u);
  }

  double next_gaussian(double sigma) {
    // Box-Muller on open uniforms; one value per call keeps replay simple.
    const double u1 = next_open_double();
    const double u2 = next_open_double();
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace edp

#endif  // EDP_RNG_HPP_
