// vqanon/rng.h

// Copyright 2026  The vqanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VQANON_RNG_H_
#define VQANON_RNG_H_

#include <cstdint>
#include <random>

namespace vqanon {

/// Mixes (seed, index) into an independent stream seed (splitmix64
/// finalizer).  Used wherever per-item randomness must not depend on the
/// order in which items are processed.
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

/// Seeded generator whose draws are defined bit-for-bit in terms of the
/// raw mt19937_64 stream, so results do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  /// Uniform integer in [0, n); unbiased.
  uint64_t Index(uint64_t n);
  /// Standard normal (Box-Muller; one draw per call).
  double Normal();
  bool Bernoulli(double p) { return Uniform() < p; }

  template <class It>
  void Shuffle(It first, It last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(Index(static_cast<uint64_t>(i) + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vqanon

#endif  // VQANON_RNG_H_
