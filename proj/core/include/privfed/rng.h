// Copyright 2026 The privfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVFED_RNG_H_
#define PRIVFED_RNG_H_

#include <concepts>
#include <cstdint>
#include <random>
#include <string_view>

namespace privfed {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a, used to turn role tags into seed material.
constexpr uint64_t HashTag(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace internal {
constexpr uint64_t SeedPart(std::string_view tag) { return HashTag(tag); }
template <std::integral T>
constexpr uint64_t SeedPart(T v) {
  return static_cast<uint64_t>(v);
}
}  // namespace internal

// Derives an independent seed from a master seed and a sequence of role
// tags / indices, e.g. DeriveSeed(master, "noise", client, round, step).
// The scheme is fixed: any change breaks reproducibility of stored runs.
template <typename... Parts>
constexpr uint64_t DeriveSeed(uint64_t master, Parts... parts) {
  uint64_t h = Mix64(master);
  ((h = Mix64(h ^ Mix64(internal::SeedPart(parts)))), ...);
  return h;
}

// A deterministic random stream. Owned by exactly one consumer; pass by
// reference, never share across threads.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : engine_(seed) {}

  double Gaussian() { return normal_(engine_); }
  double Uniform() { return uniform_(engine_); }
  bool Bernoulli(double p) { return Uniform() < p; }
  uint64_t NextU64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace privfed

#endif  // PRIVFED_RNG_H_
