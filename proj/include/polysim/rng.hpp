// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polysim/common.hpp"

namespace polysim {

// Deterministic guest-visible RNG device and tool-side generator.
//
// The draw sequence from a given seed is a frozen contract: the runtime code
// generator and its host-side mirror both consume words from this stream, so
// any change to the algorithm or the seeding rule is a breaking format change.
//
// Algorithm: xorshift32 (shifts 13, 17, 5). A zero state is invalid, so
// seeding remaps 0 to 0x9E3779B9.
class Xorshift32 {
 public:
  explicit Xorshift32(u32 seed = 1) : state_(seed ? seed : 0x9E3779B9u) {}

  u32 next() {
    u32 x = state_;
    x ^= x << 13;
    x ^= x >> 17;
    x ^= x << 5;
    state_ = x;
    return x;
  }

  u32 state() const { return state_; }

 private:
  u32 state_;
};

// splitmix64; used to derive independent per-trace seeds from a campaign seed.
inline u64 splitmix64(u64 x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Folds a 64-bit CLI seed into a device seed.
inline u32 fold_seed(u64 seed) {
  u32 s = static_cast<u32>(seed ^ (seed >> 32));
  return s ? s : 0x9E3779B9u;
}

}  // namespace polysim
