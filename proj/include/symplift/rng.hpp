#pragma once

#include <cstdint>
#include <random>

namespace symplift {

// Deterministic seeded stream.  Reduction is by plain modulo: the bias is
// irrelevant for retry randomization and property tests, and unlike
// std::uniform_int_distribution the byte stream is identical on every
// platform, which certificate determinism depends on.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(uint64_t seed) : eng(seed) {}
  uint64_t u64() { return eng(); }
  uint64_t below(uint64_t n) { return n ? eng() % n : 0; }
};

}  // namespace symplift
