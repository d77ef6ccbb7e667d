#pragma once

#include <cstdint>
#include <stdexcept>

namespace rhh {

// Raised when an operation cannot complete because the table is too dense:
// either no free cell exists within a full probe cycle, or a single commit
// outgrew the descriptor. The caller is expected to resize, which this table
// does not do.
class SaturatedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 64-bit avalanche mixer (MurmurHash3 finalizer constants).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

// Counter-based splittable generator (SplitMix64). One instance per thread
// gives reproducible, independent streams.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi] inclusive.
  std::uint64_t next_in(std::uint64_t lo, std::uint64_t hi) {
    return lo + next() % (hi - lo + 1);
  }

 private:
  std::uint64_t state_;
};

}  // namespace rhh
