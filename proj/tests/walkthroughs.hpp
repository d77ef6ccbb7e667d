#pragma once

// Key sets for the canonical insertion / search-cutoff / deletion walkthrough
// scenarios, mined so their home buckets land exactly where each layout needs
// them. All scenarios use a 32-cell table with the cluster rooted at bucket 8.

#include <cstdint>
#include <vector>

#include "rhh/util.hpp"

namespace walkthroughs {

inline constexpr std::uint32_t kCapacityLog2 = 5;
inline constexpr std::uint64_t kBase = 8;

inline std::vector<std::uint64_t> keys_with_bucket(std::uint64_t bucket,
                                                   std::size_t n) {
  const std::uint64_t mask = (std::uint64_t{1} << kCapacityLog2) - 1;
  std::vector<std::uint64_t> keys;
  for (std::uint64_t k = 1; keys.size() < n; ++k) {
    if ((rhh::mix64(k) & mask) == bucket) keys.push_back(k);
  }
  return keys;
}

// Insertion: start from [x0, y1, z1, w1, Nil] and insert v (home = x's
// bucket). v steals z's cell, z steals w's, w takes the trailing Nil.
struct InsertionScenario {
  std::uint64_t x, y, v;  // home kBase
  std::uint64_t z;        // home kBase + 1
  std::uint64_t w;        // home kBase + 2

  InsertionScenario() {
    const auto h0 = keys_with_bucket(kBase, 3);
    x = h0[0];
    y = h0[1];
    v = h0[2];
    z = keys_with_bucket(kBase + 1, 1)[0];
    w = keys_with_bucket(kBase + 2, 1)[0];
  }

  template <typename Table>
  void build(Table& t) const {
    t.add(x);
    t.add(y);
    t.add(z);
    t.add(w);
  }

  std::vector<std::uint64_t> before() const { return {x, y, z, w, 0}; }
  std::vector<std::uint64_t> after_insert() const { return {x, y, v, z, w}; }
  // Deletion of y from the same start layout: z and w shift back to DFB 0.
  std::vector<std::uint64_t> after_remove_y() const { return {x, z, w, 0, 0}; }
};

// Search cutoff: [x0, p1, q2, z2] with z home kBase+1; probing for the
// absent u (home kBase) must stop at z, whose DFB 2 < probe distance 3.
struct SearchScenario {
  std::uint64_t x, p, q, u;  // home kBase; u stays absent
  std::uint64_t z;           // home kBase + 1

  SearchScenario() {
    const auto h0 = keys_with_bucket(kBase, 4);
    x = h0[0];
    p = h0[1];
    q = h0[2];
    u = h0[3];
    z = keys_with_bucket(kBase + 1, 1)[0];
  }

  template <typename Table>
  void build(Table& t) const {
    t.add(x);
    t.add(p);
    t.add(q);
    t.add(z);
  }

  std::vector<std::uint64_t> layout() const { return {x, p, q, z}; }
};

// First `expected.size()` cells starting at kBase match, and nothing else in
// the table is occupied.
inline bool cluster_matches(const std::vector<std::uint64_t>& cells,
                            const std::vector<std::uint64_t>& expected) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::uint64_t want =
        (i >= kBase && i - kBase < expected.size()) ? expected[i - kBase] : 0;
    if (cells[i] != want) return false;
  }
  return true;
}

}  // namespace walkthroughs
