#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rhh/util.hpp"

namespace rhh {

// Single-threaded Robin Hood hash set: swap-on-richer insertion, searches
// culled by the displacement invariant, backward-shift deletion. Same hash
// and cell layout as RobinHoodTable, so the two are directly comparable; this
// one optimizes for auditability, not speed.
class SerialTable {
 public:
  explicit SerialTable(std::uint32_t capacity_log2);

  static constexpr std::uint64_t kNil = 0;

  bool add(std::uint64_t key);
  bool contains(std::uint64_t key) const;
  bool remove(std::uint64_t key);

  // contains() plus the number of cells inspected.
  std::pair<bool, std::uint64_t> contains_probes(std::uint64_t key) const;

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t size() const { return count_; }
  std::uint64_t bucket_of(std::uint64_t key) const { return mix64(key) & mask_; }
  std::uint64_t displacement(std::uint64_t key, std::uint64_t index) const {
    return (index - bucket_of(key)) & mask_;
  }

  std::span<const std::uint64_t> cells() const { return cells_; }
  std::vector<std::uint64_t> probe_histogram() const;
  std::uint64_t max_displacement() const;

  // True iff the Robin Hood ordering invariant holds everywhere.
  bool ordering_holds() const;

 private:
  void check_key(std::uint64_t key) const;

  std::uint32_t capacity_log2_;
  std::uint64_t capacity_;
  std::uint64_t mask_;
  std::uint64_t count_ = 0;
  std::vector<std::uint64_t> cells_;
};

struct ProbeStats {
  double mean_successful = 0;
  double mean_unsuccessful = 0;
  std::uint64_t max_dfb = 0;
};

// Fills a fresh table to `load_factor` with uniform random keys and measures
// probe counts over every member and over a uniform sample of absent keys.
ProbeStats probe_stats(std::uint32_t capacity_log2, double load_factor,
                       std::uint64_t seed, std::uint64_t absent_samples = 4096);

}  // namespace rhh
