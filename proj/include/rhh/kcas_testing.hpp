#pragma once

// Test-only access to the K-CAS engine: plant a descriptor in the calling
// thread's slot without executing it, so tests can script helping scenarios.

#include <cstdint>
#include <span>

#include "rhh/kcas.hpp"

namespace rhh::kcas::testing {

enum class Status : std::uint64_t {
  kUndecided = 0,
  kSucceeded = 1,
  kFailed = 2,
};

struct PlantEntry {
  Cell* location;
  std::uint64_t expected_payload;
  std::uint64_t desired_payload;
};

// Stages a descriptor epoch in the calling thread's slot with the given
// initial status and returns its reference word. The caller decides which
// cells (if any) to store the reference into.
std::uint64_t plant_descriptor(std::span<const PlantEntry> entries, Status status);

// Help as a reader would after loading `ref_word` from a cell. A stale
// sequence number makes this a no-op.
void help_raw(std::uint64_t ref_word);

// Number of status transitions in the current epoch of the descriptor the
// reference belongs to (0 or 1 in a correct run).
std::uint64_t decisions_in_epoch(std::uint64_t ref_word);

Status status_of(std::uint64_t ref_word);

}  // namespace rhh::kcas::testing
