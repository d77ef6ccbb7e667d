#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhh/history.hpp"
#include "rhh/rh_table.hpp"

namespace rhh::verify {

struct AuditReport {
  std::vector<std::string> ordering_violations;
  std::uint64_t orphaned_refs = 0;
  std::vector<std::string> membership_mismatches;
  std::vector<std::uint64_t> probe_histogram;

  bool passed() const {
    return ordering_violations.empty() && orphaned_refs == 0 &&
           membership_mismatches.empty();
  }
  void print(std::ostream& os) const;
};

// Full quiescent audit of a live table: Robin Hood ordering on every run, no
// descriptor reference left in any cell, and contains() true for exactly the
// stored keys. Caller must have stopped all mutators.
AuditReport audit_quiescent(RobinHoodTable& table);

// Structural checks only (ordering + orphaned references) over a raw cell
// snapshot; used to validate the auditor against planted faults.
AuditReport audit_cells(std::span<const std::uint64_t> raw_cells,
                        std::uint32_t capacity_log2);

// Directed two-thread interleavings driven through test-only pause points.
// Returns true iff the paused operation retried (where the scenario forces a
// retry) and produced the correct answer.
bool run_directed_race(std::string_view scenario);
std::vector<std::string> race_scenarios();

// Hammers one shared table with `threads` workers over a key space of size
// `keys`, recording every call, then checks each key's subhistory for
// linearizability against boolean-register set semantics.
bool linearizability_run(unsigned threads, unsigned keys, double seconds,
                         std::uint64_t seed = 1);

// Counter torture: every thread repeatedly K-CASes all `cells` counters up by
// one for `seconds`; passes iff each counter equals the total number of
// successful operations. `total_ops` reports that total when non-null.
bool kcas_torture(unsigned threads, unsigned cells, double seconds,
                  std::uint64_t* total_ops = nullptr);

// Fixed-round variant: each thread performs exactly `rounds` successful
// operations; every counter must end at threads * rounds.
bool kcas_torture_fixed(unsigned threads, unsigned cells, std::uint64_t rounds);

// Randomized overlap schedules: small descriptor sets over shared cells run
// concurrently; the outcome must match some sequential ordering of the calls
// that returned true. Passes iff all schedules reconcile.
bool kcas_overlap_enumeration(unsigned schedules, std::uint64_t seed);

}  // namespace rhh::verify
