#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rhh/rh_table.hpp"

namespace rhh::harness {

struct WorkloadSpec {
  std::uint32_t capacity_log2 = 18;
  double load_factor = 0.8;
  double update_ratio = 0.1;  // split evenly between add and remove
  unsigned threads = 1;
  double duration_secs = 2.0;
  unsigned trials = 3;
  std::uint64_t seed = 1;
  std::uint32_t shard_log2 = 3;
  bool backoff = false;

  RobinHoodTable::Options table_options() const {
    return {capacity_log2, shard_log2, backoff};
  }
};

struct RunResult {
  WorkloadSpec spec;
  int trial = 0;  // -1 marks a per-cell average record
  std::vector<std::uint64_t> per_thread_ops;
  std::uint64_t total_ops = 0;
  double ops_per_us = 0;
  double retries_per_op = 0;
  double mean_probe = 0;
};

// Inserts round(load_factor * capacity) distinct keys drawn uniformly from
// [1, capacity]. Deterministic in spec.seed.
void prefill(RobinHoodTable& table, const WorkloadSpec& spec);

// One timed run: `threads` workers leave a common barrier together, each
// looping random operations until the stop flag; key and operation streams
// are deterministic in (seed, trial, thread).
RunResult run_trial(RobinHoodTable& table, const WorkloadSpec& spec, int trial);

// Cartesian product of the three ranges, `base.trials` timed runs per cell on
// a fresh prefilled table, plus one trial=-1 average record per cell. When
// `audits_ok` is non-null every trial is followed by a quiescent audit and
// *audits_ok reports whether all of them passed.
std::vector<RunResult> run_grid(const WorkloadSpec& base,
                                std::span<const double> load_factors,
                                std::span<const double> update_ratios,
                                std::span<const unsigned> thread_counts,
                                bool* audits_ok = nullptr,
                                std::ostream* progress = nullptr);

enum class Format { kCsv, kJsonLines };

// Writes results in a fixed column order: capacity_log2, load_factor,
// update_ratio, threads, trial, seed, total_ops, ops_per_us, retries_per_op,
// mean_probe. Numeric values are identical across formats.
void emit(std::span<const RunResult> results, Format format, std::ostream& out);

// Reads records produced by emit(..., kJsonLines, ...).
std::vector<RunResult> parse_jsonl(std::istream& in);

}  // namespace rhh::harness
