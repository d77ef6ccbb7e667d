#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "rhh/kcas.hpp"
#include "rhh/util.hpp"

namespace rhh {

struct OpStats {
  std::uint64_t retries = 0;
  std::uint64_t probes = 0;
};

enum class TableOp { kContains, kAdd, kRemove };

// Test-only scheduling hooks. The default implementations are empty and the
// hook pointer is null outside of directed tests, so production paths pay a
// single predictable branch.
struct TableHooks {
  virtual ~TableHooks() = default;
  virtual void on_cell_read(TableOp, std::uint64_t /*index*/, std::uint64_t /*payload*/) {}
  virtual void before_commit(TableOp) {}
};

// Concurrent open-addressed Robin Hood hash set. Keys live directly in a
// power-of-two array of K-CAS cells; every relocation commits through one
// K-CAS together with increments of the timestamp shards it touches, and
// searches re-validate the shards they walked before reporting absence.
//
// Fixed capacity; Add throws SaturatedError instead of resizing.
class RobinHoodTable {
 public:
  struct Options {
    std::uint32_t capacity_log2;
    std::uint32_t shard_log2 = 3;  // 8 cells (one cache line) per timestamp
    bool backoff = false;          // exponential backoff between retries
  };

  explicit RobinHoodTable(Options opts);
  RobinHoodTable(std::uint32_t capacity_log2, std::uint32_t shard_log2 = 3)
      : RobinHoodTable(Options{capacity_log2, shard_log2, false}) {}

  RobinHoodTable(const RobinHoodTable&) = delete;
  RobinHoodTable& operator=(const RobinHoodTable&) = delete;

  static constexpr std::uint64_t kNil = 0;
  static constexpr std::uint64_t kMinKey = 1;
  static constexpr std::uint64_t kMaxKey = TaggedWord::kMaxPayload;

  bool contains(std::uint64_t key, OpStats* stats = nullptr);
  bool add(std::uint64_t key, OpStats* stats = nullptr);
  bool remove(std::uint64_t key, OpStats* stats = nullptr);

  std::uint64_t capacity() const { return capacity_; }
  std::uint32_t capacity_log2() const { return capacity_log2_; }
  std::uint32_t shard_log2() const { return shard_log2_; }
  std::uint64_t shard_count() const { return shard_count_; }

  std::uint64_t bucket_of(std::uint64_t key) const { return mix64(key) & mask_; }

  // Distance From expected Bucket of `key` were it stored at `index`.
  std::uint64_t displacement(std::uint64_t key, std::uint64_t index) const {
    return (index - bucket_of(key)) & mask_;
  }

  // (shard index, counter) for the shard covering bucket `index`; helps any
  // K-CAS pending on the counter first.
  std::pair<std::uint64_t, std::uint64_t> read_timestamp(std::uint64_t index);

  // --- Quiescent introspection (callers must stop all mutators) ---

  // Raw cell words, no helping: pending descriptor references stay visible.
  std::vector<std::uint64_t> snapshot_raw() const;
  // Cell payloads after helping every pending operation to completion.
  std::vector<std::uint64_t> snapshot();
  std::vector<std::uint64_t> timestamp_snapshot();
  // Count of stored keys per displacement value.
  std::vector<std::uint64_t> probe_histogram();
  std::uint64_t size();

  void set_hooks(TableHooks* hooks) { hooks_.store(hooks); }

 private:
  struct ShardAcc;  // per-operation (shard, observed, increments) accumulator

  void stage_shift(std::uint64_t found_at, std::uint64_t key,
                   kcas::DescriptorBuilder& desc, std::vector<ShardAcc>& shards);
  ShardAcc& observe_shard(std::vector<ShardAcc>& shards, std::uint64_t shard);
  void stage_timestamps(kcas::DescriptorBuilder& desc,
                        const std::vector<ShardAcc>& shards);
  void check_key(std::uint64_t key) const;
  void backoff_pause(std::uint64_t attempt) const;

  std::uint32_t capacity_log2_;
  std::uint32_t shard_log2_;
  std::uint64_t capacity_;
  std::uint64_t mask_;
  std::uint64_t shard_count_;
  bool backoff_;
  std::unique_ptr<kcas::Cell[]> cells_;
  std::unique_ptr<kcas::Cell[]> timestamps_;
  std::atomic<TableHooks*> hooks_{nullptr};
};

}  // namespace rhh
