#include "rhh/rh_table.hpp"

#include <cassert>
#include <stdexcept>
#include <thread>

namespace rhh {

namespace {

inline TaggedWord val(std::uint64_t payload) { return TaggedWord::value(payload); }

}  // namespace

struct RobinHoodTable::ShardAcc {
  std::uint64_t shard;
  std::uint64_t observed;   // counter value first read this pass
  std::uint64_t increments; // relocations staged against this shard
};

RobinHoodTable::RobinHoodTable(Options opts)
    : capacity_log2_(opts.capacity_log2),
      shard_log2_(opts.shard_log2),
      capacity_(std::uint64_t{1} << opts.capacity_log2),
      mask_(capacity_ - 1),
      shard_count_(capacity_ >> opts.shard_log2 ? capacity_ >> opts.shard_log2 : 1),
      backoff_(opts.backoff),
      cells_(new kcas::Cell[capacity_]),
      timestamps_(new kcas::Cell[shard_count_]) {
  if (opts.capacity_log2 == 0 || opts.capacity_log2 > 40) {
    throw std::invalid_argument("capacity_log2 out of range");
  }
  for (std::uint64_t i = 0; i < capacity_; ++i) cells_[i].store(0);
  for (std::uint64_t s = 0; s < shard_count_; ++s) timestamps_[s].store(0);
}

void RobinHoodTable::check_key(std::uint64_t key) const {
  if (key < kMinKey || key > kMaxKey) {
    throw std::invalid_argument("key must be in [1, 2^62)");
  }
}

void RobinHoodTable::backoff_pause(std::uint64_t attempt) const {
  if (!backoff_) return;
  const std::uint64_t spins = std::uint64_t{1} << (attempt < 10 ? attempt : 10);
  for (std::uint64_t i = 0; i < spins; ++i) {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#else
    std::this_thread::yield();
#endif
  }
}

RobinHoodTable::ShardAcc& RobinHoodTable::observe_shard(
    std::vector<ShardAcc>& shards, std::uint64_t shard) {
  for (auto& acc : shards) {
    if (acc.shard == shard) return acc;
  }
  const std::uint64_t observed = kcas::read(timestamps_[shard]).payload();
  shards.push_back(ShardAcc{shard, observed, 0});
  return shards.back();
}

void RobinHoodTable::stage_timestamps(kcas::DescriptorBuilder& desc,
                                      const std::vector<ShardAcc>& shards) {
  // One entry per shard the walk visited. Shards without relocations are
  // staged as expected == new: the K-CAS then fails if any concurrent
  // relocation touched a region this operation based decisions on.
  for (const auto& acc : shards) {
    desc.add(&timestamps_[acc.shard], val(acc.observed),
             val(acc.observed + acc.increments));
  }
}

std::pair<std::uint64_t, std::uint64_t> RobinHoodTable::read_timestamp(
    std::uint64_t index) {
  const std::uint64_t shard = (index & mask_) >> shard_log2_;
  return {shard, kcas::read(timestamps_[shard]).payload()};
}

bool RobinHoodTable::contains(std::uint64_t key, OpStats* stats) {
  check_key(key);
  const std::uint64_t start = bucket_of(key);
  TableHooks* hooks = hooks_.load();

  thread_local std::vector<std::pair<std::uint64_t, std::uint64_t>> observed;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt) {
      if (stats) ++stats->retries;
      backoff_pause(attempt);
    }
    observed.clear();
    bool invariant_cut = false;
    std::uint64_t i = start;
    for (std::uint64_t dist = 0; dist < capacity_; ++dist, i = (i + 1) & mask_) {
      const std::uint64_t shard = i >> shard_log2_;
      if (observed.empty() || observed.back().first != shard) {
        observed.emplace_back(shard, kcas::read(timestamps_[shard]).payload());
      }
      const std::uint64_t cur = kcas::read(cells_[i]).payload();
      if (stats) ++stats->probes;
      if (hooks) hooks->on_cell_read(TableOp::kContains, i, cur);
      if (cur == key) return true;
      if (cur == kNil || displacement(cur, i) < dist) {
        invariant_cut = true;
        break;
      }
    }
    (void)invariant_cut;
    // The probe ended without a match; the answer is "absent" only if no
    // relocation swept through the walked region meanwhile.
    bool stale = false;
    for (const auto& [shard, value] : observed) {
      if (kcas::read(timestamps_[shard]).payload() != value) {
        stale = true;
        break;
      }
    }
    if (!stale) return false;
  }
}

bool RobinHoodTable::add(std::uint64_t key, OpStats* stats) {
  check_key(key);
  const std::uint64_t start = bucket_of(key);
  TableHooks* hooks = hooks_.load();
  auto& desc = kcas::thread_descriptor();

  thread_local std::vector<ShardAcc> shards;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt) {
      if (stats) ++stats->retries;
      backoff_pause(attempt);
    }
    desc.reset();
    shards.clear();
    std::uint64_t active_key = key;
    std::uint64_t active_dist = 0;
    std::uint64_t i = start;
    bool committed = false;
    try {
      for (std::uint64_t walked = 0;; ++walked, i = (i + 1) & mask_, ++active_dist) {
        if (walked == capacity_) {
          throw SaturatedError("add: no free cell within a full probe cycle");
        }
        ShardAcc& acc = observe_shard(shards, i >> shard_log2_);
        const std::uint64_t cur = kcas::read(cells_[i]).payload();
        if (stats) ++stats->probes;
        if (hooks) hooks->on_cell_read(TableOp::kAdd, i, cur);
        if (cur == kNil) {
          desc.add(&cells_[i], val(kNil), val(active_key));
          stage_timestamps(desc, shards);
          if (hooks) hooks->before_commit(TableOp::kAdd);
          committed = desc.commit();
          break;
        }
        if (cur == key) return false;
        const std::uint64_t dist = displacement(cur, i);
        if (dist < active_dist) {
          // The resident is richer: it keeps probing in place of our key.
          desc.add(&cells_[i], val(cur), val(active_key));
          ++acc.increments;
          active_key = cur;
          active_dist = dist;
        }
      }
    } catch (const std::length_error&) {
      throw SaturatedError("add: displacement chain exceeds descriptor capacity");
    }
    if (committed) return true;
  }
}

void RobinHoodTable::stage_shift(std::uint64_t found_at, std::uint64_t key,
                                 kcas::DescriptorBuilder& desc,
                                 std::vector<ShardAcc>& shards) {
  // Backward shift: each entry after the removed key moves back one cell
  // until a Nil cell or an entry in its home bucket, and the last vacated
  // cell becomes Nil. Every written cell counts as a relocation against its
  // shard.
  std::uint64_t prev = found_at;
  std::uint64_t prev_val = key;
  for (std::uint64_t steps = 0;; ++steps) {
    if (steps == capacity_) {
      throw SaturatedError("remove: shift run exceeds capacity");
    }
    ++observe_shard(shards, prev >> shard_log2_).increments;
    const std::uint64_t next = (prev + 1) & mask_;
    const std::uint64_t next_key = kcas::read(cells_[next]).payload();
    if (next_key == kNil || displacement(next_key, next) == 0) {
      desc.add(&cells_[prev], val(prev_val), val(kNil));
      return;
    }
    desc.add(&cells_[prev], val(prev_val), val(next_key));
    prev = next;
    prev_val = next_key;
  }
}

bool RobinHoodTable::remove(std::uint64_t key, OpStats* stats) {
  check_key(key);
  const std::uint64_t start = bucket_of(key);
  TableHooks* hooks = hooks_.load();
  auto& desc = kcas::thread_descriptor();

  thread_local std::vector<std::pair<std::uint64_t, std::uint64_t>> observed;
  thread_local std::vector<ShardAcc> shards;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt) {
      if (stats) ++stats->retries;
      backoff_pause(attempt);
    }
    desc.reset();
    observed.clear();
    bool found = false;
    bool committed = false;
    std::uint64_t i = start;
    try {
      for (std::uint64_t dist = 0; dist < capacity_; ++dist, i = (i + 1) & mask_) {
        const std::uint64_t shard = i >> shard_log2_;
        if (observed.empty() || observed.back().first != shard) {
          observed.emplace_back(shard, kcas::read(timestamps_[shard]).payload());
        }
        const std::uint64_t cur = kcas::read(cells_[i]).payload();
        if (stats) ++stats->probes;
        if (hooks) hooks->on_cell_read(TableOp::kRemove, i, cur);
        if (cur == kNil) break;
        if (cur == key) {
          found = true;
          shards.clear();
          stage_shift(i, key, desc, shards);
          stage_timestamps(desc, shards);
          if (hooks) hooks->before_commit(TableOp::kRemove);
          committed = desc.commit();
          break;
        }
        if (displacement(cur, i) < dist) break;
      }
    } catch (const std::length_error&) {
      throw SaturatedError("remove: shift run exceeds descriptor capacity");
    }
    if (found) {
      if (committed) return true;
      continue;  // lost the K-CAS race; rebuild the shift from scratch
    }
    bool stale = false;
    for (const auto& [shard, value] : observed) {
      if (kcas::read(timestamps_[shard]).payload() != value) {
        stale = true;
        break;
      }
    }
    if (!stale) return false;
  }
}

std::vector<std::uint64_t> RobinHoodTable::snapshot_raw() const {
  std::vector<std::uint64_t> out(capacity_);
  for (std::uint64_t i = 0; i < capacity_; ++i) out[i] = cells_[i].load();
  return out;
}

std::vector<std::uint64_t> RobinHoodTable::snapshot() {
  std::vector<std::uint64_t> out(capacity_);
  for (std::uint64_t i = 0; i < capacity_; ++i) {
    out[i] = kcas::read(cells_[i]).payload();
  }
  return out;
}

std::vector<std::uint64_t> RobinHoodTable::timestamp_snapshot() {
  std::vector<std::uint64_t> out(shard_count_);
  for (std::uint64_t s = 0; s < shard_count_; ++s) {
    out[s] = kcas::read(timestamps_[s]).payload();
  }
  return out;
}

std::vector<std::uint64_t> RobinHoodTable::probe_histogram() {
  std::vector<std::uint64_t> hist;
  const auto cells = snapshot();
  for (std::uint64_t i = 0; i < capacity_; ++i) {
    if (cells[i] == kNil) continue;
    const std::uint64_t d = displacement(cells[i], i);
    if (hist.size() <= d) hist.resize(d + 1, 0);
    ++hist[d];
  }
  return hist;
}

std::uint64_t RobinHoodTable::size() {
  std::uint64_t n = 0;
  for (const auto payload : snapshot()) n += payload != kNil;
  return n;
}

}  // namespace rhh
