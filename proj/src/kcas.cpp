#include "rhh/kcas.hpp"

#include <algorithm>
#include <cassert>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "rhh/kcas_testing.hpp"

namespace rhh::kcas {
namespace {

// Status word layout: (seq << 2) | state. The sequence number advances every
// time the owner reuses the descriptor, so any reader that snapshotted an
// older epoch fails validation instead of acting on recycled fields.
enum : std::uint64_t { kUndecided = 0, kSucceeded = 1, kFailed = 2 };
constexpr std::uint64_t kStateMask = 0x3;

// Descriptor reference payload: (seq << kTidBits) | tid. The tag bits select
// the kind (KCAS vs RDCSS), so the payload carries only owner and epoch.
constexpr unsigned kTidBits = 8;
static_assert(kMaxThreads <= (1u << kTidBits));

constexpr std::uint64_t pack_ref(unsigned tid, std::uint64_t seq, Tag tag) {
  return (((seq << kTidBits) | tid) << TaggedWord::kTagBits) |
         static_cast<std::uint64_t>(tag);
}
constexpr unsigned ref_tid(std::uint64_t raw) {
  return static_cast<unsigned>((raw >> TaggedWord::kTagBits) & ((1u << kTidBits) - 1));
}
constexpr std::uint64_t ref_seq(std::uint64_t raw) {
  return raw >> (TaggedWord::kTagBits + kTidBits);
}
constexpr Tag word_tag(std::uint64_t raw) {
  return static_cast<Tag>(raw & TaggedWord::kTagMask);
}

struct alignas(128) KcasSlot {
  std::atomic<std::uint64_t> status{0};  // (seq << 2) | state
  std::atomic<std::uint32_t> count{0};
  std::atomic<std::uint64_t> decisions{0};  // per-epoch, diagnostics only
  struct Entry {
    std::atomic<Cell*> loc{nullptr};
    std::atomic<std::uint64_t> expected{0};
    std::atomic<std::uint64_t> desired{0};
  };
  Entry entries[kMaxEntries];
};

struct alignas(128) RdcssSlot {
  std::atomic<std::uint64_t> seq{0};
  std::atomic<Cell*> target{nullptr};
  std::atomic<std::uint64_t> expected{0};
  std::atomic<std::uint64_t> kcas_ref{0};
};

KcasSlot g_kcas_slots[kMaxThreads];
RdcssSlot g_rdcss_slots[kMaxThreads];
std::atomic<std::uint64_t> g_help_count{0};

// Thread slot assignment with recycling at thread exit. A recycled slot keeps
// its sequence counters, so epochs stay monotone per slot.
std::mutex g_tid_mutex;
std::vector<unsigned>& free_tids() {
  static std::vector<unsigned> v;
  return v;
}
unsigned g_next_tid = 0;

struct TidLease {
  unsigned tid;
  TidLease() {
    std::lock_guard<std::mutex> lock(g_tid_mutex);
    if (!free_tids().empty()) {
      tid = free_tids().back();
      free_tids().pop_back();
    } else {
      if (g_next_tid >= kMaxThreads) {
        throw std::runtime_error("kcas: thread slots exhausted");
      }
      tid = g_next_tid++;
    }
  }
  ~TidLease() {
    std::lock_guard<std::mutex> lock(g_tid_mutex);
    free_tids().push_back(tid);
  }
};

struct KcasSnapshot {
  std::uint32_t n = 0;
  Cell* loc[kMaxEntries];
  std::uint64_t expected[kMaxEntries];
  std::uint64_t desired[kMaxEntries];
};

// Reads the descriptor fields of the given epoch. Returns false when the
// epoch has passed; a false return means the operation already decided and its
// references are being (or have been) cleaned up by its owner.
bool snapshot_kcas(unsigned tid, std::uint64_t seq, KcasSnapshot& out) {
  KcasSlot& slot = g_kcas_slots[tid];
  if ((slot.status.load() >> 2) != seq) return false;
  std::uint32_t n = slot.count.load();
  if (n > kMaxEntries) return false;
  for (std::uint32_t i = 0; i < n; ++i) {
    out.loc[i] = slot.entries[i].loc.load();
    out.expected[i] = slot.entries[i].expected.load();
    out.desired[i] = slot.entries[i].desired.load();
  }
  if ((slot.status.load() >> 2) != seq) return false;
  out.n = n;
  return true;
}

// Second half of RDCSS: the reference is swapped for the K-CAS reference if
// the owning operation is still undecided in the same epoch, and rolled back
// to the expected value otherwise.
void complete_rdcss_core(Cell* target, std::uint64_t expected_raw,
                         std::uint64_t kref, std::uint64_t rdcss_ref) {
  const unsigned ktid = ref_tid(kref);
  const std::uint64_t kseq = ref_seq(kref);
  const std::uint64_t undecided = (kseq << 2) | kUndecided;
  const std::uint64_t status = g_kcas_slots[ktid].status.load();
  std::uint64_t cur = rdcss_ref;
  target->compare_exchange_strong(cur, status == undecided ? kref : expected_raw);
}

void help_rdcss(std::uint64_t ref) {
  const unsigned tid = ref_tid(ref);
  const std::uint64_t seq = ref_seq(ref);
  RdcssSlot& slot = g_rdcss_slots[tid];
  if (slot.seq.load() != seq) return;
  Cell* target = slot.target.load();
  const std::uint64_t expected = slot.expected.load();
  const std::uint64_t kref = slot.kcas_ref.load();
  if (slot.seq.load() != seq) return;  // reused mid-read; snapshot is garbage
  complete_rdcss_core(target, expected, kref, ref);
}

// Installs `kref` at `target` iff the cell holds `expected_raw` and the
// owning K-CAS is still undecided, using the calling thread's reusable RDCSS
// descriptor. Returns `expected_raw` when the double-compare ran (install or
// rollback decided by the status check); any other return is the conflicting
// word found in the cell.
std::uint64_t rdcss_install(Cell* target, std::uint64_t expected_raw,
                            std::uint64_t kref) {
  const unsigned tid = self_tid();
  RdcssSlot& slot = g_rdcss_slots[tid];
  const std::uint64_t seq = slot.seq.load() + 1;
  slot.seq.store(seq);  // invalidates any straggling reader of the old epoch
  slot.target.store(target);
  slot.expected.store(expected_raw);
  slot.kcas_ref.store(kref);
  const std::uint64_t myref = pack_ref(tid, seq, Tag::kRdcssRef);
  while (true) {
    std::uint64_t cur = expected_raw;
    if (target->compare_exchange_strong(cur, myref)) {
      complete_rdcss_core(target, expected_raw, kref, myref);
      return expected_raw;
    }
    if (word_tag(cur) == Tag::kRdcssRef) {
      help_rdcss(cur);
      continue;
    }
    return cur;
  }
}

// Runs the referenced operation to a decision and removes its references from
// all entry cells. Safe to call from any thread; a stale epoch is a no-op.
// Returns whether the operation succeeded (meaningful to the owner only).
bool help_kcas(std::uint64_t kref) {
  const unsigned tid = ref_tid(kref);
  const std::uint64_t seq = ref_seq(kref);
  KcasSlot& slot = g_kcas_slots[tid];
  KcasSnapshot snap;
  if (!snapshot_kcas(tid, seq, snap)) return false;

  const std::uint64_t undecided = (seq << 2) | kUndecided;
  if (slot.status.load() == undecided) {
    // Phase 1: install our reference at every location, in address order.
    std::uint64_t decided = kSucceeded;
    for (std::uint32_t i = 0; i < snap.n && decided == kSucceeded;) {
      const std::uint64_t r = rdcss_install(snap.loc[i], snap.expected[i], kref);
      if (r == snap.expected[i] || r == kref) {
        ++i;
        continue;
      }
      if (word_tag(r) == Tag::kKcasRef) {
        help_kcas(r);  // another operation owns the cell; finish it and retry
        continue;
      }
      decided = kFailed;
    }
    std::uint64_t want = undecided;
    if (slot.status.compare_exchange_strong(want, (seq << 2) | decided)) {
      slot.decisions.fetch_add(1);
    }
  }

  const std::uint64_t status = slot.status.load();
  if ((status >> 2) != seq) return false;
  const bool success = (status & kStateMask) == kSucceeded;

  // Phase 2: swap our reference for the final value everywhere. Straggling
  // RDCSS installs can still convert into our reference, so keep scrubbing
  // until the cell holds neither our reference nor a pending RDCSS.
  for (std::uint32_t i = 0; i < snap.n; ++i) {
    const std::uint64_t fin = success ? snap.desired[i] : snap.expected[i];
    Cell* loc = snap.loc[i];
    while (true) {
      std::uint64_t cur = loc->load();
      if (cur == kref) {
        if (loc->compare_exchange_strong(cur, fin)) break;
        continue;
      }
      if (word_tag(cur) == Tag::kRdcssRef) {
        help_rdcss(cur);
        continue;
      }
      break;
    }
  }
  return success;
}

std::uint64_t current_seq(unsigned tid) {
  return g_kcas_slots[tid].status.load() >> 2;
}

}  // namespace

unsigned self_tid() {
  thread_local TidLease lease;
  return lease.tid;
}

TaggedWord read(Cell& cell) {
  while (true) {
    const std::uint64_t w = cell.load();
    switch (word_tag(w)) {
      case Tag::kValue:
        return TaggedWord::from_raw(w);
      case Tag::kRdcssRef:
        g_help_count.fetch_add(1);
        help_rdcss(w);
        break;
      case Tag::kKcasRef:
        g_help_count.fetch_add(1);
        help_kcas(w);
        break;
      default:
        assert(false && "corrupt tag");
    }
  }
}

void write(Cell& cell, TaggedWord value) {
  assert(value.is_value());
  while (true) {
    std::uint64_t w = cell.load();
    if (word_tag(w) != Tag::kValue) {
      g_help_count.fetch_add(1);
      if (word_tag(w) == Tag::kRdcssRef) {
        help_rdcss(w);
      } else {
        help_kcas(w);
      }
      continue;
    }
    if (cell.compare_exchange_strong(w, value.raw)) return;
  }
}

void DescriptorBuilder::reset() {
  const unsigned tid = self_tid();
  KcasSlot& slot = g_kcas_slots[tid];
  const std::uint64_t seq = current_seq(tid) + 1;
  slot.status.store((seq << 2) | kUndecided);
  slot.decisions.store(0);
  count_ = 0;
  open_ = true;
}

void DescriptorBuilder::add(Cell* location, TaggedWord expected, TaggedWord desired) {
  assert(open_ && "add() before reset()");
  assert(expected.is_value() && desired.is_value());
  if (count_ == kMaxEntries) {
    throw std::length_error("kcas: descriptor entry limit exceeded");
  }
  staged_[count_++] = Staged{location, expected.raw, desired.raw};
}

bool DescriptorBuilder::commit() {
  const unsigned tid = self_tid();
  KcasSlot& slot = g_kcas_slots[tid];
  // A global address order across overlapping descriptors avoids livelock.
  std::sort(staged_, staged_ + count_,
            [](const Staged& a, const Staged& b) { return a.loc < b.loc; });
#ifndef NDEBUG
  for (std::size_t i = 1; i < count_; ++i) {
    assert(staged_[i].loc != staged_[i - 1].loc && "duplicate kcas location");
  }
#endif
  for (std::size_t i = 0; i < count_; ++i) {
    slot.entries[i].loc.store(staged_[i].loc);
    slot.entries[i].expected.store(staged_[i].expected);
    slot.entries[i].desired.store(staged_[i].desired);
  }
  slot.count.store(static_cast<std::uint32_t>(count_));
  open_ = false;
  return help_kcas(pack_ref(tid, current_seq(tid), Tag::kKcasRef));
}

DescriptorBuilder& thread_descriptor() {
  thread_local DescriptorBuilder builder;
  return builder;
}

std::uint64_t help_invocations() { return g_help_count.load(); }

namespace testing {

std::uint64_t plant_descriptor(std::span<const PlantEntry> entries, Status status) {
  if (entries.size() > kMaxEntries) {
    throw std::length_error("plant_descriptor: too many entries");
  }
  const unsigned tid = self_tid();
  KcasSlot& slot = g_kcas_slots[tid];
  const std::uint64_t seq = (slot.status.load() >> 2) + 1;
  slot.status.store((seq << 2) | kUndecided);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    slot.entries[i].loc.store(entries[i].location);
    slot.entries[i].expected.store(TaggedWord::value(entries[i].expected_payload).raw);
    slot.entries[i].desired.store(TaggedWord::value(entries[i].desired_payload).raw);
  }
  slot.count.store(static_cast<std::uint32_t>(entries.size()));
  slot.status.store((seq << 2) | static_cast<std::uint64_t>(status));
  slot.decisions.store(status == Status::kUndecided ? 0 : 1);
  return pack_ref(tid, seq, Tag::kKcasRef);
}

void help_raw(std::uint64_t ref_word) {
  if (word_tag(ref_word) == Tag::kRdcssRef) {
    help_rdcss(ref_word);
  } else if (word_tag(ref_word) == Tag::kKcasRef) {
    help_kcas(ref_word);
  }
}

std::uint64_t decisions_in_epoch(std::uint64_t ref_word) {
  return g_kcas_slots[ref_tid(ref_word)].decisions.load();
}

Status status_of(std::uint64_t ref_word) {
  return static_cast<Status>(g_kcas_slots[ref_tid(ref_word)].status.load() & kStateMask);
}

}  // namespace testing

}  // namespace rhh::kcas
