#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>

#include "rhh/tagged_word.hpp"

namespace rhh::kcas {

// A K-CAS-managed cell. Cells hold TaggedWord::raw; user code goes through
// read()/write()/DescriptorBuilder and never touches the raw word directly
// while the cell is shared.
using Cell = std::atomic<std::uint64_t>;

// Upper bound on (location, expected, new) triples per descriptor. Sized so
// that a single table commit (displacement chain plus one validation entry
// per visited timestamp shard) fits at the densest supported load.
inline constexpr std::size_t kMaxEntries = 256;

// Concurrent thread slots. Slots are recycled when threads exit.
inline constexpr unsigned kMaxThreads = 256;

// The calling thread's descriptor-pool slot, assigned on first use.
unsigned self_tid();

// Reads a VALUE word from a managed cell, helping any pending operation
// installed there to completion first.
TaggedWord read(Cell& cell);

// Stores a VALUE word into a managed cell; pending operations at the cell are
// helped to a decision before the store lands.
void write(Cell& cell, TaggedWord value);

// Builder over the calling thread's single reusable descriptor.
//
//   auto& d = thread_descriptor();
//   d.reset();                 // opens a fresh sequence epoch
//   d.add(loc, expect, want);  // stage entries; throws std::length_error when full
//   bool ok = d.commit();      // sorts by address, executes, all-or-nothing
//
// The descriptor is reusable immediately after commit() returns.
class DescriptorBuilder {
 public:
  void reset();
  void add(Cell* location, TaggedWord expected, TaggedWord desired);
  bool commit();

  std::size_t size() const { return count_; }
  std::size_t capacity_left() const { return kMaxEntries - count_; }

 private:
  struct Staged {
    Cell* loc;
    std::uint64_t expected;
    std::uint64_t desired;
  };
  Staged staged_[kMaxEntries];
  std::size_t count_ = 0;
  bool open_ = false;
};

// The calling thread's builder (one per thread, like the descriptor itself).
DescriptorBuilder& thread_descriptor();

// Total number of times a reader or writer helped someone else's pending
// operation. Diagnostic only.
std::uint64_t help_invocations();

}  // namespace rhh::kcas
