#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace rhh::verify {

enum class OpKind : std::uint8_t { kAdd, kRemove, kContains };
enum class Phase : std::uint8_t { kInvoke, kResponse };

struct HistoryEvent {
  std::uint32_t thread;
  OpKind op;
  std::uint64_t key;
  Phase phase;
  bool result;         // meaningful for responses only
  std::uint64_t index; // shared monotone counter, total order across threads
};

// Records invoke/response pairs into per-thread buffers; the only shared
// state is one monotone counter, so recording does not perturb the schedule
// beyond a fetch-add per event.
class HistoryRecorder {
 public:
  explicit HistoryRecorder(unsigned threads, std::size_t reserve_per_thread = 1 << 16);
  ~HistoryRecorder();

  void invoke(unsigned thread, OpKind op, std::uint64_t key);
  void respond(unsigned thread, OpKind op, std::uint64_t key, bool result);

  // Merged events sorted by index. Call only after all recording threads
  // have stopped.
  std::vector<HistoryEvent> collect() const;

 private:
  struct Buffer;
  friend std::vector<struct KeyVerdict> check_per_key_history(HistoryRecorder&&,
                                                              bool);
  std::vector<std::unique_ptr<Buffer>> buffers_;
  std::unique_ptr<std::atomic<std::uint64_t>> counter_;
};

struct KeyVerdict {
  std::uint64_t key;
  bool linearizable;
};

// Per-key linearizability against the sequential set specification. Keys in
// a hash set are independent, so each key's subhistory is checked alone.
// Throws std::invalid_argument on malformed histories (per-thread events
// must strictly alternate invoke/response on matching operations).
std::vector<KeyVerdict> check_per_key_history(std::span<const HistoryEvent> events,
                                              bool initially_present = false);

// Same verdicts, but consumes the recorder's buffers thread by thread instead
// of materializing one merged event vector; hour-long histories run to
// hundreds of millions of events, where the extra copy is the peak allocation.
std::vector<KeyVerdict> check_per_key_history(HistoryRecorder&& recorder,
                                              bool initially_present = false);

}  // namespace rhh::verify
