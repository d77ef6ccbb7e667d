#include "rhh/history.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace rhh::verify {

struct HistoryRecorder::Buffer {
  std::vector<HistoryEvent> events;
};

HistoryRecorder::HistoryRecorder(unsigned threads, std::size_t reserve_per_thread)
    : counter_(std::make_unique<std::atomic<std::uint64_t>>(0)) {
  buffers_.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    buffers_.push_back(std::make_unique<Buffer>());
    buffers_.back()->events.reserve(reserve_per_thread);
  }
}

HistoryRecorder::~HistoryRecorder() = default;

void HistoryRecorder::invoke(unsigned thread, OpKind op, std::uint64_t key) {
  const std::uint64_t idx = counter_->fetch_add(1);
  buffers_[thread]->events.push_back(
      HistoryEvent{thread, op, key, Phase::kInvoke, false, idx});
}

void HistoryRecorder::respond(unsigned thread, OpKind op, std::uint64_t key,
                              bool result) {
  const std::uint64_t idx = counter_->fetch_add(1);
  buffers_[thread]->events.push_back(
      HistoryEvent{thread, op, key, Phase::kResponse, result, idx});
}

std::vector<HistoryEvent> HistoryRecorder::collect() const {
  std::vector<HistoryEvent> all;
  for (const auto& buf : buffers_) {
    all.insert(all.end(), buf->events.begin(), buf->events.end());
  }
  std::sort(all.begin(), all.end(),
            [](const HistoryEvent& a, const HistoryEvent& b) { return a.index < b.index; });
  return all;
}

namespace {

struct Op {
  std::uint64_t invoke;
  std::uint64_t response;
  OpKind kind;
  bool result;
};

// Decision procedure for one key: a boolean "present" register with
// add/remove/contains semantics. Wing-Gong style search over the per-thread
// frontiers, memoizing states proven dead.
class SingleKeyChecker {
 public:
  explicit SingleKeyChecker(std::vector<std::vector<Op>> per_thread, bool init)
      : ops_(std::move(per_thread)), frontier_(ops_.size(), 0), init_(init) {}

  bool run() { return search(); }

 private:
  bool consistent(const Op& op, bool present, bool& next_present) const {
    switch (op.kind) {
      case OpKind::kAdd:
        next_present = true;
        return op.result == !present;
      case OpKind::kRemove:
        next_present = false;
        return op.result == present;
      case OpKind::kContains:
        next_present = present;
        return op.result == present;
    }
    return false;
  }

  std::string state_token(bool present) const {
    std::string tok(frontier_.size() * sizeof(std::size_t) + 1, '\0');
    std::memcpy(tok.data(), frontier_.data(), frontier_.size() * sizeof(std::size_t));
    tok.back() = present ? 1 : 0;
    return tok;
  }

  // Depth-first over linearization orders with an explicit stack; histories
  // run to millions of operations, far past any recursion limit.
  bool search() {
    static constexpr std::size_t kNone = SIZE_MAX;
    struct Frame {
      bool present;
      std::uint64_t min_resp;
      std::size_t next_t;   // next head operation to try
      std::size_t taken_t;  // thread whose head the active child consumed
      std::string token;
    };
    std::vector<Frame> stack;

    // 1: every operation linearized, 0: frame pushed, -1: known-dead state.
    const auto enter = [&](bool present) -> int {
      // Earliest response among remaining head operations: anything invoked
      // after it cannot be linearized first.
      std::uint64_t min_resp = UINT64_MAX;
      for (std::size_t t = 0; t < ops_.size(); ++t) {
        if (frontier_[t] < ops_[t].size()) {
          min_resp = std::min(min_resp, ops_[t][frontier_[t]].response);
        }
      }
      if (min_resp == UINT64_MAX) return 1;
      auto token = state_token(present);
      if (dead_.contains(token)) return -1;
      stack.push_back(Frame{present, min_resp, 0, kNone, std::move(token)});
      return 0;
    };

    if (enter(init_) == 1) return true;
    while (!stack.empty()) {
      Frame& f = stack.back();
      bool descended = false;
      while (f.next_t < ops_.size()) {
        const std::size_t t = f.next_t++;
        if (frontier_[t] >= ops_[t].size()) continue;
        const Op& op = ops_[t][frontier_[t]];
        if (op.invoke > f.min_resp) continue;  // some other op must go first
        bool next_present = f.present;
        if (!consistent(op, f.present, next_present)) continue;
        ++frontier_[t];
        f.taken_t = t;
        const int r = enter(next_present);
        if (r == 1) return true;
        if (r == 0) {
          descended = true;
          break;
        }
        --frontier_[t];
        f.taken_t = kNone;
      }
      if (descended) continue;
      dead_.insert(std::move(f.token));
      stack.pop_back();
      if (!stack.empty()) {
        Frame& parent = stack.back();
        --frontier_[parent.taken_t];
        parent.taken_t = kNone;
      }
    }
    return false;
  }

  std::vector<std::vector<Op>> ops_;
  std::vector<std::size_t> frontier_;
  bool init_;
  std::unordered_set<std::string> dead_;
};

}  // namespace

std::vector<KeyVerdict> check_per_key_history(std::span<const HistoryEvent> events,
                                              bool initially_present) {
  // Validate per-thread alternation and pair up operations.
  std::uint32_t max_thread = 0;
  for (const auto& e : events) max_thread = std::max(max_thread, e.thread);

  struct Pending {
    bool active = false;
    OpKind op{};
    std::uint64_t key = 0;
    std::uint64_t invoke = 0;
  };
  std::vector<Pending> pending(max_thread + 1);

  // key -> thread -> sequential ops
  std::unordered_map<std::uint64_t, std::vector<std::vector<Op>>> per_key;

  std::uint64_t last_index = 0;
  bool first = true;
  for (const auto& e : events) {
    if (!first && e.index <= last_index) {
      throw std::invalid_argument("history: event indices not strictly increasing");
    }
    first = false;
    last_index = e.index;
    Pending& p = pending[e.thread];
    if (e.phase == Phase::kInvoke) {
      if (p.active) throw std::invalid_argument("history: invoke while op pending");
      p = Pending{true, e.op, e.key, e.index};
    } else {
      if (!p.active || p.op != e.op || p.key != e.key) {
        throw std::invalid_argument("history: response does not match pending invoke");
      }
      auto& threads = per_key[e.key];
      if (threads.size() <= e.thread) threads.resize(max_thread + 1);
      threads[e.thread].push_back(Op{p.invoke, e.index, e.op, e.result});
      p.active = false;
    }
  }
  for (const auto& p : pending) {
    if (p.active) throw std::invalid_argument("history: dangling invoke");
  }

  std::vector<KeyVerdict> verdicts;
  verdicts.reserve(per_key.size());
  for (auto& [key, threads] : per_key) {
    SingleKeyChecker checker(std::move(threads), initially_present);
    verdicts.push_back(KeyVerdict{key, checker.run()});
  }
  std::sort(verdicts.begin(), verdicts.end(),
            [](const KeyVerdict& a, const KeyVerdict& b) { return a.key < b.key; });
  return verdicts;
}

std::vector<KeyVerdict> check_per_key_history(HistoryRecorder&& recorder,
                                              bool initially_present) {
  const std::size_t nthreads = recorder.buffers_.size();
  std::unordered_map<std::uint64_t, std::vector<std::vector<Op>>> per_key;

  // Events within one buffer are already in program (and index) order, and
  // the checker only compares indices across threads, so no merge is needed.
  for (std::size_t t = 0; t < nthreads; ++t) {
    auto& events = recorder.buffers_[t]->events;
    bool pending = false;
    HistoryEvent invoke{};
    for (const auto& e : events) {
      if (e.phase == Phase::kInvoke) {
        if (pending) throw std::invalid_argument("history: invoke while op pending");
        invoke = e;
        pending = true;
      } else {
        if (!pending || invoke.op != e.op || invoke.key != e.key) {
          throw std::invalid_argument("history: response does not match pending invoke");
        }
        auto& threads = per_key[e.key];
        if (threads.empty()) threads.resize(nthreads);
        threads[t].push_back(Op{invoke.index, e.index, e.op, e.result});
        pending = false;
      }
    }
    if (pending) throw std::invalid_argument("history: dangling invoke");
    events = {};
  }

  std::vector<KeyVerdict> verdicts;
  verdicts.reserve(per_key.size());
  for (auto& [key, threads] : per_key) {
    SingleKeyChecker checker(std::move(threads), initially_present);
    verdicts.push_back(KeyVerdict{key, checker.run()});
    threads = {};
  }
  std::sort(verdicts.begin(), verdicts.end(),
            [](const KeyVerdict& a, const KeyVerdict& b) { return a.key < b.key; });
  return verdicts;
}

}  // namespace rhh::verify
