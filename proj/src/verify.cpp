#include "rhh/verify.hpp"

#include <algorithm>
#include <array>
#include <barrier>
#include <cassert>
#include <chrono>
#include <ostream>
#include <semaphore>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "rhh/kcas.hpp"
#include "rhh/util.hpp"

namespace rhh::verify {

namespace {

using kcas::Cell;

inline TaggedWord val(std::uint64_t payload) { return TaggedWord::value(payload); }

constexpr std::size_t kMismatchListCap = 16;

}  // namespace

void AuditReport::print(std::ostream& os) const {
  os << "audit: " << (passed() ? "pass" : "FAIL") << "\n"
     << "  ordering violations: " << ordering_violations.size() << "\n"
     << "  orphaned descriptor refs: " << orphaned_refs << "\n"
     << "  membership mismatches: " << membership_mismatches.size() << "\n";
  for (const auto& v : ordering_violations) os << "    " << v << "\n";
  for (const auto& m : membership_mismatches) os << "    " << m << "\n";
}

AuditReport audit_cells(std::span<const std::uint64_t> raw_cells,
                        std::uint32_t capacity_log2) {
  AuditReport report;
  const std::uint64_t capacity = std::uint64_t{1} << capacity_log2;
  const std::uint64_t mask = capacity - 1;
  assert(raw_cells.size() == capacity);

  const auto payload_at = [&](std::uint64_t i) -> std::uint64_t {
    const TaggedWord w = TaggedWord::from_raw(raw_cells[i]);
    return w.is_value() ? w.payload() : 0;
  };
  const auto dfb = [&](std::uint64_t key, std::uint64_t i) {
    return (i - (mix64(key) & mask)) & mask;
  };

  for (std::uint64_t i = 0; i < capacity; ++i) {
    const TaggedWord w = TaggedWord::from_raw(raw_cells[i]);
    if (!w.is_value()) {
      ++report.orphaned_refs;
      continue;
    }
    if (w.payload() == 0) continue;
    const std::uint64_t d = dfb(w.payload(), i);
    if (report.probe_histogram.size() <= d) report.probe_histogram.resize(d + 1, 0);
    ++report.probe_histogram[d];
  }

  for (std::uint64_t i = 0; i < capacity; ++i) {
    const std::uint64_t next = (i + 1) & mask;
    const std::uint64_t nk = payload_at(next);
    if (nk == 0) continue;
    const std::uint64_t nd = dfb(nk, next);
    const std::uint64_t ck = payload_at(i);
    if (ck == 0) {
      if (nd != 0 && report.ordering_violations.size() < kMismatchListCap) {
        report.ordering_violations.push_back(
            "cell " + std::to_string(next) + " has DFB " + std::to_string(nd) +
            " directly after a gap");
      }
    } else if (nd > dfb(ck, i) + 1) {
      if (report.ordering_violations.size() < kMismatchListCap) {
        report.ordering_violations.push_back(
            "cell " + std::to_string(next) + " DFB jumps from " +
            std::to_string(dfb(ck, i)) + " to " + std::to_string(nd));
      }
    }
  }
  return report;
}

AuditReport audit_quiescent(RobinHoodTable& table) {
  AuditReport report = audit_cells(table.snapshot_raw(), table.capacity_log2());

  const auto cells = table.snapshot();
  std::unordered_set<std::uint64_t> members;
  for (const auto key : cells) {
    if (key != RobinHoodTable::kNil) members.insert(key);
  }
  for (const auto key : members) {
    if (!table.contains(key)) {
      if (report.membership_mismatches.size() < kMismatchListCap) {
        report.membership_mismatches.push_back(
            "stored key " + std::to_string(key) + " not found by contains");
      }
    }
  }
  SplitMix64 rng(0x5eedULL);
  for (int i = 0; i < 64; ++i) {
    std::uint64_t key = (rng.next() >> 2) | 1;
    if (members.contains(key)) continue;
    if (table.contains(key)) {
      if (report.membership_mismatches.size() < kMismatchListCap) {
        report.membership_mismatches.push_back(
            "absent key " + std::to_string(key) + " reported present");
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Directed races
// ---------------------------------------------------------------------------

namespace {

// Marks the thread whose operation the scenario pauses.
thread_local bool tl_gated = false;

struct PauseHooks final : TableHooks {
  TableOp op{};
  std::uint64_t index = UINT64_MAX;
  bool at_commit = false;
  std::atomic<bool> armed{false};
  std::binary_semaphore reached{0};
  std::binary_semaphore release{0};

  void maybe_pause() {
    if (!tl_gated) return;
    if (!armed.exchange(false)) return;
    reached.release();
    release.acquire();
  }
  void on_cell_read(TableOp o, std::uint64_t i, std::uint64_t) override {
    if (!at_commit && o == op && i == index) maybe_pause();
  }
  void before_commit(TableOp o) override {
    if (at_commit && o == op) maybe_pause();
  }
};

// Distinct keys whose home bucket is `bucket` for a table of 2^capacity_log2.
std::vector<std::uint64_t> mine_keys(std::uint32_t capacity_log2,
                                     std::uint64_t bucket, std::size_t n,
                                     std::uint64_t start = 1) {
  const std::uint64_t mask = (std::uint64_t{1} << capacity_log2) - 1;
  std::vector<std::uint64_t> keys;
  for (std::uint64_t k = start; keys.size() < n; ++k) {
    if ((mix64(k) & mask) == bucket) keys.push_back(k);
  }
  return keys;
}

struct GatedRun {
  bool result = false;
  OpStats stats;
};

// Runs `gated_op` in a worker thread, executes `interference` while the
// worker sits at the pause point, then releases it.
template <typename GatedOp, typename Interference>
GatedRun run_gated(PauseHooks& hooks, GatedOp gated_op, Interference interference) {
  GatedRun out;
  hooks.armed.store(true);
  std::thread worker([&] {
    tl_gated = true;
    out.result = gated_op(&out.stats);
    tl_gated = false;
  });
  hooks.reached.acquire();
  interference();
  hooks.release.release();
  worker.join();
  return out;
}

constexpr std::uint32_t kRaceCapLog2 = 5;
constexpr std::uint64_t kRaceBase = 8;  // shard-aligned with shard_log2 = 3

bool race_reader_vs_remove_shift(bool paused) {
  // A searcher walks toward a key while a removal shifts it back behind the
  // read frontier; the stale timestamp must force a retry, never a false
  // negative for a continuously present key.
  RobinHoodTable table(kRaceCapLog2);
  const auto keys = mine_keys(kRaceCapLog2, kRaceBase, 3);
  const std::uint64_t a = keys[0], y = keys[1], v = keys[2];
  table.add(a);  // base
  table.add(y);  // base + 1
  table.add(v);  // base + 2
  if (!paused) {
    OpStats stats;
    table.remove(y);
    return table.contains(v, &stats) && stats.retries == 0;
  }
  PauseHooks hooks;
  hooks.op = TableOp::kContains;
  hooks.index = kRaceBase + 1;  // just read the cell ahead of v
  table.set_hooks(&hooks);
  const GatedRun run = run_gated(
      hooks, [&](OpStats* s) { return table.contains(v, s); },
      [&] { table.remove(y); });
  table.set_hooks(nullptr);
  return run.result && run.stats.retries >= 1 && audit_quiescent(table).passed();
}

bool race_reader_vs_add_displacement(bool paused) {
  // The searched key is absent throughout; a concurrent insertion displaces
  // entries across the probed region, and the reader must re-validate, retry
  // and still answer false.
  RobinHoodTable table(kRaceCapLog2);
  const auto h8 = mine_keys(kRaceCapLog2, kRaceBase, 3);
  const auto h9 = mine_keys(kRaceCapLog2, kRaceBase + 1, 1);
  const std::uint64_t a = h8[0], x = h8[1], q = h8[2], c = h9[0];
  table.add(a);
  table.add(c);
  if (!paused) {
    table.add(x);
    OpStats stats;
    return !table.contains(q, &stats);
  }
  PauseHooks hooks;
  hooks.op = TableOp::kContains;
  hooks.index = kRaceBase;
  table.set_hooks(&hooks);
  const GatedRun run = run_gated(
      hooks, [&](OpStats* s) { return table.contains(q, s); },
      [&] { table.add(x); });
  table.set_hooks(nullptr);
  return !run.result && run.stats.retries >= 1 && audit_quiescent(table).passed();
}

bool race_add_duplicate_vs_shift(bool paused) {
  // The inserted key is already present ahead of the walker; a removal
  // shifts the duplicate behind the walker's read frontier. The commit must
  // fail on the shard validation, and the retry must find the duplicate.
  RobinHoodTable table(kRaceCapLog2);
  const auto h8 = mine_keys(kRaceCapLog2, kRaceBase, 3);
  const auto h11 = mine_keys(kRaceCapLog2, kRaceBase + 3, 1);
  const std::uint64_t a = h8[0], b = h8[1], k = h8[2], c = h11[0];
  table.add(a);  // base
  table.add(b);  // base + 1
  table.add(k);  // base + 2
  table.add(c);  // base + 3, home bucket
  if (!paused) {
    table.remove(b);
    OpStats stats;
    return !table.add(k, &stats);
  }
  PauseHooks hooks;
  hooks.op = TableOp::kAdd;
  hooks.index = kRaceBase + 1;
  table.set_hooks(&hooks);
  const GatedRun run = run_gated(
      hooks, [&](OpStats* s) { return table.add(k, s); },
      [&] { table.remove(b); });
  table.set_hooks(nullptr);
  // A double insert would leave k both where the shift put it and in the
  // walker's claimed cell; the audit plus a single successful remove rule
  // that out.
  if (run.result) return false;
  if (run.stats.retries < 1) return false;
  if (!audit_quiescent(table).passed()) return false;
  if (!table.remove(k)) return false;
  return !table.contains(k);
}

bool race_stale_timestamp_add(bool paused) {
  // An insertion holds a staged descriptor while another insertion advances
  // the same shard's timestamp; the commit must fail and the retried
  // operation must succeed.
  RobinHoodTable table(kRaceCapLog2);
  const auto h8 = mine_keys(kRaceCapLog2, kRaceBase, 3);
  const auto h9 = mine_keys(kRaceCapLog2, kRaceBase + 1, 1);
  const std::uint64_t a = h8[0], x = h8[1], z = h8[2], c = h9[0];
  table.add(a);
  table.add(c);
  if (!paused) {
    table.add(z);
    OpStats stats;
    return table.add(x, &stats) && table.contains(x);
  }
  PauseHooks hooks;
  hooks.op = TableOp::kAdd;
  hooks.at_commit = true;
  table.set_hooks(&hooks);
  const GatedRun run = run_gated(
      hooks, [&](OpStats* s) { return table.add(x, s); },
      [&] { table.add(z); });
  table.set_hooks(nullptr);
  return run.result && run.stats.retries >= 1 && table.contains(x) &&
         table.contains(z) && audit_quiescent(table).passed();
}

}  // namespace

std::vector<std::string> race_scenarios() {
  return {"reader-vs-remove-shift", "reader-vs-add-displacement",
          "add-duplicate-vs-shift", "stale-timestamp-add"};
}

bool run_directed_race(std::string_view scenario) {
  bool paused = true;
  std::string name(scenario);
  constexpr std::string_view kSingleSuffix = "-single";
  if (name.size() > kSingleSuffix.size() &&
      name.ends_with(kSingleSuffix)) {
    paused = false;
    name.resize(name.size() - kSingleSuffix.size());
  }
  if (name == "reader-vs-remove-shift") return race_reader_vs_remove_shift(paused);
  if (name == "reader-vs-add-displacement") {
    return race_reader_vs_add_displacement(paused);
  }
  if (name == "add-duplicate-vs-shift") return race_add_duplicate_vs_shift(paused);
  if (name == "stale-timestamp-add") return race_stale_timestamp_add(paused);
  throw std::invalid_argument("unknown race scenario: " + name);
}

bool linearizability_run(unsigned threads, unsigned keys, double seconds,
                         std::uint64_t seed) {
  RobinHoodTable table(8);
  HistoryRecorder recorder(threads);
  std::atomic<bool> stop{false};
  std::barrier sync(threads + 1);
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      SplitMix64 rng(mix64(seed) ^ t);
      sync.arrive_and_wait();
      while (!stop.load(std::memory_order_relaxed)) {
        const std::uint64_t key = 1 + rng.next() % keys;
        const std::uint64_t pick = rng.next() % 3;
        const OpKind op = pick == 0   ? OpKind::kAdd
                          : pick == 1 ? OpKind::kRemove
                                      : OpKind::kContains;
        recorder.invoke(t, op, key);
        bool result = false;
        switch (op) {
          case OpKind::kAdd: result = table.add(key); break;
          case OpKind::kRemove: result = table.remove(key); break;
          case OpKind::kContains: result = table.contains(key); break;
        }
        recorder.respond(t, op, key, result);
      }
    });
  }
  sync.arrive_and_wait();
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  stop.store(true);
  for (auto& w : workers) w.join();

  const auto verdicts = check_per_key_history(std::move(recorder));
  if (verdicts.empty()) return false;
  for (const auto& verdict : verdicts) {
    if (!verdict.linearizable) return false;
  }
  return audit_quiescent(table).passed();
}

// ---------------------------------------------------------------------------
// K-CAS torture
// ---------------------------------------------------------------------------

namespace {

bool counters_reconcile(std::span<Cell> counters, std::uint64_t expected) {
  for (auto& c : counters) {
    if (kcas::read(c).payload() != expected) return false;
  }
  return true;
}

std::uint64_t torture_increment_loop(std::span<Cell> counters,
                                     const std::atomic<bool>& stop) {
  auto& desc = kcas::thread_descriptor();
  std::uint64_t successes = 0;
  while (!stop.load()) {
    desc.reset();
    for (auto& c : counters) {
      const std::uint64_t v = kcas::read(c).payload();
      desc.add(&c, val(v), val(v + 1));
    }
    if (desc.commit()) ++successes;
  }
  return successes;
}

}  // namespace

bool kcas_torture(unsigned threads, unsigned cells, double seconds,
                  std::uint64_t* total_ops) {
  std::vector<Cell> counters(cells);
  for (auto& c : counters) c.store(0);
  std::atomic<bool> stop{false};
  std::vector<std::uint64_t> successes(threads, 0);
  std::vector<std::thread> workers;
  std::barrier sync(threads + 1);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      sync.arrive_and_wait();
      successes[t] = torture_increment_loop(counters, stop);
    });
  }
  sync.arrive_and_wait();
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  stop.store(true);
  for (auto& w : workers) w.join();
  std::uint64_t total = 0;
  for (const auto s : successes) total += s;
  if (total_ops) *total_ops = total;
  return counters_reconcile(counters, total);
}

bool kcas_torture_fixed(unsigned threads, unsigned cells, std::uint64_t rounds) {
  std::vector<Cell> counters(cells);
  for (auto& c : counters) c.store(0);
  std::vector<std::thread> workers;
  std::barrier sync(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      sync.arrive_and_wait();
      auto& desc = kcas::thread_descriptor();
      for (std::uint64_t done = 0; done < rounds;) {
        desc.reset();
        for (auto& c : counters) {
          const std::uint64_t v = kcas::read(c).payload();
          desc.add(&c, val(v), val(v + 1));
        }
        if (desc.commit()) ++done;
      }
    });
  }
  for (auto& w : workers) w.join();
  return counters_reconcile(counters, threads * rounds);
}

bool kcas_overlap_enumeration(unsigned schedules, std::uint64_t seed) {
  constexpr unsigned kCells = 3;
  constexpr unsigned kOps = 3;
  for (unsigned s = 0; s < schedules; ++s) {
    SplitMix64 rng(mix64(seed + s));
    std::array<std::uint64_t, kCells> initial{};
    std::array<Cell, kCells> cells;
    for (unsigned i = 0; i < kCells; ++i) {
      initial[i] = rng.next() % 4;
      cells[i].store(val(initial[i]).raw);
    }

    struct PlannedOp {
      std::vector<std::uint64_t> locs, expected, desired;
    };
    std::array<PlannedOp, kOps> ops;
    for (auto& op : ops) {
      for (unsigned i = 0; i < kCells; ++i) {
        if (rng.next() % 2 == 0 && !(i == kCells - 1 && op.locs.empty())) continue;
        op.locs.push_back(i);
        // Bias expectations toward the initial value so both outcomes occur.
        op.expected.push_back(rng.next() % 2 ? initial[i] : rng.next() % 4);
        op.desired.push_back(rng.next() % 4);
      }
    }

    std::array<bool, kOps> actual{};
    {
      std::vector<std::thread> workers;
      std::barrier sync(kOps);
      for (unsigned o = 0; o < kOps; ++o) {
        workers.emplace_back([&, o] {
          auto& desc = kcas::thread_descriptor();
          desc.reset();
          for (std::size_t e = 0; e < ops[o].locs.size(); ++e) {
            desc.add(&cells[ops[o].locs[e]], val(ops[o].expected[e]),
                     val(ops[o].desired[e]));
          }
          sync.arrive_and_wait();
          actual[o] = desc.commit();
        });
      }
      for (auto& w : workers) w.join();
    }

    std::array<std::uint64_t, kCells> final_state{};
    for (unsigned i = 0; i < kCells; ++i) {
      final_state[i] = kcas::read(cells[i]).payload();
    }

    // The outcome must match some sequential ordering of the three calls.
    std::array<unsigned, kOps> perm{0, 1, 2};
    std::sort(perm.begin(), perm.end());
    bool reconciled = false;
    do {
      auto state = initial;
      std::array<bool, kOps> sim{};
      for (const unsigned o : perm) {
        bool ok = true;
        for (std::size_t e = 0; e < ops[o].locs.size(); ++e) {
          if (state[ops[o].locs[e]] != ops[o].expected[e]) ok = false;
        }
        sim[o] = ok;
        if (ok) {
          for (std::size_t e = 0; e < ops[o].locs.size(); ++e) {
            state[ops[o].locs[e]] = ops[o].desired[e];
          }
        }
      }
      if (sim == actual && state == final_state) {
        reconciled = true;
        break;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (!reconciled) return false;
  }
  return true;
}

}  // namespace rhh::verify
