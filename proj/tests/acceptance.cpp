// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.
// Criterion 9 (multi-thread scaling) needs at least two hardware threads to
// be meaningful; it is still measured and reported honestly on any machine.

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "walkthroughs.hpp"
#include "rhh/harness.hpp"
#include "rhh/rh_table.hpp"
#include "rhh/serial_table.hpp"
#include "rhh/util.hpp"
#include "rhh/verify.hpp"

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail = "") {
  std::cout << (pass ? "PASS" : "FAIL") << "  [" << criterion << "] " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!pass) ++failures;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

void criterion_1_probe_band() {
  double mean = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    mean += rhh::probe_stats(16, 0.8, seed).mean_successful;
  }
  mean /= 5;
  report(1, "mean successful probes at load 0.8 within [2.0, 3.2]",
         mean >= 2.0 && mean <= 3.2, "measured " + fmt(mean));
}

void criterion_2_unsuccessful_growth() {
  double big = 0, small = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    big += rhh::probe_stats(16, 0.8, seed).mean_unsuccessful;
    small += rhh::probe_stats(10, 0.8, seed).mean_unsuccessful;
  }
  report(2, "unsuccessful probes grow with table size", big > small,
         "2^16: " + fmt(big / 5) + ", 2^10: " + fmt(small / 5));
}

template <typename Table>
bool replay_walkthroughs() {
  const walkthroughs::InsertionScenario ins;
  {
    Table t(walkthroughs::kCapacityLog2);
    ins.build(t);
    if (!t.add(ins.v)) return false;
    std::vector<std::uint64_t> cells;
    if constexpr (requires { t.snapshot(); }) {
      cells = t.snapshot();
    } else {
      cells.assign(t.cells().begin(), t.cells().end());
    }
    if (!walkthroughs::cluster_matches(cells, ins.after_insert())) return false;
  }
  {
    const walkthroughs::SearchScenario search;
    Table t(walkthroughs::kCapacityLog2);
    search.build(t);
    if (t.contains(search.u)) return false;
    if (!t.contains(search.q)) return false;
  }
  {
    Table t(walkthroughs::kCapacityLog2);
    ins.build(t);
    if (!t.remove(ins.y)) return false;
    std::vector<std::uint64_t> cells;
    if constexpr (requires { t.snapshot(); }) {
      cells = t.snapshot();
    } else {
      cells.assign(t.cells().begin(), t.cells().end());
    }
    if (!walkthroughs::cluster_matches(cells, ins.after_remove_y())) return false;
  }
  return true;
}

void criterion_3_figure_replays() {
  const bool serial = replay_walkthroughs<rhh::SerialTable>();
  const bool concurrent = replay_walkthroughs<rhh::RobinHoodTable>();
  report(3, "insertion/search/deletion walkthroughs replay exactly",
         serial && concurrent);
}

void criterion_4_differential_fuzz() {
  constexpr int kOps = 1'000'000;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    rhh::RobinHoodTable table(10);
    rhh::SerialTable oracle(10);
    rhh::SplitMix64 rng(rhh::mix64(seed));
    for (int i = 0; i < kOps; ++i) {
      const std::uint64_t key = 1 + rng.next() % 900;
      bool got = false, want = false;
      switch (rng.next() % 3) {
        case 0:
          got = table.add(key);
          want = oracle.add(key);
          break;
        case 1:
          got = table.remove(key);
          want = oracle.remove(key);
          break;
        default:
          got = table.contains(key);
          want = oracle.contains(key);
          break;
      }
      if (got != want) {
        report(4, "differential fuzz against the serial reference", false,
               "divergence at seed " + std::to_string(seed));
        return;
      }
    }
    const auto mine = table.snapshot();
    const auto theirs = oracle.cells();
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (mine[i] != theirs[i]) {
        report(4, "differential fuzz against the serial reference", false,
               "final layout differs at seed " + std::to_string(seed));
        return;
      }
    }
  }
  report(4, "differential fuzz against the serial reference", true,
         "10 seeds x 1e6 ops");
}

void criterion_5_kcas_atomicity() {
  std::uint64_t total = 0;
  const bool torture = rhh::verify::kcas_torture(8, 4, 10.0, &total);
  const bool overlap = rhh::verify::kcas_overlap_enumeration(10'000, 1);
  report(5, "multi-word swap atomicity (torture + overlap schedules)",
         torture && overlap, std::to_string(total) + " swaps reconciled");
}

void criterion_6_linearizability() {
  bool ok = true;
  for (int run = 0; run < 5 && ok; ++run) {
    ok = rhh::verify::linearizability_run(8, 8, 5.0, 100 + run);
  }
  report(6, "per-key linearizability under 8-thread stress", ok, "5 runs");
}

void criterion_7_directed_race() {
  int passes = 0;
  for (int i = 0; i < 100; ++i) {
    passes += rhh::verify::run_directed_race("reader-vs-remove-shift") ? 1 : 0;
  }
  report(7, "reader-vs-remove-shift race retried and answered correctly",
         passes == 100, std::to_string(passes) + "/100");
}

void criterion_8_stress_audit() {
  bool ok = true;
  rhh::harness::WorkloadSpec spec;
  spec.capacity_log2 = 14;
  spec.load_factor = 0.8;
  spec.update_ratio = 0.2;
  spec.threads = 4;
  spec.duration_secs = 1.0;
  for (int trial = 0; trial < 3 && ok; ++trial) {
    rhh::RobinHoodTable table(spec.table_options());
    rhh::harness::prefill(table, spec);
    rhh::harness::run_trial(table, spec, trial);
    ok = rhh::verify::audit_quiescent(table).passed();
  }
  report(8, "quiescent audit after every stress trial", ok, "3 trials");
}

void criterion_9_scaling() {
  rhh::harness::WorkloadSpec spec;
  spec.capacity_log2 = 18;
  spec.load_factor = 0.6;
  spec.update_ratio = 0.1;
  spec.duration_secs = 2.0;
  const unsigned hi = std::min(4u, std::max(1u, std::thread::hardware_concurrency()));

  const auto throughput = [&](unsigned threads) {
    spec.threads = threads;
    rhh::RobinHoodTable table(spec.table_options());
    rhh::harness::prefill(table, spec);
    double best = 0;
    for (int trial = 0; trial < 2; ++trial) {
      best = std::max(best,
                      rhh::harness::run_trial(table, spec, trial).ops_per_us);
    }
    return best;
  };
  const double one = throughput(1);
  const double many = throughput(hi);
  const double ratio = one > 0 ? many / one : 0;
  report(9,
         "read-heavy throughput at " + std::to_string(hi) +
             (hi == 1 ? " thread" : " threads") + " >= 1.3x single-thread",
         ratio >= 1.3,
         "ratio " + fmt(ratio) + " on " +
             std::to_string(std::thread::hardware_concurrency()) +
             " hardware thread(s)");
}

void criterion_10_no_single_thread_retries() {
  rhh::harness::WorkloadSpec spec;
  spec.capacity_log2 = 14;
  spec.duration_secs = 0.3;
  spec.trials = 1;
  const std::vector<double> loads{0.2, 0.4, 0.6, 0.8};
  const std::vector<double> updates{0.1, 0.2};
  const std::vector<unsigned> threads{1};
  const auto results = rhh::harness::run_grid(spec, loads, updates, threads);
  bool ok = true;
  for (const auto& r : results) ok = ok && r.retries_per_op == 0.0;
  report(10, "zero retries across the single-threaded workload grid", ok,
         std::to_string(results.size()) + " records");
}

}  // namespace

int main() {
  criterion_1_probe_band();
  criterion_2_unsuccessful_growth();
  criterion_3_figure_replays();
  criterion_4_differential_fuzz();
  criterion_5_kcas_atomicity();
  criterion_6_linearizability();
  criterion_7_directed_race();
  criterion_8_stress_audit();
  criterion_9_scaling();
  criterion_10_no_single_thread_retries();
  std::cout << (failures == 0 ? "ALL CRITERIA PASS"
                              : std::to_string(failures) + " CRITERIA FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
