#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "walkthroughs.hpp"
#include "rhh/serial_table.hpp"
#include "rhh/tagged_word.hpp"
#include "rhh/util.hpp"
#include "rhh/verify.hpp"

using namespace rhh::verify;

namespace {

std::vector<std::uint64_t> raw_cells_from_serial(const rhh::SerialTable& t) {
  std::vector<std::uint64_t> raw;
  raw.reserve(t.capacity());
  for (const auto key : t.cells()) raw.push_back(rhh::encode_value(key).raw);
  return raw;
}

rhh::SerialTable dense_serial(std::uint32_t capacity_log2, std::uint64_t seed) {
  rhh::SerialTable t(capacity_log2);
  rhh::SplitMix64 rng(seed);
  while (t.size() < t.capacity() / 2) t.add((rng.next() >> 2) | 1);
  return t;
}

HistoryEvent ev(std::uint32_t thread, OpKind op, std::uint64_t key, Phase phase,
                bool result, std::uint64_t index) {
  return HistoryEvent{thread, op, key, phase, result, index};
}

}  // namespace

TEST_CASE("audit passes on an honestly built layout") {
  const auto t = dense_serial(8, 5);
  const auto report = audit_cells(raw_cells_from_serial(t), 8);
  CHECK(report.passed());
  CHECK(report.probe_histogram == t.probe_histogram());
}

TEST_CASE("audit flags a planted displacement jump") {
  auto t = dense_serial(8, 5);
  auto raw = raw_cells_from_serial(t);
  // Plant a key two cells past any position the ordering allows: an empty
  // cell whose left neighbour is also empty.
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const auto here = rhh::TaggedWord::from_raw(raw[i]).payload();
    const auto left = rhh::TaggedWord::from_raw(raw[i - 1]).payload();
    if (here == 0 && left == 0) {
      std::uint64_t key = 1;
      while ((rhh::mix64(key) & (raw.size() - 1)) != (i - 2) % raw.size()) ++key;
      raw[i] = rhh::encode_value(key).raw;
      break;
    }
  }
  const auto report = audit_cells(raw, 8);
  CHECK_FALSE(report.passed());
  CHECK(report.ordering_violations.size() == 1);
}

TEST_CASE("audit flags a leftover descriptor reference") {
  auto t = dense_serial(8, 7);
  auto raw = raw_cells_from_serial(t);
  raw[3] |= 0x1;  // descriptor-reference tag
  const auto report = audit_cells(raw, 8);
  CHECK(report.orphaned_refs == 1);
}

TEST_CASE("live-table audit covers membership both ways") {
  rhh::RobinHoodTable t(8);
  rhh::SplitMix64 rng(9);
  for (int i = 0; i < 150; ++i) t.add(1 + rng.next() % 1000);
  CHECK(audit_quiescent(t).passed());
}

TEST_CASE("sequential add-then-read history is linearizable") {
  const std::vector<HistoryEvent> events{
      ev(0, OpKind::kAdd, 1, Phase::kInvoke, false, 0),
      ev(0, OpKind::kAdd, 1, Phase::kResponse, true, 1),
      ev(0, OpKind::kContains, 1, Phase::kInvoke, false, 2),
      ev(0, OpKind::kContains, 1, Phase::kResponse, true, 3),
  };
  const auto verdicts = check_per_key_history(events);
  REQUIRE(verdicts.size() == 1);
  CHECK(verdicts[0].linearizable);
}

TEST_CASE("a read of a never-added key cannot return true") {
  const std::vector<HistoryEvent> events{
      ev(0, OpKind::kContains, 1, Phase::kInvoke, false, 0),
      ev(0, OpKind::kContains, 1, Phase::kResponse, true, 1),
  };
  const auto verdicts = check_per_key_history(events);
  REQUIRE(verdicts.size() == 1);
  CHECK_FALSE(verdicts[0].linearizable);
}

TEST_CASE("overlapping triple passes exactly when an ordering exists") {
  // add and contains overlap; contains=false linearizes before the add.
  const std::vector<HistoryEvent> ok{
      ev(0, OpKind::kAdd, 2, Phase::kInvoke, false, 0),
      ev(1, OpKind::kContains, 2, Phase::kInvoke, false, 1),
      ev(1, OpKind::kContains, 2, Phase::kResponse, false, 2),
      ev(0, OpKind::kAdd, 2, Phase::kResponse, true, 3),
      ev(1, OpKind::kRemove, 2, Phase::kInvoke, false, 4),
      ev(1, OpKind::kRemove, 2, Phase::kResponse, true, 5),
  };
  CHECK(check_per_key_history(ok)[0].linearizable);

  // contains strictly after a successful add, no remove in between.
  const std::vector<HistoryEvent> bad{
      ev(0, OpKind::kAdd, 2, Phase::kInvoke, false, 0),
      ev(0, OpKind::kAdd, 2, Phase::kResponse, true, 1),
      ev(1, OpKind::kContains, 2, Phase::kInvoke, false, 2),
      ev(1, OpKind::kContains, 2, Phase::kResponse, false, 3),
  };
  CHECK_FALSE(check_per_key_history(bad)[0].linearizable);
}

TEST_CASE("malformed histories are rejected") {
  const std::vector<HistoryEvent> orphan_response{
      ev(0, OpKind::kAdd, 1, Phase::kResponse, true, 0),
  };
  CHECK_THROWS_AS(check_per_key_history(orphan_response), std::invalid_argument);

  const std::vector<HistoryEvent> double_invoke{
      ev(0, OpKind::kAdd, 1, Phase::kInvoke, false, 0),
      ev(0, OpKind::kRemove, 1, Phase::kInvoke, false, 1),
  };
  CHECK_THROWS_AS(check_per_key_history(double_invoke), std::invalid_argument);

  const std::vector<HistoryEvent> dangling{
      ev(0, OpKind::kAdd, 1, Phase::kInvoke, false, 0),
  };
  CHECK_THROWS_AS(check_per_key_history(dangling), std::invalid_argument);
}

TEST_CASE("directed races pass single-threaded with pauses disabled") {
  for (const auto& scenario : race_scenarios()) {
    CAPTURE(scenario);
    CHECK(run_directed_race(scenario + "-single"));
  }
}

TEST_CASE("directed races force a retry and the correct answer") {
  for (const auto& scenario : race_scenarios()) {
    CAPTURE(scenario);
    for (int i = 0; i < 10; ++i) CHECK(run_directed_race(scenario));
  }
}

TEST_CASE("unknown race scenario is an error") {
  CHECK_THROWS_AS(run_directed_race("no-such-schedule"), std::invalid_argument);
}

TEST_CASE("single-threaded counter torture reconciles exactly") {
  std::uint64_t total = 0;
  CHECK(kcas_torture(1, 2, 0.3, &total));
  CHECK(total > 0);
}

TEST_CASE("contended counter torture reconciles exactly") {
  CHECK(kcas_torture(4, 3, 0.5));
}

TEST_CASE("overlap schedules always match a sequential order") {
  CHECK(kcas_overlap_enumeration(500, 7));
}

TEST_CASE("consuming checker agrees with the span checker") {
  HistoryRecorder recorder(2);
  recorder.invoke(0, OpKind::kAdd, 3);
  recorder.invoke(1, OpKind::kContains, 3);
  recorder.respond(1, OpKind::kContains, 3, false);
  recorder.respond(0, OpKind::kAdd, 3, true);
  recorder.invoke(1, OpKind::kContains, 5);
  recorder.respond(1, OpKind::kContains, 5, true);  // impossible for key 5

  const auto events = recorder.collect();
  const auto from_span = check_per_key_history(events);
  const auto from_recorder = check_per_key_history(std::move(recorder));
  REQUIRE(from_span.size() == 2);
  REQUIRE(from_recorder.size() == 2);
  for (std::size_t i = 0; i < from_span.size(); ++i) {
    CHECK(from_span[i].key == from_recorder[i].key);
    CHECK(from_span[i].linearizable == from_recorder[i].linearizable);
  }
  CHECK(from_span[0].linearizable);
  CHECK_FALSE(from_span[1].linearizable);
}

TEST_CASE("short stress run yields linearizable per-key histories") {
  CHECK(linearizability_run(3, 4, 0.4, 21));
}
