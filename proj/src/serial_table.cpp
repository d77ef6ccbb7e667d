#include "rhh/serial_table.hpp"

#include <cassert>
#include <stdexcept>

namespace rhh {

SerialTable::SerialTable(std::uint32_t capacity_log2)
    : capacity_log2_(capacity_log2),
      capacity_(std::uint64_t{1} << capacity_log2),
      mask_(capacity_ - 1),
      cells_(capacity_, kNil) {
  if (capacity_log2 == 0 || capacity_log2 > 40) {
    throw std::invalid_argument("capacity_log2 out of range");
  }
}

void SerialTable::check_key(std::uint64_t key) const {
  if (key == kNil || key > ((std::uint64_t{1} << 62) - 1)) {
    throw std::invalid_argument("key must be in [1, 2^62)");
  }
}

bool SerialTable::add(std::uint64_t key) {
  check_key(key);
  if (count_ == capacity_) {
    throw SaturatedError("serial add: table full");
  }
  std::uint64_t active_key = key;
  std::uint64_t active_dist = 0;
  std::uint64_t i = bucket_of(key);
  while (true) {
    const std::uint64_t cur = cells_[i];
    if (cur == kNil) {
      cells_[i] = active_key;
      ++count_;
      return true;
    }
    if (cur == key) return false;
    const std::uint64_t dist = displacement(cur, i);
    if (dist < active_dist) {
      // Equal distances do not displace: the incumbent keeps its cell.
      cells_[i] = active_key;
      active_key = cur;
      active_dist = dist;
    }
    i = (i + 1) & mask_;
    ++active_dist;
  }
}

std::pair<bool, std::uint64_t> SerialTable::contains_probes(std::uint64_t key) const {
  std::uint64_t i = bucket_of(key);
  std::uint64_t probes = 0;
  for (std::uint64_t dist = 0; dist < capacity_; ++dist, i = (i + 1) & mask_) {
    ++probes;
    const std::uint64_t cur = cells_[i];
    if (cur == key) return {true, probes};
    if (cur == kNil || displacement(cur, i) < dist) return {false, probes};
  }
  return {false, probes};
}

bool SerialTable::contains(std::uint64_t key) const {
  check_key(key);
  return contains_probes(key).first;
}

bool SerialTable::remove(std::uint64_t key) {
  check_key(key);
  std::uint64_t i = bucket_of(key);
  for (std::uint64_t dist = 0; dist < capacity_; ++dist, i = (i + 1) & mask_) {
    const std::uint64_t cur = cells_[i];
    if (cur == kNil || displacement(cur, i) < dist) return false;
    if (cur != key) continue;
    // Backward shift until a Nil cell or an entry already in its home bucket.
    std::uint64_t prev = i;
    std::uint64_t next = (i + 1) & mask_;
    while (cells_[next] != kNil && displacement(cells_[next], next) != 0) {
      cells_[prev] = cells_[next];
      prev = next;
      next = (next + 1) & mask_;
    }
    cells_[prev] = kNil;
    --count_;
    return true;
  }
  return false;
}

std::vector<std::uint64_t> SerialTable::probe_histogram() const {
  std::vector<std::uint64_t> hist;
  for (std::uint64_t i = 0; i < capacity_; ++i) {
    if (cells_[i] == kNil) continue;
    const std::uint64_t d = displacement(cells_[i], i);
    if (hist.size() <= d) hist.resize(d + 1, 0);
    ++hist[d];
  }
  return hist;
}

std::uint64_t SerialTable::max_displacement() const {
  const auto hist = probe_histogram();
  return hist.empty() ? 0 : hist.size() - 1;
}

bool SerialTable::ordering_holds() const {
  for (std::uint64_t i = 0; i < capacity_; ++i) {
    const std::uint64_t next = (i + 1) & mask_;
    if (cells_[next] == kNil) continue;
    const std::uint64_t nd = displacement(cells_[next], next);
    if (cells_[i] == kNil) {
      if (nd != 0) return false;  // entries after a gap must be home
    } else if (nd > displacement(cells_[i], i) + 1) {
      return false;
    }
  }
  return true;
}

ProbeStats probe_stats(std::uint32_t capacity_log2, double load_factor,
                       std::uint64_t seed, std::uint64_t absent_samples) {
  if (load_factor <= 0.0 || load_factor >= 1.0) {
    throw std::invalid_argument("load_factor must be in (0, 1)");
  }
  SerialTable table(capacity_log2);
  const auto target =
      static_cast<std::uint64_t>(load_factor * static_cast<double>(table.capacity()));
  SplitMix64 rng(seed);
  std::vector<std::uint64_t> members;
  members.reserve(target);
  while (members.size() < target) {
    const std::uint64_t key = (rng.next() >> 2) | 1;  // nonzero, fits 62 bits
    if (table.add(key)) members.push_back(key);
  }

  ProbeStats stats;
  std::uint64_t probes = 0;
  for (const std::uint64_t key : members) {
    const auto [found, p] = table.contains_probes(key);
    assert(found);
    probes += p;
  }
  stats.mean_successful =
      members.empty() ? 1.0 : static_cast<double>(probes) / static_cast<double>(members.size());

  probes = 0;
  std::uint64_t sampled = 0;
  while (sampled < absent_samples) {
    const std::uint64_t key = (rng.next() >> 2) | 1;
    const auto [found, p] = table.contains_probes(key);
    if (found) continue;  // key-space is 62 bits; collisions are negligible
    probes += p;
    ++sampled;
  }
  stats.mean_unsuccessful =
      static_cast<double>(probes) / static_cast<double>(absent_samples);
  stats.max_dfb = table.max_displacement();
  return stats;
}

}  // namespace rhh
