#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace loadbal {

// Arrival order over items [0, count). Either a plain permutation, or
// per-item arrival times whose ascending order induces the permutation.
struct ArrivalSchedule {
  std::vector<std::int32_t> order;  // order[t] = item arriving at step t
  std::vector<double> times;        // empty unless built from arrival times

  static ArrivalSchedule from_permutation(std::vector<std::int32_t> order);
  // Ties in `times` are broken by item index.
  static ArrivalSchedule from_times(std::vector<double> times);

  std::size_t size() const { return order.size(); }
  bool has_times() const { return !times.empty(); }

  // position[item] = step at which the item arrives.
  std::vector<std::int32_t> positions() const;

  // True iff `order` is a bijection on [0, size()).
  bool is_permutation() const;
};

}  // namespace loadbal
