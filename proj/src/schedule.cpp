#include "loadbal/rng.hpp"
#include "loadbal/schedule.hpp"

#include <algorithm>
#include <numeric>

namespace loadbal {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t RngSpec::child_seed() const {
  return mix64(mix64(mix64(master_seed) ^ trial) ^ (stream * 0xd1342543de82ef95ULL));
}

ArrivalSchedule ArrivalSchedule::from_permutation(std::vector<std::int32_t> order) {
  return ArrivalSchedule{std::move(order), {}};
}

ArrivalSchedule ArrivalSchedule::from_times(std::vector<double> times) {
  std::vector<std::int32_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) { return times[a] < times[b]; });
  return ArrivalSchedule{std::move(order), std::move(times)};
}

std::vector<std::int32_t> ArrivalSchedule::positions() const {
  std::vector<std::int32_t> pos(order.size(), -1);
  for (std::size_t t = 0; t < order.size(); ++t) pos[static_cast<std::size_t>(order[t])] = static_cast<std::int32_t>(t);
  return pos;
}

bool ArrivalSchedule::is_permutation() const {
  std::vector<char> seen(order.size(), 0);
  for (std::int32_t item : order) {
    if (item < 0 || static_cast<std::size_t>(item) >= order.size() || seen[item]) return false;
    seen[item] = 1;
  }
  return true;
}

}  // namespace loadbal
