// Pilot for the bottom-up greedy loading experiment: full 9-ary tree of
// height 3, edges bottom-to-top, greedy with random ties. Prints the empirical
// frequency of root in-degree >= 3 and the threshold derived from it. The
// acceptance suite asserts the frozen threshold with an independent seed.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

#include "loadbal/generators.hpp"
#include "loadbal/graphbal.hpp"
#include "loadbal/rng.hpp"
#include "loadbal/sim.hpp"

int main(int argc, char** argv) {
  const std::int64_t trials = argc > 1 ? std::atoll(argv[1]) : 100000;
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0x9170u;
  const auto tree = loadbal::gen_full_tree(9, 3);

  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    auto order_rng = loadbal::make_rng(seed, static_cast<std::uint64_t>(t), loadbal::Stream::kOrder);
    auto tie_rng = loadbal::make_rng(seed, static_cast<std::uint64_t>(t), loadbal::Stream::kTies);
    const auto schedule = loadbal::bottom_up_order(tree, order_rng);
    const auto o = loadbal::greedy_run(tree, schedule, tie_rng);
    hits += o.in_degree[static_cast<std::size_t>(tree.root())] >= 3 ? 1 : 0;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  // Four standard errors of a 1000-trial frequency below the pilot estimate.
  const double threshold = p - 4.0 * std::sqrt(p * (1.0 - p) / 1000.0);
  std::printf("trials=%lld seed=%llu frequency=%.6f threshold_1000=%.4f\n", static_cast<long long>(trials),
              static_cast<unsigned long long>(seed), p, std::floor(threshold * 1000.0) / 1000.0);
  return 0;
}
