#pragma once

#include <cstdint>
#include <random>

namespace loadbal {

using Rng = std::mt19937_64;

// Independent streams drawn inside one trial.
enum class Stream : std::uint64_t {
  kTrial = 0,
  kOrder = 1,
  kTies = 2,
  kInstance = 3,
  kShuffle = 4,
  kSampling = 5,
};

// (master seed, trial index, stream) -> child seed. Identical triples give
// identical streams regardless of thread count or execution order.
struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
  std::uint64_t stream = 0;

  std::uint64_t child_seed() const;
  Rng make() const { return Rng(child_seed()); }
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Stream stream) {
  return RngSpec{master, trial, static_cast<std::uint64_t>(stream)}.child_seed();
}

inline Rng make_rng(std::uint64_t master, std::uint64_t trial, Stream stream) {
  return Rng(derive_seed(master, trial, stream));
}

}  // namespace loadbal
