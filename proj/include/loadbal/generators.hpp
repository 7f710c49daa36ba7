#pragma once

// Lower-bound instance families and planted-optimum random instances.

#include <cstdint>
#include <optional>
#include <vector>

#include "loadbal/core.hpp"
#include "loadbal/graphbal.hpp"
#include "loadbal/rng.hpp"

namespace loadbal {

// Node budget accepted without the explicit large-instance override.
inline constexpr std::int64_t kDefaultNodeLimit = 2'000'000;

// Complete tree of depth k in which every internal node has k^4 children.
// k >= 4 needs allow_large. Throws kSizeLimit / kDomain.
Tree gen_fat_tree(std::int32_t k, bool allow_large = false);

// Complete `arity`-ary tree of the given height, node ids in BFS order.
Tree gen_full_tree(std::int32_t arity, std::int32_t height, bool allow_large = false);

// n_D(0), ..., n_D(D) for the recursive family T_D, where
// n(d) = 1 + sum_{d' < d} 2^{D-d'} n(d'). Throws kSizeLimit when n(D)
// overflows 64 bits.
std::vector<std::uint64_t> count_recursive_nodes(std::int32_t depth);

// T_D: a node labeled d has exactly 2^{D-d'} children labeled d' for every
// d' < d; the root is labeled D. D >= 6 needs allow_large.
Tree gen_recursive_tree(std::int32_t depth, bool allow_large = false);

// The classic adaptive construction on m = 2^r machines. Each round pairs up
// the machines the algorithm picked in the previous round with unit jobs, so
// after log2 m rounds some machine carries load log2 m.
class AdaptiveAdversary {
 public:
  explicit AdaptiveAdversary(std::int32_t machine_count);

  // First call takes no choices. Later calls take the machine chosen for each
  // job of the previous round, in emission order. Returns nullopt when done.
  // Throws kProtocol when a choice is not an endpoint of its job.
  std::optional<std::vector<Job>> next(const std::vector<MachineId>& previous_choices);

  std::int32_t machine_count() const { return machine_count_; }
  std::int32_t round() const { return round_; }
  std::int32_t total_rounds() const { return total_rounds_; }
  std::int32_t total_jobs() const { return machine_count_ - 1; }
  const std::vector<MachineId>& active() const { return active_; }
  // Everything emitted so far.
  Instance instance() const;

 private:
  std::int32_t machine_count_;
  std::int32_t total_rounds_;
  std::int32_t round_ = 0;
  std::vector<MachineId> active_;
  std::vector<Job> last_round_;
  std::vector<Job> emitted_;
};

// The instance the adversary produces against an algorithm that always takes
// the lower-indexed machine.
Instance classic_pairs_instance(std::int32_t machine_count);

struct PlantedSpec {
  std::int32_t machine_count = 1;
  std::int32_t job_count = 1;
  double opt_value = 1.0;
  // Finite machines per job, hidden machine included.
  std::int32_t feasible_machines = 2;
  double min_job_size = 0.0;
};

struct PlantedInstance {
  Instance instance;
  Assignment hidden;  // makespan opt_value up to rounding
};

// Hidden assignment spreads jobs evenly over machines, sizes summing to
// opt_value per machine. Each job also gets decoy loads in
// [hidden load, opt_value] on feasible_machines - 1 other random machines, so
// every load is at most opt_value and OPT <= opt_value. Throws kDomain for
// an infeasible spec.
PlantedInstance gen_planted(const PlantedSpec& spec, Rng& rng);

// Throws kDomain when no planted instance satisfies `spec`.
void validate_planted(const PlantedSpec& spec);

}  // namespace loadbal
