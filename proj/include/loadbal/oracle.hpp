#pragma once

// Offline ground truth: exact OPT for tiny instances, cheap OPT lower
// bounds, the Chernoff lower-tail bound, and the per-step increments of a
// fixed optimal assignment.

#include <cstdint>
#include <span>
#include <vector>

#include "loadbal/core.hpp"
#include "loadbal/schedule.hpp"

namespace loadbal {

inline constexpr double kDefaultSearchSpaceLimit = 1e8;

struct OptResult {
  double makespan = 0.0;
  Assignment witness;
};

// Exact minimum makespan by depth-first branch and bound (jobs by decreasing
// smallest load, pruning on the incumbent). Refuses with
// kSearchSpaceTooLarge when the product of per-job feasible counts exceeds
// `search_space_limit`.
OptResult brute_force_opt(const Instance& instance, double search_space_limit = kDefaultSearchSpaceLimit);

// max(max_j min_i p_ij, sum_j min_i p_ij / m). Never above the OPT of `jobs`.
double opt_lower_bound(std::span<const Job> jobs, std::int32_t machine_count);

struct ChernoffBound {
  double tight = 1.0;       // (e^{-delta} / (1-delta)^{1-delta})^mu
  double simplified = 1.0;  // e^{-mu delta^2 / 2}
};

// Bounds on P[X < (1 - delta) mu] for a sum of independent Bernoullis with
// mean mu. Throws kDomain unless mu > 0 and 0 <= delta < 1.
ChernoffBound chernoff_lower_tail(double mu, double delta);

// The load a fixed assignment adds at one arrival step: `load` on `machine`,
// zero elsewhere.
struct Increment {
  MachineId machine = kUnassigned;
  double load = 0.0;

  std::vector<double> dense(std::int32_t machine_count) const;
};

struct TrialLedger {
  Assignment optimum;
  std::vector<Increment> increments;  // one per arrival step
};

// o^t for every step t of `order` under `sigma_star`.
std::vector<Increment> ledger_increments(const Instance& instance, const Assignment& sigma_star,
                                         const ArrivalSchedule& order);

}  // namespace loadbal
