#include "loadbal/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "loadbal/error.hpp"

namespace loadbal {

namespace {

class BranchAndBound {
 public:
  explicit BranchAndBound(const Instance& instance)
      : instance_(instance), loads_(static_cast<std::size_t>(instance.machine_count), 0.0) {
    order_.resize(instance.job_count());
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](JobId a, JobId b) {
      return instance.jobs[static_cast<std::size_t>(a)].min_load() >
             instance.jobs[static_cast<std::size_t>(b)].min_load();
    });
    // suffix_floor_[d] = largest smallest-load among jobs d.. in search order.
    suffix_floor_.assign(order_.size() + 1, 0.0);
    for (std::size_t d = order_.size(); d-- > 0;) {
      suffix_floor_[d] = std::max(suffix_floor_[d + 1], instance.jobs[static_cast<std::size_t>(order_[d])].min_load());
    }
    current_.assign(instance.job_count(), kUnassigned);
  }

  OptResult solve() {
    seed_with_greedy();
    search(0, 0.0);
    Assignment witness(instance_.job_count());
    for (std::size_t j = 0; j < best_assignment_.size(); ++j) witness.assign(static_cast<JobId>(j), best_assignment_[j]);
    return OptResult{best_, std::move(witness)};
  }

 private:
  // Least-resulting-load greedy in search order gives the first incumbent.
  void seed_with_greedy() {
    std::vector<double> loads(loads_.size(), 0.0);
    best_assignment_.assign(instance_.job_count(), kUnassigned);
    for (JobId j : order_) {
      const Job& job = instance_.jobs[static_cast<std::size_t>(j)];
      MachineId pick = kUnassigned;
      double pick_load = std::numeric_limits<double>::infinity();
      for (const auto& [machine, p] : job.loads) {
        const double after = loads[static_cast<std::size_t>(machine)] + p;
        if (after < pick_load) {
          pick_load = after;
          pick = machine;
        }
      }
      loads[static_cast<std::size_t>(pick)] = pick_load;
      best_assignment_[static_cast<std::size_t>(j)] = pick;
    }
    best_ = loads.empty() ? 0.0 : *std::max_element(loads.begin(), loads.end());
  }

  void search(std::size_t depth, double current_max) {
    if (std::max(current_max, suffix_floor_[depth]) >= best_) return;
    if (depth == order_.size()) {
      best_ = current_max;
      best_assignment_ = current_;
      return;
    }
    const JobId j = order_[depth];
    const Job& job = instance_.jobs[static_cast<std::size_t>(j)];
    for (const auto& [machine, p] : job.loads) {
      auto& slot = loads_[static_cast<std::size_t>(machine)];
      const double before = slot;
      const double after = before + p;
      if (after >= best_) continue;
      slot = after;
      current_[static_cast<std::size_t>(j)] = machine;
      search(depth + 1, std::max(current_max, after));
      slot = before;
    }
    current_[static_cast<std::size_t>(j)] = kUnassigned;
  }

  const Instance& instance_;
  std::vector<double> loads_;
  std::vector<JobId> order_;
  std::vector<double> suffix_floor_;
  std::vector<MachineId> current_;
  std::vector<MachineId> best_assignment_;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace

OptResult brute_force_opt(const Instance& instance, double search_space_limit) {
  if (auto violations = validate(instance); !violations.empty()) {
    throw Error(ErrorCode::kInfeasibleInstance, violations.front());
  }
  double space = 1.0;
  for (const Job& job : instance.jobs) {
    space *= static_cast<double>(job.feasible_count());
    if (space > search_space_limit) {
      throw Error(ErrorCode::kSearchSpaceTooLarge,
                  "search space exceeds " + std::to_string(search_space_limit) + " assignments");
    }
  }
  if (instance.job_count() == 0) return OptResult{0.0, Assignment(0)};
  return BranchAndBound(instance).solve();
}

double opt_lower_bound(std::span<const Job> jobs, std::int32_t machine_count) {
  double largest = 0.0;
  double total = 0.0;
  for (const Job& job : jobs) {
    const double p = job.min_load();
    largest = std::max(largest, p);
    total += p;
  }
  return std::max(largest, total / static_cast<double>(std::max(machine_count, 1)));
}

ChernoffBound chernoff_lower_tail(double mu, double delta) {
  if (!(mu > 0.0)) throw Error(ErrorCode::kDomain, "mu must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorCode::kDomain, "delta must lie in [0, 1)");
  // ln of the tight base: -delta - (1 - delta) ln(1 - delta).
  const double log_base = -delta - (1.0 - delta) * std::log1p(-delta);
  return ChernoffBound{std::exp(mu * log_base), std::exp(-mu * delta * delta / 2.0)};
}

std::vector<double> Increment::dense(std::int32_t machine_count) const {
  std::vector<double> v(static_cast<std::size_t>(machine_count), 0.0);
  if (machine != kUnassigned) v[static_cast<std::size_t>(machine)] = load;
  return v;
}

std::vector<Increment> ledger_increments(const Instance& instance, const Assignment& sigma_star,
                                         const ArrivalSchedule& order) {
  if (!sigma_star.is_total() || sigma_star.size() != instance.job_count()) {
    throw Error(ErrorCode::kIncompleteAssignment, "optimal assignment must be total");
  }
  std::vector<Increment> out;
  out.reserve(order.size());
  for (std::int32_t j : order.order) {
    const MachineId machine = *sigma_star.machine_of(j);
    const auto load = instance.jobs[static_cast<std::size_t>(j)].load_on(machine);
    if (!load) throw Error(ErrorCode::kInfeasibleAssignment, "optimal assignment uses an infinite load");
    out.push_back(Increment{machine, *load});
  }
  return out;
}

}  // namespace loadbal
