#pragma once

// Softmax-potential scheduler for unrelated machines under random arrival
// order. The potential of a load vector x is psi(x) = (1/a) ln sum_i e^{a x_i};
// each arriving job goes to the machine whose potential increase is least,
// and the scheduler forgets its loads once half the jobs have arrived.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "loadbal/core.hpp"
#include "loadbal/schedule.hpp"

namespace loadbal {

// Lower clamp on the sharpness for tiny m, where ln ln m <= 0.
inline constexpr double kMinSharpness = 0.01;

struct PotentialParams {
  double a = 1.0;
  std::int32_t machine_count = 1;

  // a = max(ln ln m / 6, kMinSharpness).
  static PotentialParams for_machines(std::int32_t machine_count);
};

double choose_a(std::int32_t machine_count);

// Log-sum-exp with max subtraction.
double psi(std::span<const double> x, double a);

// Softmax distribution e^{a x_i} / sum_i' e^{a x_i'}.
std::vector<double> grad_psi(std::span<const double> x, double a);

// psi(x + p e_machine) - psi(x). Nonnegative, exactly zero for p = 0.
double delta_psi(std::span<const double> x, MachineId machine, double p, double a);

struct StepEvent {
  std::size_t step = 0;                    // 0-based arrival index
  JobId job = 0;
  MachineId machine = kUnassigned;
  double normalized_load = 0.0;            // the single nonzero entry of w^t
  std::span<const double> virtual_before;  // s^{t-1}, normalized units
  bool phase_reset = false;                // virtual loads zeroed just before this step
};

using StepObserver = std::function<void(const StepEvent&)>;

// Scheduler state for one run. Virtual loads are in units of the current guess
// and are reset at the phase boundary and by the doubling wrapper; true loads
// are raw and never reset.
class SoftmaxScheduler {
 public:
  SoftmaxScheduler(PotentialParams params, std::size_t job_count);

  // Places one job and returns the chosen machine. Ties go to the lowest
  // machine index. Throws kGuessTooSmall when the guess cap leaves no
  // machine, kInfeasibleInstance when the job has no finite load at all.
  MachineId step(const Job& job);

  // Loads are divided by `guess`; with `cap` set, raw loads >= guess count as
  // infinite.
  void set_guess(double guess, bool cap);
  double guess() const { return guess_; }

  void reset_virtual_loads() { virtual_.reset(); }
  void set_observer(StepObserver observer) { observer_ = std::move(observer); }

  const LoadVector& virtual_loads() const { return virtual_; }
  const LoadVector& true_loads() const { return true_; }
  std::size_t steps_taken() const { return step_; }
  std::size_t phase_boundary() const { return boundary_; }
  const PotentialParams& params() const { return params_; }

 private:
  PotentialParams params_;
  std::size_t job_count_;
  std::size_t boundary_;
  std::size_t step_ = 0;
  double guess_ = 1.0;
  bool cap_ = false;
  LoadVector virtual_;
  LoadVector true_;
  StepObserver observer_;
};

// Runs the two-phase scheduler over `order` with loads taken as already
// normalized. Throws kInvalidSchedule if `order` is not a permutation of the
// jobs.
Assignment softmax_run(const Instance& instance, const ArrivalSchedule& order,
                       const PotentialParams& params, StepObserver observer = {});

struct DoublingOutcome {
  Assignment assignment;
  double final_guess = 1.0;
  std::size_t doublings = 0;
};

// Two-phase scheduler behind a doubling guess g of OPT. Each job's loads are
// divided by g and loads >= g treated as infinite. g starts at the first
// job's smallest load (1 if that is 0) and doubles, zeroing the virtual
// loads, whenever a job is unplaceable or 2 * LB > g, where LB is the largest
// smallest-load among jobs placed so far.
DoublingOutcome doubling_wrap(const Instance& instance, const ArrivalSchedule& order,
                              const PotentialParams& params, StepObserver observer = {});

}  // namespace loadbal
