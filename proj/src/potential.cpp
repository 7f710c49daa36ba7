#include "loadbal/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loadbal/error.hpp"

namespace loadbal {

namespace {

double max_entry(std::span<const double> x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  return mx;
}

// sum_i e^{a (x_i - mx)}
double shifted_sum(std::span<const double> x, double a, double mx) {
  double sum = 0.0;
  for (double v : x) sum += std::exp(a * (v - mx));
  return sum;
}

// psi(x + p e_i) - psi(x) = (1/a) ln(1 + v_i (e^{ap} - 1)).
double delta_from_weight(double weight, double p, double a) {
  return std::log1p(weight * std::expm1(a * p)) / a;
}

void check_order(const Instance& instance, const ArrivalSchedule& order) {
  if (order.size() != instance.job_count() || !order.is_permutation()) {
    throw Error(ErrorCode::kInvalidSchedule, "arrival order is not a permutation of the jobs");
  }
}

}  // namespace

double choose_a(std::int32_t machine_count) {
  const double m = static_cast<double>(std::max(machine_count, 1));
  if (m <= 1.0) return kMinSharpness;
  return std::max(std::log(std::log(m)) / 6.0, kMinSharpness);
}

PotentialParams PotentialParams::for_machines(std::int32_t machine_count) {
  return PotentialParams{choose_a(machine_count), machine_count};
}

double psi(std::span<const double> x, double a) {
  const double mx = max_entry(x);
  return mx + std::log(shifted_sum(x, a, mx)) / a;
}

std::vector<double> grad_psi(std::span<const double> x, double a) {
  const double mx = max_entry(x);
  std::vector<double> v(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    v[i] = std::exp(a * (x[i] - mx));
    sum += v[i];
  }
  for (double& vi : v) vi /= sum;
  return v;
}

double delta_psi(std::span<const double> x, MachineId machine, double p, double a) {
  const double mx = max_entry(x);
  const double sum = shifted_sum(x, a, mx);
  const double weight = std::exp(a * (x[static_cast<std::size_t>(machine)] - mx)) / sum;
  return delta_from_weight(weight, p, a);
}

SoftmaxScheduler::SoftmaxScheduler(PotentialParams params, std::size_t job_count)
    : params_(params),
      job_count_(job_count),
      boundary_(job_count / 2),
      virtual_(static_cast<std::size_t>(params.machine_count)),
      true_(static_cast<std::size_t>(params.machine_count)) {
  if (!(params.a > 0.0)) throw Error(ErrorCode::kDomain, "potential sharpness must be positive");
  if (params.machine_count < 1) throw Error(ErrorCode::kDomain, "machine count must be positive");
}

void SoftmaxScheduler::set_guess(double guess, bool cap) {
  if (!(guess > 0.0)) throw Error(ErrorCode::kDomain, "guess must be positive");
  guess_ = guess;
  cap_ = cap;
}

MachineId SoftmaxScheduler::step(const Job& job) {
  if (job.loads.empty()) {
    throw Error(ErrorCode::kInfeasibleInstance,
                "job " + std::to_string(job.id) + " has no finite load");
  }

  bool reset = false;
  if (step_ == boundary_ && step_ > 0) {
    virtual_.reset();
    reset = true;
  }

  const auto x = virtual_.values();
  const double a = params_.a;
  const double mx = max_entry(x);
  const double sum = shifted_sum(x, a, mx);

  MachineId best = kUnassigned;
  double best_delta = std::numeric_limits<double>::infinity();
  double best_load = 0.0;
  for (const auto& [machine, raw] : job.loads) {
    if (machine < 0 || machine >= params_.machine_count) {
      throw Error(ErrorCode::kInfeasibleChoice, "machine index out of range");
    }
    if (cap_ && raw >= guess_) continue;
    const double p = raw / guess_;
    const double weight = std::exp(a * (x[static_cast<std::size_t>(machine)] - mx)) / sum;
    const double d = delta_from_weight(weight, p, a);
    // Entries are sorted by machine, so strict < keeps the lowest index on ties.
    if (d < best_delta) {
      best_delta = d;
      best = machine;
      best_load = p;
    }
  }
  if (best == kUnassigned) {
    // Nothing was mutated except a possible phase reset, which a retry would
    // repeat anyway.
    throw Error(ErrorCode::kGuessTooSmall, "job " + std::to_string(job.id) +
                                               " has no load below the guess " +
                                               std::to_string(guess_));
  }

  if (observer_) observer_(StepEvent{step_, job.id, best, best_load, x, reset});

  virtual_[static_cast<std::size_t>(best)] += best_load;
  true_[static_cast<std::size_t>(best)] += *job.load_on(best);
  ++step_;
  return best;
}

Assignment softmax_run(const Instance& instance, const ArrivalSchedule& order,
                       const PotentialParams& params, StepObserver observer) {
  check_order(instance, order);
  SoftmaxScheduler scheduler(params, instance.job_count());
  scheduler.set_observer(std::move(observer));
  Assignment assignment(instance.job_count());
  for (std::int32_t job : order.order) {
    assignment.assign(job, scheduler.step(instance.jobs[static_cast<std::size_t>(job)]));
  }
  return assignment;
}

DoublingOutcome doubling_wrap(const Instance& instance, const ArrivalSchedule& order,
                              const PotentialParams& params, StepObserver observer) {
  check_order(instance, order);
  DoublingOutcome out{Assignment(instance.job_count()), 1.0, 0};
  if (instance.job_count() == 0) return out;

  for (const Job& job : instance.jobs) {
    if (job.loads.empty()) {
      throw Error(ErrorCode::kInfeasibleInstance,
                  "job " + std::to_string(job.id) + " has no finite load");
    }
  }

  SoftmaxScheduler scheduler(params, instance.job_count());
  scheduler.set_observer(std::move(observer));

  const double first_min = instance.jobs[static_cast<std::size_t>(order.order.front())].min_load();
  double guess = first_min > 0.0 ? first_min : 1.0;
  scheduler.set_guess(guess, true);

  auto double_guess = [&] {
    guess *= 2.0;
    ++out.doublings;
    scheduler.set_guess(guess, true);
    scheduler.reset_virtual_loads();
  };

  double lower_bound = 0.0;
  for (std::int32_t id : order.order) {
    const Job& job = instance.jobs[static_cast<std::size_t>(id)];
    for (;;) {
      try {
        out.assignment.assign(id, scheduler.step(job));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kGuessTooSmall) throw;
        double_guess();
      }
    }
    lower_bound = std::max(lower_bound, job.min_load());
    while (2.0 * lower_bound > guess) double_guess();
  }
  out.final_guess = guess;
  return out;
}

}  // namespace loadbal
