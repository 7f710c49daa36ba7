#pragma once

// Jobs, machines, load vectors and assignments for makespan minimization on
// unrelated machines. A job's load on a machine is either a finite
// nonnegative real or infinite; infinite entries are simply absent from the
// job's sparse load list.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace loadbal {

using MachineId = std::int32_t;
using JobId = std::int32_t;

inline constexpr MachineId kUnassigned = -1;

// Absolute tolerance for load conservation checks.
inline constexpr double kConservationTolerance = 1e-9;

struct Job {
  JobId id = 0;
  // Sorted by machine index; at most one entry per machine.
  std::vector<std::pair<MachineId, double>> loads;

  // Builds a job from unsorted (machine, load) entries.
  static Job make(JobId id, std::vector<std::pair<MachineId, double>> loads);

  std::optional<double> load_on(MachineId machine) const;
  // +infinity when the job has no finite load at all.
  double min_load() const;
  std::size_t feasible_count() const { return loads.size(); }
};

struct Instance {
  std::int32_t machine_count = 0;
  std::vector<Job> jobs;

  std::size_t job_count() const { return jobs.size(); }
};

class LoadVector {
 public:
  LoadVector() = default;
  explicit LoadVector(std::size_t machine_count) : values_(machine_count, 0.0) {}
  explicit LoadVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }

  double max() const;
  double total() const;
  void reset();

  bool operator==(const LoadVector&) const = default;

 private:
  std::vector<double> values_;
};

class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::size_t job_count) : machine_(job_count, kUnassigned) {}

  std::size_t size() const { return machine_.size(); }
  void assign(JobId job, MachineId machine) { machine_.at(job) = machine; }
  std::optional<MachineId> machine_of(JobId job) const;
  bool is_total() const;
  std::span<const MachineId> machines() const { return machine_; }

  bool operator==(const Assignment&) const = default;

 private:
  std::vector<MachineId> machine_;
};

// Returns a copy of `loads` with `machine` increased by the job's load there.
// Throws kInfeasibleChoice when the job has no finite load on `machine`.
LoadVector apply(LoadVector loads, const Job& job, MachineId machine);
void apply_in_place(LoadVector& loads, const Job& job, MachineId machine);

// Per-machine totals of a total assignment.
LoadVector machine_loads(const Assignment& assignment, const Instance& instance);

// Max over machines of the summed assigned loads.
// Throws kIncompleteAssignment / kInfeasibleAssignment.
double makespan(const Assignment& assignment, const Instance& instance);

// Every violated Instance/Job invariant, one message per violation. Empty
// means the instance is well formed.
std::vector<std::string> validate(const Instance& instance);

nlohmann::json to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& j);

}  // namespace loadbal
