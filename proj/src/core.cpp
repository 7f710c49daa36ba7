#include "loadbal/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "loadbal/error.hpp"

namespace loadbal {

Job Job::make(JobId id, std::vector<std::pair<MachineId, double>> loads) {
  std::sort(loads.begin(), loads.end());
  return Job{id, std::move(loads)};
}

std::optional<double> Job::load_on(MachineId machine) const {
  auto it = std::lower_bound(loads.begin(), loads.end(), machine,
                             [](const auto& entry, MachineId m) { return entry.first < m; });
  if (it == loads.end() || it->first != machine) return std::nullopt;
  return it->second;
}

double Job::min_load() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [machine, load] : loads) best = std::min(best, load);
  return best;
}

double LoadVector::max() const {
  double best = 0.0;
  for (double v : values_) best = std::max(best, v);
  return best;
}

double LoadVector::total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

void LoadVector::reset() { std::fill(values_.begin(), values_.end(), 0.0); }

std::optional<MachineId> Assignment::machine_of(JobId job) const {
  MachineId m = machine_.at(job);
  if (m == kUnassigned) return std::nullopt;
  return m;
}

bool Assignment::is_total() const {
  return std::none_of(machine_.begin(), machine_.end(),
                      [](MachineId m) { return m == kUnassigned; });
}

void apply_in_place(LoadVector& loads, const Job& job, MachineId machine) {
  auto load = job.load_on(machine);
  if (!load || machine < 0 || static_cast<std::size_t>(machine) >= loads.size()) {
    throw Error(ErrorCode::kInfeasibleChoice, "job " + std::to_string(job.id) +
                                                  " has no finite load on machine " +
                                                  std::to_string(machine));
  }
  loads[static_cast<std::size_t>(machine)] += *load;
}

LoadVector apply(LoadVector loads, const Job& job, MachineId machine) {
  apply_in_place(loads, job, machine);
  return loads;
}

LoadVector machine_loads(const Assignment& assignment, const Instance& instance) {
  if (assignment.size() != instance.job_count()) {
    throw Error(ErrorCode::kIncompleteAssignment, "assignment size does not match job count");
  }
  LoadVector loads(static_cast<std::size_t>(instance.machine_count));
  for (const Job& job : instance.jobs) {
    auto machine = assignment.machine_of(job.id);
    if (!machine) {
      throw Error(ErrorCode::kIncompleteAssignment, "job " + std::to_string(job.id) + " unassigned");
    }
    auto load = job.load_on(*machine);
    if (!load) {
      throw Error(ErrorCode::kInfeasibleAssignment,
                  "job " + std::to_string(job.id) + " assigned to machine " +
                      std::to_string(*machine) + " with infinite load");
    }
    loads[static_cast<std::size_t>(*machine)] += *load;
  }
  return loads;
}

double makespan(const Assignment& assignment, const Instance& instance) {
  return machine_loads(assignment, instance).max();
}

std::vector<std::string> validate(const Instance& instance) {
  std::vector<std::string> violations;
  if (instance.machine_count < 1) violations.push_back("machine count must be at least 1");
  for (std::size_t idx = 0; idx < instance.jobs.size(); ++idx) {
    const Job& job = instance.jobs[idx];
    const std::string tag = "job " + std::to_string(job.id) + ": ";
    if (job.id != static_cast<JobId>(idx)) {
      violations.push_back(tag + "id does not match position " + std::to_string(idx));
    }
    if (job.loads.empty()) violations.push_back(tag + "no feasible machine");
    for (std::size_t e = 0; e < job.loads.size(); ++e) {
      const auto& [machine, load] = job.loads[e];
      if (machine < 0 || machine >= instance.machine_count) {
        violations.push_back(tag + "machine index out of range (" + std::to_string(machine) + ")");
      }
      if (!std::isfinite(load) || load < 0.0) {
        violations.push_back(tag + "load on machine " + std::to_string(machine) +
                             " is not a finite nonnegative real");
      }
      if (e > 0 && job.loads[e - 1].first >= machine) {
        violations.push_back(tag + "duplicate or unsorted machine entry " + std::to_string(machine));
      }
    }
  }
  return violations;
}

nlohmann::json to_json(const Instance& instance) {
  nlohmann::json jobs = nlohmann::json::array();
  for (const Job& job : instance.jobs) {
    nlohmann::json loads = nlohmann::json::object();
    for (const auto& [machine, load] : job.loads) loads[std::to_string(machine)] = load;
    jobs.push_back({{"id", job.id}, {"loads", std::move(loads)}});
  }
  return {{"machines", instance.machine_count}, {"jobs", std::move(jobs)}};
}

Instance instance_from_json(const nlohmann::json& j) {
  try {
    Instance instance;
    instance.machine_count = j.at("machines").get<std::int32_t>();
    for (const auto& entry : j.at("jobs")) {
      std::vector<std::pair<MachineId, double>> loads;
      for (const auto& [key, value] : entry.at("loads").items()) {
        std::size_t used = 0;
        int machine = std::stoi(key, &used);
        if (used != key.size()) throw Error(ErrorCode::kConfig, "bad machine key '" + key + "'");
        loads.emplace_back(machine, value.get<double>());
      }
      instance.jobs.push_back(Job::make(entry.at("id").get<JobId>(), std::move(loads)));
    }
    return instance;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed instance JSON: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed instance JSON: ") + e.what());
  }
}

}  // namespace loadbal
