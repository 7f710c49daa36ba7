#include "loadbal/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "loadbal/error.hpp"

namespace loadbal {

namespace {

constexpr std::int64_t kAddressableNodes = std::numeric_limits<std::int32_t>::max();

void check_size(std::int64_t nodes, bool allow_large, bool needs_flag, const std::string& what) {
  if (nodes > kAddressableNodes) {
    throw Error(ErrorCode::kSizeLimit, what + " has " + std::to_string(nodes) +
                                           " nodes, beyond addressable node ids");
  }
  if ((needs_flag || nodes > kDefaultNodeLimit) && !allow_large) {
    throw Error(ErrorCode::kSizeLimit,
                what + " has " + std::to_string(nodes) + " nodes; pass the large-instance override");
  }
}

// Saturating at int64 max.
std::int64_t full_tree_nodes(std::int64_t arity, std::int32_t height) {
  std::int64_t total = 0;
  std::int64_t level = 1;
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  for (std::int32_t h = 0; h <= height; ++h) {
    if (total > kMax - level) return kMax;
    total += level;
    if (h < height) {
      if (arity != 0 && level > kMax / arity) return kMax;
      level *= arity;
    }
  }
  return total;
}

}  // namespace

Tree gen_full_tree(std::int32_t arity, std::int32_t height, bool allow_large) {
  if (arity < 1 || height < 0) throw Error(ErrorCode::kDomain, "full tree needs arity >= 1 and height >= 0");
  const std::int64_t nodes = full_tree_nodes(arity, height);
  check_size(nodes, allow_large, false, "full tree");

  std::vector<NodeId> parents(static_cast<std::size_t>(nodes), kNoNode);
  // BFS ids: children of node u are 1 + u*arity ... (u+1)*arity.
  for (std::int64_t v = 1; v < nodes; ++v) parents[static_cast<std::size_t>(v)] = static_cast<NodeId>((v - 1) / arity);
  return Tree::from_parents(std::move(parents));
}

Tree gen_fat_tree(std::int32_t k, bool allow_large) {
  if (k < 1) throw Error(ErrorCode::kDomain, "fat tree needs k >= 1");
  if (k >= 4 && !allow_large) {
    throw Error(ErrorCode::kSizeLimit, "fat tree with k = " + std::to_string(k) +
                                           " needs the large-instance override");
  }
  const std::int64_t d = static_cast<std::int64_t>(k) * k * k * k;
  check_size(full_tree_nodes(d, k), allow_large, k >= 4, "fat tree");
  return gen_full_tree(static_cast<std::int32_t>(d), k, allow_large);
}

std::vector<std::uint64_t> count_recursive_nodes(std::int32_t depth) {
  if (depth < 0) throw Error(ErrorCode::kDomain, "depth must be nonnegative");
  if (depth >= 63) throw Error(ErrorCode::kSizeLimit, "T_D node count overflows for D >= 63");
  std::vector<std::uint64_t> n(static_cast<std::size_t>(depth) + 1);
  n[0] = 1;
  for (std::int32_t d = 1; d <= depth; ++d) {
    unsigned __int128 total = 1;
    for (std::int32_t dp = 0; dp < d; ++dp) {
      total += (static_cast<unsigned __int128>(1) << (depth - dp)) * n[static_cast<std::size_t>(dp)];
      if (total > std::numeric_limits<std::uint64_t>::max()) {
        throw Error(ErrorCode::kSizeLimit, "T_D node count overflows 64 bits for D = " + std::to_string(depth));
      }
    }
    n[static_cast<std::size_t>(d)] = static_cast<std::uint64_t>(total);
  }
  // n(D) <= 4^{D^2}, compared in log2 to stay in range.
  if (std::log2(static_cast<double>(n.back())) > 2.0 * depth * depth + 1e-9) {
    throw Error(ErrorCode::kDomain, "recursive node count exceeds 4^{D^2}");
  }
  return n;
}

Tree gen_recursive_tree(std::int32_t depth, bool allow_large) {
  const auto counts = count_recursive_nodes(depth);
  const auto total = counts.back();
  check_size(total > static_cast<std::uint64_t>(kAddressableNodes) ? kAddressableNodes + 1
                                                                   : static_cast<std::int64_t>(total),
             allow_large, depth >= 6, "T_" + std::to_string(depth));

  std::vector<NodeId> parents;
  std::vector<std::int32_t> labels;
  parents.reserve(total);
  labels.reserve(total);

  // Explicit stack of (parent, label) in place of recursion.
  struct Pending {
    NodeId parent;
    std::int32_t label;
  };
  std::vector<Pending> stack{{kNoNode, depth}};
  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    const auto id = static_cast<NodeId>(parents.size());
    parents.push_back(cur.parent);
    labels.push_back(cur.label);
    for (std::int32_t child = cur.label - 1; child >= 0; --child) {
      const std::int64_t copies = std::int64_t{1} << (depth - child);
      for (std::int64_t c = 0; c < copies; ++c) stack.push_back({id, child});
    }
  }
  return Tree::from_parents(std::move(parents), std::move(labels));
}

AdaptiveAdversary::AdaptiveAdversary(std::int32_t machine_count) : machine_count_(machine_count) {
  if (machine_count < 2 || (machine_count & (machine_count - 1)) != 0) {
    throw Error(ErrorCode::kDomain, "adaptive adversary needs m a power of two, m >= 2");
  }
  total_rounds_ = 0;
  while ((1 << total_rounds_) < machine_count) ++total_rounds_;
  active_.resize(static_cast<std::size_t>(machine_count));
  std::iota(active_.begin(), active_.end(), 0);
}

std::optional<std::vector<Job>> AdaptiveAdversary::next(const std::vector<MachineId>& previous_choices) {
  if (round_ > 0) {
    if (previous_choices.size() != last_round_.size()) {
      throw Error(ErrorCode::kProtocol, "expected one choice per job of the previous round");
    }
    std::vector<MachineId> chosen;
    chosen.reserve(previous_choices.size());
    for (std::size_t i = 0; i < previous_choices.size(); ++i) {
      if (!last_round_[i].load_on(previous_choices[i])) {
        throw Error(ErrorCode::kProtocol, "choice " + std::to_string(previous_choices[i]) +
                                              " is not an endpoint of the offered pair");
      }
      chosen.push_back(previous_choices[i]);
    }
    active_ = std::move(chosen);
    last_round_.clear();
  } else if (!previous_choices.empty()) {
    throw Error(ErrorCode::kProtocol, "first round takes no choices");
  }

  if (active_.size() < 2) return std::nullopt;

  ++round_;
  for (std::size_t i = 0; i + 1 < active_.size(); i += 2) {
    Job job = Job::make(static_cast<JobId>(emitted_.size()), {{active_[i], 1.0}, {active_[i + 1], 1.0}});
    last_round_.push_back(job);
    emitted_.push_back(std::move(job));
  }
  return last_round_;
}

Instance AdaptiveAdversary::instance() const { return Instance{machine_count_, emitted_}; }

Instance classic_pairs_instance(std::int32_t machine_count) {
  AdaptiveAdversary adversary(machine_count);
  std::vector<MachineId> choices;
  while (auto jobs = adversary.next(choices)) {
    choices.clear();
    for (const Job& job : *jobs) choices.push_back(job.loads.front().first);
  }
  return adversary.instance();
}

void validate_planted(const PlantedSpec& spec) {
  const auto m = spec.machine_count;
  const auto n = spec.job_count;
  if (m < 1 || n < m) throw Error(ErrorCode::kDomain, "planted instance needs n >= m >= 1");
  if (!(spec.opt_value > 0.0)) throw Error(ErrorCode::kDomain, "planted OPT must be positive");
  if (spec.feasible_machines < 1 || spec.feasible_machines > m) {
    throw Error(ErrorCode::kDomain, "feasible machines per job must lie in [1, m]");
  }
  if (spec.min_job_size < 0.0) throw Error(ErrorCode::kDomain, "minimum job size must be nonnegative");
  const std::int32_t per_machine_max = (n + m - 1) / m;
  if (per_machine_max * spec.min_job_size > spec.opt_value) {
    throw Error(ErrorCode::kDomain, "jobs of the minimum size cannot fit under the planted OPT");
  }
}

PlantedInstance gen_planted(const PlantedSpec& spec, Rng& rng) {
  validate_planted(spec);
  const auto m = spec.machine_count;
  const auto n = spec.job_count;

  // Hidden machine per job: balanced counts, shuffled.
  std::vector<MachineId> hidden_machine(static_cast<std::size_t>(n));
  for (std::int32_t j = 0; j < n; ++j) hidden_machine[static_cast<std::size_t>(j)] = j % m;
  std::shuffle(hidden_machine.begin(), hidden_machine.end(), rng);

  std::vector<std::vector<JobId>> jobs_on(static_cast<std::size_t>(m));
  for (std::int32_t j = 0; j < n; ++j) jobs_on[static_cast<std::size_t>(hidden_machine[static_cast<std::size_t>(j)])].push_back(j);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> size(static_cast<std::size_t>(n), 0.0);
  for (const auto& group : jobs_on) {
    const double slack = spec.opt_value - static_cast<double>(group.size()) * spec.min_job_size;
    std::vector<double> w(group.size());
    double total = 0.0;
    for (double& x : w) {
      x = 1.0 - unit(rng);  // (0, 1]
      total += x;
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      size[static_cast<std::size_t>(group[i])] = std::min(spec.opt_value, spec.min_job_size + slack * w[i] / total);
    }
  }

  PlantedInstance out{Instance{m, {}}, Assignment(static_cast<std::size_t>(n))};
  out.instance.jobs.reserve(static_cast<std::size_t>(n));
  std::vector<MachineId> others(static_cast<std::size_t>(m));
  for (std::int32_t j = 0; j < n; ++j) {
    const MachineId home = hidden_machine[static_cast<std::size_t>(j)];
    const double p = size[static_cast<std::size_t>(j)];
    std::vector<std::pair<MachineId, double>> loads{{home, p}};
    std::iota(others.begin(), others.end(), 0);
    std::swap(others[static_cast<std::size_t>(home)], others.back());
    // Partial Fisher-Yates over the m-1 non-home machines.
    for (std::int32_t d = 0; d + 1 < spec.feasible_machines; ++d) {
      std::uniform_int_distribution<std::int32_t> pick(d, m - 2);
      std::swap(others[static_cast<std::size_t>(d)], others[static_cast<std::size_t>(pick(rng))]);
      loads.emplace_back(others[static_cast<std::size_t>(d)], p + (spec.opt_value - p) * unit(rng));
    }
    out.instance.jobs.push_back(Job::make(j, std::move(loads)));
    out.hidden.assign(j, home);
  }
  return out;
}

}  // namespace loadbal
