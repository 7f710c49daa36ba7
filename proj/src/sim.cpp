#include "loadbal/sim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "loadbal/error.hpp"

namespace loadbal {

namespace {

void check_times(const Tree& tree, std::span<const double> times, std::int32_t k) {
  if (times.size() != static_cast<std::size_t>(tree.edge_count())) {
    throw Error(ErrorCode::kInvalidSchedule, "need one arrival time per edge");
  }
  if (k < 1) throw Error(ErrorCode::kDomain, "k must be positive");
}

bool node_is_bad(const Tree& tree, std::span<const double> times, std::int32_t k, NodeId u) {
  const auto h = tree.height(u);
  if (h == 0) return false;
  const auto need = static_cast<std::int64_t>(k) * k;
  std::int64_t count = 0;
  for (NodeId c : tree.children(u)) {
    if (interval_of(times[static_cast<std::size_t>(tree.edge_of(c))], k) == h) ++count;
  }
  return count >= need;
}

std::vector<NodeId> collect(const std::vector<std::uint8_t>& flags) {
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < flags.size(); ++v) {
    if (flags[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

ArrivalSchedule sample_permutation(std::size_t count, Rng& rng) {
  std::vector<std::int32_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return ArrivalSchedule::from_permutation(std::move(order));
}

ArrivalSchedule sample_arrival_times(std::size_t count, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> times(count);
  for (double& t : times) t = unit(rng);
  for (;;) {
    auto sched = ArrivalSchedule::from_times(times);
    bool collision = false;
    for (std::size_t i = 1; i < sched.order.size(); ++i) {
      const auto prev = static_cast<std::size_t>(sched.order[i - 1]);
      const auto cur = static_cast<std::size_t>(sched.order[i]);
      if (times[prev] == times[cur]) {
        times[cur] = unit(rng);
        collision = true;
      }
    }
    if (!collision) return sched;
  }
}

ArrivalSchedule bottom_up_order(const Tree& tree, Rng& rng) {
  std::vector<std::int32_t> order(static_cast<std::size_t>(tree.edge_count()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    return tree.height(tree.edge_parent(a)) < tree.height(tree.edge_parent(b));
  });
  return ArrivalSchedule::from_permutation(std::move(order));
}

ShuffledTree shuffle_labels(const Tree& tree, Rng& rng) {
  const auto n = static_cast<std::size_t>(tree.node_count());
  std::vector<NodeId> new_id(n);
  std::iota(new_id.begin(), new_id.end(), 0);
  std::shuffle(new_id.begin(), new_id.end(), rng);

  std::vector<NodeId> parents(n, kNoNode);
  std::vector<std::int32_t> labels;
  if (tree.has_labels()) labels.assign(n, kNoLabel);
  for (std::size_t v = 0; v < n; ++v) {
    const NodeId p = tree.parent(static_cast<NodeId>(v));
    const auto nv = static_cast<std::size_t>(new_id[v]);
    parents[nv] = p == kNoNode ? kNoNode : new_id[static_cast<std::size_t>(p)];
    if (!labels.empty()) labels[nv] = tree.labels()[v];
  }
  return ShuffledTree{Tree::from_parents(std::move(parents), std::move(labels)), std::move(new_id)};
}

std::int32_t interval_of(double time, std::int32_t k) {
  const auto h = static_cast<std::int32_t>(std::ceil(time * k));
  return std::clamp(h, 1, k);
}

std::vector<NodeId> detect_bad_nodes(const Tree& tree, std::span<const double> times, std::int32_t k,
                                     int threads) {
  check_times(tree, times, k);
  const auto n = tree.node_count();
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
  for (NodeId u = 0; u < n; ++u) {
    flags[static_cast<std::size_t>(u)] = node_is_bad(tree, times, k, u) ? 1 : 0;
  }
  return collect(flags);
}

std::vector<NodeId> detect_bad_nodes_serial(const Tree& tree, std::span<const double> times, std::int32_t k) {
  check_times(tree, times, k);
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(tree.node_count()), 0);
  for (NodeId u = 0; u < tree.node_count(); ++u) {
    flags[static_cast<std::size_t>(u)] = node_is_bad(tree, times, k, u) ? 1 : 0;
  }
  return collect(flags);
}

double bad_node_fraction(const Tree& tree, std::span<const NodeId> bad_nodes) {
  std::int64_t internal = 0;
  for (NodeId u = 0; u < tree.node_count(); ++u) internal += tree.is_leaf(u) ? 0 : 1;
  return internal == 0 ? 0.0 : static_cast<double>(bad_nodes.size()) / static_cast<double>(internal);
}

std::optional<BadSubtree> find_bad_subtree(const Tree& tree, std::span<const double> times, std::int32_t k) {
  const auto bad = detect_bad_nodes(tree, times, k);
  return find_bad_subtree(tree, times, k, bad);
}

std::optional<BadSubtree> find_bad_subtree(const Tree& tree, std::span<const double> times, std::int32_t k,
                                           std::span<const NodeId> bad_nodes) {
  check_times(tree, times, k);
  std::vector<std::uint8_t> bad(static_cast<std::size_t>(tree.node_count()), 0);
  for (NodeId u : bad_nodes) bad[static_cast<std::size_t>(u)] = 1;

  const auto width = static_cast<std::size_t>(k) * static_cast<std::size_t>(k);
  BadSubtree witness;

  // Grows the witness below u (already recorded); on failure the caller
  // truncates back to its own size.
  auto grow = [&](auto&& self, NodeId u) -> bool {
    const auto h = tree.height(u);
    if (h == 0) return true;
    if (!bad[static_cast<std::size_t>(u)]) return false;
    std::size_t chosen = 0;
    for (NodeId c : tree.children(u)) {
      if (chosen == width) break;
      if (tree.height(c) != h - 1) continue;
      if (interval_of(times[static_cast<std::size_t>(tree.edge_of(c))], k) != h) continue;
      const auto mark = witness.nodes.size();
      witness.nodes.push_back(c);
      witness.parents.push_back(u);
      if (self(self, c)) {
        ++chosen;
      } else {
        witness.nodes.resize(mark);
        witness.parents.resize(mark);
      }
    }
    return chosen == width;
  };

  const NodeId root = tree.root();
  if (tree.height(root) != k) return std::nullopt;
  witness.nodes.push_back(root);
  witness.parents.push_back(kNoNode);
  if (!grow(grow, root)) return std::nullopt;
  return witness;
}

std::vector<std::uint8_t> check_fully_loaded(const Tree& tree, const Orientation& orientation) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(tree.node_count()));
  for (NodeId v = 0; v < tree.node_count(); ++v) {
    out[static_cast<std::size_t>(v)] = orientation.in_degree[static_cast<std::size_t>(v)] >= tree.height(v) ? 1 : 0;
  }
  return out;
}

bool is_bad_permutation(const Tree& tree, const ArrivalSchedule& schedule, NodeId child, RootEdge root_edge) {
  const auto positions = schedule.positions();
  return is_bad_permutation(tree, positions, child, root_edge);
}

bool is_bad_permutation(const Tree& tree, std::span<const std::int32_t> positions, NodeId child,
                        RootEdge root_edge) {
  const auto expected = static_cast<std::size_t>(tree.edge_count()) + (root_edge == RootEdge::kPhantom ? 1 : 0);
  if (positions.size() != expected) {
    throw Error(ErrorCode::kInvalidSchedule, "schedule length does not match the edge set");
  }
  if (!tree.has_labels()) throw Error(ErrorCode::kDomain, "bad permutations need a labeled tree");
  if (child < 0 || child >= tree.node_count() || child == tree.root()) {
    throw Error(ErrorCode::kDomain, "node " + std::to_string(child) + " has no parent edge");
  }

  const auto at = [&](EdgeId e) { return positions[static_cast<std::size_t>(e)]; };
  const auto pos = at(tree.edge_of(child));
  const NodeId u = tree.parent(child);

  if (u != tree.root()) {
    if (at(tree.edge_of(u)) < pos) return false;
  } else if (root_edge == RootEdge::kPhantom) {
    if (at(tree.edge_count()) < pos) return false;
  }

  const auto threshold = *tree.label(child);
  for (NodeId sibling : tree.children(u)) {
    if (sibling == child) continue;
    const auto l = tree.label(sibling);
    if (l && *l >= threshold && at(tree.edge_of(sibling)) < pos) return false;
  }
  return true;
}

NodeId first_root_child_with_label(const Tree& tree, std::span<const std::int32_t> positions,
                                   std::int32_t label) {
  NodeId best = kNoNode;
  std::int32_t best_pos = 0;
  for (NodeId c : tree.children(tree.root())) {
    if (tree.label(c) != label) continue;
    const auto p = positions[static_cast<std::size_t>(tree.edge_of(c))];
    if (best == kNoNode || p < best_pos) {
      best = c;
      best_pos = p;
    }
  }
  return best;
}

namespace {

constexpr std::int64_t kTailChunk = 1 << 14;

std::int64_t tail_chunk(std::int64_t begin, std::int64_t end, std::int32_t bernoullis, double p,
                        std::int32_t threshold, Rng rng) {
  std::bernoulli_distribution coin(p);
  std::int64_t hits = 0;
  for (std::int64_t s = begin; s < end; ++s) {
    std::int32_t x = 0;
    for (std::int32_t i = 0; i < bernoullis; ++i) x += coin(rng) ? 1 : 0;
    hits += x < threshold ? 1 : 0;
  }
  return hits;
}

void check_tail_args(std::int64_t samples, std::int32_t bernoullis, double p) {
  if (samples < 0 || bernoullis < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kDomain, "binomial tail needs samples, n >= 0 and p in [0,1]");
  }
}

}  // namespace

TailCount empirical_binomial_lower_tail(std::int64_t samples, std::int32_t bernoullis, double p,
                                        std::int32_t threshold, std::uint64_t seed, int threads) {
  check_tail_args(samples, bernoullis, p);
  const std::int64_t chunks = (samples + kTailChunk - 1) / kTailChunk;
  std::int64_t hits = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : hits) num_threads(resolve_threads(threads))
  for (std::int64_t c = 0; c < chunks; ++c) {
    const auto begin = c * kTailChunk;
    const auto end = std::min(samples, begin + kTailChunk);
    hits += tail_chunk(begin, end, bernoullis, p, threshold,
                       make_rng(seed, static_cast<std::uint64_t>(c), Stream::kSampling));
  }
  return TailCount{samples, hits};
}

TailCount empirical_binomial_lower_tail_serial(std::int64_t samples, std::int32_t bernoullis, double p,
                                               std::int32_t threshold, std::uint64_t seed) {
  check_tail_args(samples, bernoullis, p);
  const std::int64_t chunks = (samples + kTailChunk - 1) / kTailChunk;
  std::int64_t hits = 0;
  for (std::int64_t c = 0; c < chunks; ++c) {
    const auto begin = c * kTailChunk;
    const auto end = std::min(samples, begin + kTailChunk);
    hits += tail_chunk(begin, end, bernoullis, p, threshold,
                       make_rng(seed, static_cast<std::uint64_t>(c), Stream::kSampling));
  }
  return TailCount{samples, hits};
}

}  // namespace loadbal
