#pragma once

// Arrival-order sampling and the event analyzers behind the lower-bound
// experiments: bad nodes and bad subtrees of the fat tree, fully loaded nodes,
// and bad permutations of the recursive tree.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loadbal/graphbal.hpp"
#include "loadbal/rng.hpp"
#include "loadbal/schedule.hpp"

namespace loadbal {

// Uniform permutation of [0, count).
ArrivalSchedule sample_permutation(std::size_t count, Rng& rng);

// i.i.d. U[0,1) arrival times, redrawn until distinct; the ascending order
// induces the permutation.
ArrivalSchedule sample_arrival_times(std::size_t count, Rng& rng);

// Tree edges by ascending edge height (the height of the parent endpoint),
// uniformly shuffled within each height class.
ArrivalSchedule bottom_up_order(const Tree& tree, Rng& rng);

struct ShuffledTree {
  Tree tree;
  std::vector<NodeId> new_id;  // original node -> shuffled node

  // Per-node values of the shuffled tree, back in original node order.
  template <typename T>
  std::vector<T> unshuffle(std::span<const T> shuffled) const {
    std::vector<T> out(shuffled.size());
    for (std::size_t v = 0; v < new_id.size(); ++v) out[v] = shuffled[static_cast<std::size_t>(new_id[v])];
    return out;
  }
};

// Uniformly random relabeling of node ids; structure and labels travel with
// the nodes.
ShuffledTree shuffle_labels(const Tree& tree, Rng& rng);

// 1-based interval index h with time in I_h = ((h-1)/k, h/k]; a time on a
// boundary goes to the lower interval and 0 goes to I_1.
std::int32_t interval_of(double time, std::int32_t k);

// Internal nodes u of height h with at least k^2 child edges whose times lie
// in I_h. `times` is indexed by edge id. Ascending node ids.
std::vector<NodeId> detect_bad_nodes(const Tree& tree, std::span<const double> times, std::int32_t k,
                                     int threads = 0);
std::vector<NodeId> detect_bad_nodes_serial(const Tree& tree, std::span<const double> times, std::int32_t k);

// Fraction of internal nodes that are bad.
double bad_node_fraction(const Tree& tree, std::span<const NodeId> bad_nodes);

struct BadSubtree {
  std::vector<NodeId> nodes;    // witness nodes, root first
  std::vector<NodeId> parents;  // tree parent of each witness node; kNoNode for the witness root
};

// Greedy top-down search for a full k^2-ary height-k subtree, rooted at the
// tree root, whose internal nodes are bad and whose chosen child edges arrive
// in the interval of their parent's height.
std::optional<BadSubtree> find_bad_subtree(const Tree& tree, std::span<const double> times, std::int32_t k);
std::optional<BadSubtree> find_bad_subtree(const Tree& tree, std::span<const double> times, std::int32_t k,
                                           std::span<const NodeId> bad_nodes);

// Per node: in-degree >= height.
std::vector<std::uint8_t> check_fully_loaded(const Tree& tree, const Orientation& orientation);

enum class RootEdge {
  kAbsent,   // the root has no parent edge; that clause is vacuous
  kPhantom,  // item edge_count() of the schedule is a parent edge for the root
};

// Whether the arrival order is bad for the edge above `child`: u's parent edge
// arrives after it, and so does every other child edge (u, v') with
// label(v') >= label(child). Throws kDomain for the root or an unlabeled tree,
// kInvalidSchedule on a size mismatch.
bool is_bad_permutation(const Tree& tree, const ArrivalSchedule& schedule, NodeId child,
                        RootEdge root_edge = RootEdge::kAbsent);
bool is_bad_permutation(const Tree& tree, std::span<const std::int32_t> positions, NodeId child,
                        RootEdge root_edge = RootEdge::kAbsent);

// Child of the root with the given label whose edge arrives first, or kNoNode.
NodeId first_root_child_with_label(const Tree& tree, std::span<const std::int32_t> positions,
                                   std::int32_t label);

struct TailCount {
  std::int64_t samples = 0;
  std::int64_t hits = 0;  // samples with X < threshold

  double frequency() const { return samples == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(samples); }
};

// X = sum of `bernoullis` independent Bernoulli(p); counts X < threshold over
// `samples` draws. Work is split into fixed chunks with derived seeds, so the
// count does not depend on the thread count.
TailCount empirical_binomial_lower_tail(std::int64_t samples, std::int32_t bernoullis, double p,
                                        std::int32_t threshold, std::uint64_t seed, int threads = 0);
TailCount empirical_binomial_lower_tail_serial(std::int64_t samples, std::int32_t bernoullis, double p,
                                               std::int32_t threshold, std::uint64_t seed);

}  // namespace loadbal
