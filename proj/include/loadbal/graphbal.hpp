#pragma once

// Graph balancing on trees: orient every edge toward one endpoint so that the
// maximum in-degree is small. A tree edge is identified by its child node; the
// edge index space [0, n-1) lists non-root nodes in increasing id order.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "loadbal/core.hpp"
#include "loadbal/rng.hpp"
#include "loadbal/schedule.hpp"

namespace loadbal {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;

inline constexpr NodeId kNoNode = -1;
inline constexpr EdgeId kNoEdge = -1;
inline constexpr std::int32_t kNoLabel = -1;

struct Edge {
  NodeId first = kNoNode;
  NodeId second = kNoNode;
};

class Tree {
 public:
  // Validates a parent array (exactly one kNoNode entry, acyclic) and derives
  // children, depth and height. `labels` is empty or one entry per node with
  // kNoLabel for unlabeled nodes. Throws kInvalidTree.
  static Tree from_parents(std::vector<NodeId> parents, std::vector<std::int32_t> labels = {});

  // Roots an undirected edge list at `root`. Throws kInvalidTree unless the
  // edges form a spanning tree of [0, node_count).
  static Tree from_edges(std::int32_t node_count, std::span<const Edge> edges, NodeId root);

  std::int32_t node_count() const { return static_cast<std::int32_t>(parent_.size()); }
  std::int32_t edge_count() const { return static_cast<std::int32_t>(edge_child_.size()); }
  NodeId root() const { return root_; }

  NodeId parent(NodeId v) const { return parent_[static_cast<std::size_t>(v)]; }
  std::span<const NodeId> children(NodeId v) const;
  std::int32_t depth(NodeId v) const { return depth_[static_cast<std::size_t>(v)]; }
  // Edges to a closest leaf; 0 for leaves.
  std::int32_t height(NodeId v) const { return height_[static_cast<std::size_t>(v)]; }
  bool is_leaf(NodeId v) const { return children(v).empty(); }

  bool has_labels() const { return !labels_.empty(); }
  std::optional<std::int32_t> label(NodeId v) const;

  NodeId edge_child(EdgeId e) const { return edge_child_[static_cast<std::size_t>(e)]; }
  NodeId edge_parent(EdgeId e) const { return parent(edge_child(e)); }
  // kNoEdge for the root.
  EdgeId edge_of(NodeId child) const { return edge_index_[static_cast<std::size_t>(child)]; }
  // Endpoints as (parent, child).
  Edge edge(EdgeId e) const { return Edge{edge_parent(e), edge_child(e)}; }
  std::vector<Edge> edges() const;

  std::span<const NodeId> parents() const { return parent_; }
  std::span<const std::int32_t> labels() const { return labels_; }

 private:
  NodeId root_ = kNoNode;
  std::vector<NodeId> parent_;
  std::vector<std::int32_t> child_offset_;
  std::vector<NodeId> child_list_;
  std::vector<std::int32_t> depth_;
  std::vector<std::int32_t> height_;
  std::vector<std::int32_t> labels_;
  std::vector<NodeId> edge_child_;
  std::vector<EdgeId> edge_index_;
};

nlohmann::json to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

struct Orientation {
  std::vector<NodeId> head;            // per edge: endpoint it points to
  std::vector<std::int32_t> in_degree;  // per node

  std::int32_t max_in_degree() const;
};

// Greedy choice for edge (u, v): the endpoint with smaller in-degree; a fair
// coin from `rng` on ties. Increments the winner's in-degree.
NodeId greedy_orient_step(std::span<std::int32_t> in_degree, NodeId u, NodeId v, Rng& rng);

// Tie resolution by edge index: true picks Edge::first.
using TieBreak = std::function<bool(EdgeId)>;

// Greedy over an arbitrary edge list, processing `schedule` (a permutation of
// edge indices). Throws kInvalidSchedule.
Orientation greedy_orient_edges(std::int32_t node_count, std::span<const Edge> edges,
                                const ArrivalSchedule& schedule, const TieBreak& prefer_first);

// Greedy on a tree; ties drawn from `rng` in arrival order.
Orientation greedy_run(const Tree& tree, const ArrivalSchedule& schedule, Rng& rng);

// Greedy on a tree with one pre-drawn coin per edge (nonzero picks the parent
// endpoint), so runs on related instances can share tie-break randomness.
Orientation greedy_run_coupled(const Tree& tree, const ArrivalSchedule& schedule,
                               std::span<const std::uint8_t> coins);

// Every edge points from parent to child.
Orientation tree_opt_orientation(const Tree& tree);

// One machine per node and one job per edge, with unit load on both
// endpoints. Job ids equal edge ids.
Instance graph_to_instance(const Tree& tree);

// Greedy for unrelated machines: the feasible machine with the least
// resulting load; ties uniformly at random, or the lowest index when `rng` is
// null. On two-endpoint unit jobs this is the tree greedy above.
Assignment greedy_instance_run(const Instance& instance, const ArrivalSchedule& order, Rng* rng);

// Job e goes to head[e].
Assignment to_assignment(const Orientation& orientation);

}  // namespace loadbal
