#include "loadbal/graphbal.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "loadbal/error.hpp"

namespace loadbal {

namespace {

[[noreturn]] void invalid_tree(const std::string& what) { throw Error(ErrorCode::kInvalidTree, what); }

void check_schedule(const ArrivalSchedule& schedule, std::size_t edge_count) {
  if (schedule.size() != edge_count || !schedule.is_permutation()) {
    throw Error(ErrorCode::kInvalidSchedule,
                "schedule must list each of the " + std::to_string(edge_count) + " edges exactly once");
  }
}

}  // namespace

Tree Tree::from_parents(std::vector<NodeId> parents, std::vector<std::int32_t> labels) {
  const auto n = parents.size();
  if (n == 0) invalid_tree("tree has no nodes");
  if (!labels.empty() && labels.size() != n) invalid_tree("label count does not match node count");

  Tree t;
  t.parent_ = std::move(parents);
  t.labels_ = std::move(labels);

  t.child_offset_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    NodeId p = t.parent_[v];
    if (p == kNoNode) {
      if (t.root_ != kNoNode) invalid_tree("more than one root");
      t.root_ = static_cast<NodeId>(v);
    } else if (p < 0 || static_cast<std::size_t>(p) >= n || static_cast<std::size_t>(p) == v) {
      invalid_tree("parent of node " + std::to_string(v) + " out of range");
    } else {
      ++t.child_offset_[static_cast<std::size_t>(p) + 1];
    }
  }
  if (t.root_ == kNoNode) invalid_tree("no root");
  for (std::size_t v = 0; v < n; ++v) t.child_offset_[v + 1] += t.child_offset_[v];

  t.child_list_.resize(n - 1);
  std::vector<std::int32_t> fill(t.child_offset_.begin(), t.child_offset_.end() - 1);
  t.edge_index_.assign(n, kNoEdge);
  t.edge_child_.reserve(n - 1);
  for (std::size_t v = 0; v < n; ++v) {
    NodeId p = t.parent_[v];
    if (p == kNoNode) continue;
    t.child_list_[static_cast<std::size_t>(fill[static_cast<std::size_t>(p)]++)] = static_cast<NodeId>(v);
    t.edge_index_[v] = static_cast<EdgeId>(t.edge_child_.size());
    t.edge_child_.push_back(static_cast<NodeId>(v));
  }

  // Breadth-first order from the root; nodes it misses sit on a cycle.
  std::vector<NodeId> bfs;
  bfs.reserve(n);
  bfs.push_back(t.root_);
  t.depth_.assign(n, 0);
  for (std::size_t head = 0; head < bfs.size(); ++head) {
    NodeId u = bfs[head];
    for (NodeId c : t.children(u)) {
      t.depth_[static_cast<std::size_t>(c)] = t.depth_[static_cast<std::size_t>(u)] + 1;
      bfs.push_back(c);
    }
  }
  if (bfs.size() != n) invalid_tree("parent array contains a cycle");

  t.height_.assign(n, 0);
  for (auto it = bfs.rbegin(); it != bfs.rend(); ++it) {
    auto kids = t.children(*it);
    if (kids.empty()) continue;
    std::int32_t h = t.height_[static_cast<std::size_t>(kids.front())];
    for (NodeId c : kids) h = std::min(h, t.height_[static_cast<std::size_t>(c)]);
    t.height_[static_cast<std::size_t>(*it)] = h + 1;
  }
  return t;
}

Tree Tree::from_edges(std::int32_t node_count, std::span<const Edge> edges, NodeId root) {
  if (node_count < 1) invalid_tree("tree has no nodes");
  if (static_cast<std::int64_t>(edges.size()) != node_count - 1) invalid_tree("a tree on n nodes has n-1 edges");
  if (root < 0 || root >= node_count) invalid_tree("root out of range");

  std::vector<std::vector<NodeId>> adjacent(static_cast<std::size_t>(node_count));
  for (const Edge& e : edges) {
    if (e.first < 0 || e.first >= node_count || e.second < 0 || e.second >= node_count || e.first == e.second) {
      invalid_tree("edge endpoint out of range");
    }
    adjacent[static_cast<std::size_t>(e.first)].push_back(e.second);
    adjacent[static_cast<std::size_t>(e.second)].push_back(e.first);
  }
  std::vector<NodeId> parents(static_cast<std::size_t>(node_count), kNoNode);
  std::vector<char> seen(static_cast<std::size_t>(node_count), 0);
  std::vector<NodeId> queue{root};
  seen[static_cast<std::size_t>(root)] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    NodeId u = queue[head];
    for (NodeId w : adjacent[static_cast<std::size_t>(u)]) {
      if (seen[static_cast<std::size_t>(w)]) continue;
      seen[static_cast<std::size_t>(w)] = 1;
      parents[static_cast<std::size_t>(w)] = u;
      queue.push_back(w);
    }
  }
  if (static_cast<std::int32_t>(queue.size()) != node_count) invalid_tree("edges do not connect all nodes");
  return from_parents(std::move(parents));
}

std::span<const NodeId> Tree::children(NodeId v) const {
  const auto begin = static_cast<std::size_t>(child_offset_[static_cast<std::size_t>(v)]);
  const auto end = static_cast<std::size_t>(child_offset_[static_cast<std::size_t>(v) + 1]);
  return std::span<const NodeId>(child_list_).subspan(begin, end - begin);
}

std::optional<std::int32_t> Tree::label(NodeId v) const {
  if (labels_.empty() || labels_[static_cast<std::size_t>(v)] == kNoLabel) return std::nullopt;
  return labels_[static_cast<std::size_t>(v)];
}

std::vector<Edge> Tree::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_child_.size());
  for (NodeId c : edge_child_) out.push_back(Edge{parent(c), c});
  return out;
}

nlohmann::json to_json(const Tree& tree) {
  nlohmann::json parents = nlohmann::json::array();
  nlohmann::json labels = nlohmann::json::array();
  for (NodeId v = 0; v < tree.node_count(); ++v) {
    NodeId p = tree.parent(v);
    parents.push_back(p == kNoNode ? nlohmann::json(nullptr) : nlohmann::json(p));
    auto l = tree.label(v);
    labels.push_back(l ? nlohmann::json(*l) : nlohmann::json(nullptr));
  }
  return {{"n", tree.node_count()}, {"root", tree.root()}, {"parents", std::move(parents)},
          {"labels", std::move(labels)}};
}

Tree tree_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::int32_t>();
    const auto& jp = j.at("parents");
    if (static_cast<std::int64_t>(jp.size()) != n) invalid_tree("parents length differs from n");
    std::vector<NodeId> parents;
    parents.reserve(jp.size());
    for (const auto& p : jp) parents.push_back(p.is_null() ? kNoNode : p.get<NodeId>());

    std::vector<std::int32_t> labels;
    if (j.contains("labels")) {
      bool any = false;
      for (const auto& l : j.at("labels")) {
        labels.push_back(l.is_null() ? kNoLabel : l.get<std::int32_t>());
        any = any || !l.is_null();
      }
      if (!any) labels.clear();
    }
    Tree tree = Tree::from_parents(std::move(parents), std::move(labels));
    if (j.contains("root") && j.at("root").get<NodeId>() != tree.root()) {
      invalid_tree("root field disagrees with parents");
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed tree JSON: ") + e.what());
  }
}

std::int32_t Orientation::max_in_degree() const {
  std::int32_t best = 0;
  for (std::int32_t d : in_degree) best = std::max(best, d);
  return best;
}

NodeId greedy_orient_step(std::span<std::int32_t> in_degree, NodeId u, NodeId v, Rng& rng) {
  auto& du = in_degree[static_cast<std::size_t>(u)];
  auto& dv = in_degree[static_cast<std::size_t>(v)];
  NodeId pick;
  if (du < dv) {
    pick = u;
  } else if (dv < du) {
    pick = v;
  } else {
    pick = std::bernoulli_distribution(0.5)(rng) ? u : v;
  }
  ++in_degree[static_cast<std::size_t>(pick)];
  return pick;
}

Orientation greedy_orient_edges(std::int32_t node_count, std::span<const Edge> edges,
                                const ArrivalSchedule& schedule, const TieBreak& prefer_first) {
  check_schedule(schedule, edges.size());
  Orientation o{std::vector<NodeId>(edges.size(), kNoNode),
                std::vector<std::int32_t>(static_cast<std::size_t>(node_count), 0)};
  for (std::int32_t e : schedule.order) {
    const Edge& edge = edges[static_cast<std::size_t>(e)];
    const auto du = o.in_degree[static_cast<std::size_t>(edge.first)];
    const auto dv = o.in_degree[static_cast<std::size_t>(edge.second)];
    NodeId pick;
    if (du != dv) {
      pick = du < dv ? edge.first : edge.second;
    } else {
      pick = prefer_first(e) ? edge.first : edge.second;
    }
    o.head[static_cast<std::size_t>(e)] = pick;
    ++o.in_degree[static_cast<std::size_t>(pick)];
  }
  return o;
}

Orientation greedy_run(const Tree& tree, const ArrivalSchedule& schedule, Rng& rng) {
  check_schedule(schedule, static_cast<std::size_t>(tree.edge_count()));
  Orientation o{std::vector<NodeId>(static_cast<std::size_t>(tree.edge_count()), kNoNode),
                std::vector<std::int32_t>(static_cast<std::size_t>(tree.node_count()), 0)};
  for (std::int32_t e : schedule.order) {
    const Edge edge = tree.edge(e);
    o.head[static_cast<std::size_t>(e)] = greedy_orient_step(o.in_degree, edge.first, edge.second, rng);
  }
  return o;
}

Orientation greedy_run_coupled(const Tree& tree, const ArrivalSchedule& schedule,
                               std::span<const std::uint8_t> coins) {
  if (coins.size() != static_cast<std::size_t>(tree.edge_count())) {
    throw Error(ErrorCode::kInvalidSchedule, "need one tie-break coin per edge");
  }
  const auto edges = tree.edges();
  return greedy_orient_edges(tree.node_count(), edges, schedule,
                             [&](EdgeId e) { return coins[static_cast<std::size_t>(e)] != 0; });
}

Orientation tree_opt_orientation(const Tree& tree) {
  Orientation o{std::vector<NodeId>(static_cast<std::size_t>(tree.edge_count())),
                std::vector<std::int32_t>(static_cast<std::size_t>(tree.node_count()), 0)};
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    const NodeId child = tree.edge_child(e);
    o.head[static_cast<std::size_t>(e)] = child;
    ++o.in_degree[static_cast<std::size_t>(child)];
  }
  return o;
}

Instance graph_to_instance(const Tree& tree) {
  Instance instance;
  instance.machine_count = tree.node_count();
  instance.jobs.reserve(static_cast<std::size_t>(tree.edge_count()));
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    const Edge edge = tree.edge(e);
    instance.jobs.push_back(Job::make(e, {{edge.first, 1.0}, {edge.second, 1.0}}));
  }
  return instance;
}

Assignment to_assignment(const Orientation& orientation) {
  Assignment a(orientation.head.size());
  for (std::size_t e = 0; e < orientation.head.size(); ++e) {
    if (orientation.head[e] != kNoNode) a.assign(static_cast<JobId>(e), orientation.head[e]);
  }
  return a;
}

}  // namespace loadbal

namespace loadbal {

Assignment greedy_instance_run(const Instance& instance, const ArrivalSchedule& order, Rng* rng) {
  if (order.size() != instance.job_count() || !order.is_permutation()) {
    throw Error(ErrorCode::kInvalidSchedule, "arrival order is not a permutation of the jobs");
  }
  LoadVector loads(static_cast<std::size_t>(instance.machine_count));
  Assignment assignment(instance.job_count());
  std::vector<MachineId> tied;
  for (std::int32_t id : order.order) {
    const Job& job = instance.jobs[static_cast<std::size_t>(id)];
    if (job.loads.empty()) {
      throw Error(ErrorCode::kInfeasibleInstance, "job " + std::to_string(id) + " has no finite load");
    }
    double best = std::numeric_limits<double>::infinity();
    tied.clear();
    for (const auto& [machine, p] : job.loads) {
      const double after = loads[static_cast<std::size_t>(machine)] + p;
      if (after < best) {
        best = after;
        tied.assign(1, machine);
      } else if (after == best) {
        tied.push_back(machine);
      }
    }
    MachineId pick = tied.front();
    if (rng != nullptr && tied.size() > 1) {
      pick = tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(*rng)];
    }
    loads[static_cast<std::size_t>(pick)] = best;
    assignment.assign(id, pick);
  }
  return assignment;
}

}  // namespace loadbal
