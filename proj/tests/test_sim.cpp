#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "loadbal/error.hpp"
#include "loadbal/generators.hpp"
#include "loadbal/graphbal.hpp"
#include "loadbal/rng.hpp"
#include "loadbal/sim.hpp"

using namespace loadbal;

namespace {

// Chi-square with 5 degrees of freedom; 20.5 is the 0.999 quantile.
double chi_square_of_three(const std::map<std::vector<std::int32_t>, int>& counts, int trials) {
  const double expected = trials / 6.0;
  double chi = 0.0;
  for (const auto& [perm, n] : counts) chi += (n - expected) * (n - expected) / expected;
  return chi + (6.0 - static_cast<double>(counts.size())) * expected;
}

std::vector<NodeId> recount_bad_nodes(const Tree& t, const std::vector<double>& times, std::int32_t k) {
  std::vector<NodeId> bad;
  for (NodeId u = 0; u < t.node_count(); ++u) {
    if (t.is_leaf(u)) continue;
    const double h = t.height(u);
    std::int64_t in_window = 0;
    for (NodeId c : t.children(u)) {
      const double r = times[static_cast<std::size_t>(t.edge_of(c))];
      if (r > (h - 1.0) / k && r <= h / k) ++in_window;
      if (h == 1 && r == 0.0) ++in_window;
    }
    if (in_window >= static_cast<std::int64_t>(k) * k) bad.push_back(u);
  }
  return bad;
}

// Checks a witness against the definition without reusing the search.
bool valid_witness(const Tree& t, const std::vector<double>& times, std::int32_t k, const BadSubtree& w,
                   const std::vector<NodeId>& bad_nodes) {
  const std::set<NodeId> bad(bad_nodes.begin(), bad_nodes.end());
  const std::set<NodeId> members(w.nodes.begin(), w.nodes.end());
  if (w.nodes.empty() || w.nodes.front() != t.root() || t.height(t.root()) != k) return false;
  if (members.size() != w.nodes.size() || w.parents.size() != w.nodes.size()) return false;
  std::map<NodeId, std::int64_t> child_count;
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    const NodeId v = w.nodes[i];
    if (i == 0) {
      if (w.parents[i] != kNoNode) return false;
      continue;
    }
    const NodeId p = w.parents[i];
    if (t.parent(v) != p || !members.count(p)) return false;
    if (t.height(v) != t.height(p) - 1) return false;
    if (interval_of(times[static_cast<std::size_t>(t.edge_of(v))], k) != t.height(p)) return false;
    ++child_count[p];
  }
  for (NodeId v : w.nodes) {
    if (t.height(v) == 0) continue;
    if (!bad.count(v)) return false;
    if (child_count[v] != static_cast<std::int64_t>(k) * k) return false;
  }
  return true;
}

std::vector<double> random_times(Rng& rng, const Tree& t) {
  return sample_arrival_times(static_cast<std::size_t>(t.edge_count()), rng).times;
}

}  // namespace

TEST_CASE("sample_permutation basics") {
  Rng rng(1);
  CHECK(sample_permutation(0, rng).size() == 0);
  CHECK(sample_permutation(1, rng).order == std::vector<std::int32_t>{0});
  CHECK(sample_permutation(50, rng).is_permutation());
}

TEST_CASE("random orders of three items are uniform") {
  Rng rng(2);
  const int trials = 60000;
  std::map<std::vector<std::int32_t>, int> perms;
  std::map<std::vector<std::int32_t>, int> induced;
  for (int i = 0; i < trials; ++i) {
    ++perms[sample_permutation(3, rng).order];
    ++induced[sample_arrival_times(3, rng).order];
  }
  CHECK(perms.size() == 6);
  CHECK(induced.size() == 6);
  for (const auto& [p, n] : perms) CHECK(std::abs(n - 10000) <= 400);
  for (const auto& [p, n] : induced) CHECK(std::abs(n - 10000) <= 400);
  CHECK(chi_square_of_three(perms, trials) < 20.5);
  CHECK(chi_square_of_three(induced, trials) < 20.5);
}

TEST_CASE("arrival times induce the sorted order") {
  Rng rng(3);
  const auto s = sample_arrival_times(200, rng);
  REQUIRE(s.has_times());
  for (double t : s.times) {
    CHECK(t >= 0.0);
    CHECK(t < 1.0);
  }
  std::vector<std::int32_t> ranked(200);
  std::iota(ranked.begin(), ranked.end(), 0);
  std::sort(ranked.begin(), ranked.end(), [&](auto a, auto b) { return s.times[a] < s.times[b]; });
  CHECK(ranked == s.order);
  const auto pos = s.positions();
  for (std::size_t t = 0; t < s.order.size(); ++t) CHECK(pos[static_cast<std::size_t>(s.order[t])] == t);
}

TEST_CASE("bottom-up order is sorted by parent height") {
  Rng rng(4);
  const Tree t = gen_full_tree(3, 3);
  const auto s = bottom_up_order(t, rng);
  CHECK(s.is_permutation());
  for (std::size_t i = 1; i < s.size(); ++i) {
    CHECK(t.height(t.edge_parent(s.order[i - 1])) <= t.height(t.edge_parent(s.order[i])));
  }
}

TEST_CASE("shuffle_labels is an isomorphism") {
  Rng rng(5);
  const Tree t = gen_recursive_tree(3);
  const auto s = shuffle_labels(t, rng);
  CHECK(s.tree.node_count() == t.node_count());
  std::multiset<std::size_t> before;
  std::multiset<std::size_t> after;
  for (NodeId v = 0; v < t.node_count(); ++v) {
    before.insert(t.children(v).size());
    after.insert(s.tree.children(v).size());
    const NodeId nv = s.new_id[v];
    if (t.parent(v) == kNoNode) {
      CHECK(s.tree.parent(nv) == kNoNode);
    } else {
      CHECK(s.tree.parent(nv) == s.new_id[t.parent(v)]);
    }
    CHECK(s.tree.label(nv) == t.label(v));
  }
  CHECK(before == after);
  std::vector<std::int32_t> heights(static_cast<std::size_t>(t.node_count()));
  for (NodeId v = 0; v < t.node_count(); ++v) heights[v] = s.tree.height(v);
  const auto back = s.unshuffle<std::int32_t>(heights);
  for (NodeId v = 0; v < t.node_count(); ++v) CHECK(back[v] == t.height(v));
}

TEST_CASE("interval boundaries") {
  CHECK(interval_of(0.0, 2) == 1);
  CHECK(interval_of(0.5, 2) == 1);
  CHECK(interval_of(0.50001, 2) == 2);
  CHECK(interval_of(1.0, 2) == 2);
  CHECK(interval_of(1.0 / 3.0, 3) == 1);
}

TEST_CASE("bad node example") {
  std::vector<NodeId> parents(7, 0);
  parents[0] = kNoNode;
  const Tree star = Tree::from_parents(parents);
  std::vector<double> times{0.1, 0.2, 0.3, 0.9, 0.95, 0.97};
  CHECK(detect_bad_nodes_serial(star, times, 2).empty());
  times[3] = 0.4;
  CHECK(detect_bad_nodes_serial(star, times, 2) == std::vector<NodeId>{0});
  std::fill(times.begin(), times.end(), 0.8);
  CHECK(detect_bad_nodes(star, times, 2).empty());
}

TEST_CASE("bad nodes match a brute-force recount, serial and parallel") {
  Rng rng(6);
  for (int s = 0; s < 5; ++s) {
    const Tree t = gen_fat_tree(2);
    const auto times = random_times(rng, t);
    const auto ref = recount_bad_nodes(t, times, 2);
    CHECK(detect_bad_nodes_serial(t, times, 2) == ref);
    CHECK(detect_bad_nodes(t, times, 2, 4) == ref);
  }
  const Tree big = gen_full_tree(9, 4);  // ~7k nodes
  const auto times = random_times(rng, big);
  CHECK(detect_bad_nodes(big, times, 3, 8) == recount_bad_nodes(big, times, 3));
}

TEST_CASE("bad subtree witnesses") {
  const Tree t = gen_fat_tree(2);
  SUBCASE("every node bad gives a witness") {
    std::vector<double> times(static_cast<std::size_t>(t.edge_count()));
    for (EdgeId e = 0; e < t.edge_count(); ++e) times[e] = (t.height(t.edge_parent(e)) - 0.5) / 2.0;
    const auto bad = detect_bad_nodes(t, times, 2);
    const auto w = find_bad_subtree(t, times, 2);
    REQUIRE(w.has_value());
    CHECK(w->nodes.size() == 1 + 4 + 16);
    CHECK(valid_witness(t, times, 2, *w, bad));
  }
  SUBCASE("root not bad gives none") {
    std::vector<double> times(static_cast<std::size_t>(t.edge_count()), 0.25);
    CHECK_FALSE(find_bad_subtree(t, times, 2).has_value());
  }
  SUBCASE("random times: any witness is valid") {
    Rng rng(7);
    int found = 0;
    for (int s = 0; s < 40; ++s) {
      const auto times = random_times(rng, t);
      const auto bad = detect_bad_nodes(t, times, 2);
      if (const auto w = find_bad_subtree(t, times, 2, bad)) {
        ++found;
        CHECK(valid_witness(t, times, 2, *w, bad));
      }
    }
    CHECK(found > 0);
  }
}

TEST_CASE("bad subtree frequency on the k = 3 fat tree") {
  Rng rng(8);
  const Tree t = gen_fat_tree(3);
  int found = 0;
  const int trials = 100;
  for (int s = 0; s < trials; ++s) {
    const auto times = random_times(rng, t);
    const auto bad = detect_bad_nodes(t, times, 3);
    if (const auto w = find_bad_subtree(t, times, 3, bad)) {
      ++found;
      if (s < 3) CHECK(valid_witness(t, times, 3, *w, bad));
    }
  }
  CHECK(found >= 0.9 * trials);
}

TEST_CASE("fully loaded nodes") {
  const Tree t = gen_full_tree(2, 3);
  const auto opt = tree_opt_orientation(t);
  const auto flags = check_fully_loaded(t, opt);
  for (NodeId v = 0; v < t.node_count(); ++v) {
    if (t.height(v) == 0) CHECK(flags[v] == 1);
    if (t.height(v) >= 2) CHECK(flags[v] == 0);
  }
  Orientation o;
  o.head.assign(static_cast<std::size_t>(t.edge_count()), kNoNode);
  o.in_degree.assign(static_cast<std::size_t>(t.node_count()), 0);
  o.in_degree[t.root()] = t.height(t.root()) - 1;
  CHECK(check_fully_loaded(t, o)[t.root()] == 0);
  o.in_degree[t.root()] = t.height(t.root());
  CHECK(check_fully_loaded(t, o)[t.root()] == 1);
}

TEST_CASE("bad permutation examples") {
  const Tree t = gen_recursive_tree(2);
  const NodeId inner = t.children(t.root()).back();
  REQUIRE(!t.is_leaf(inner));
  const NodeId grandchild = t.children(inner).front();

  std::vector<std::int32_t> order{t.edge_of(grandchild)};
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    if (e != t.edge_of(grandchild)) order.push_back(e);
  }
  CHECK(is_bad_permutation(t, ArrivalSchedule::from_permutation(order), grandchild));

  std::swap(order[0], *std::find(order.begin(), order.end(), t.edge_of(inner)));
  std::swap(order[1], *std::find(order.begin(), order.end(), t.edge_of(grandchild)));
  CHECK_FALSE(is_bad_permutation(t, ArrivalSchedule::from_permutation(order), grandchild));

  CHECK_THROWS_AS(is_bad_permutation(t, ArrivalSchedule::from_permutation({0, 1}), grandchild), Error);
  CHECK_THROWS_AS(is_bad_permutation(t, ArrivalSchedule::from_permutation(order), t.root()), Error);
}

TEST_CASE("bad permutations match a direct scan") {
  Rng rng(9);
  const Tree t = gen_recursive_tree(3);
  for (int s = 0; s < 50; ++s) {
    const auto with_phantom = sample_permutation(static_cast<std::size_t>(t.edge_count()) + 1, rng);
    const auto pos = with_phantom.positions();
    for (NodeId v = 0; v < t.node_count(); ++v) {
      if (v == t.root()) continue;
      const NodeId u = t.parent(v);
      const auto p = pos[t.edge_of(v)];
      const auto parent_pos = u == t.root() ? pos[t.edge_count()] : pos[t.edge_of(u)];
      bool expected = parent_pos > p;
      for (NodeId w : t.children(u)) {
        if (w != v && t.label(w).value() >= t.label(v).value() && pos[t.edge_of(w)] < p) expected = false;
      }
      CHECK(is_bad_permutation(t, pos, v, RootEdge::kPhantom) == expected);
    }
  }
}

TEST_CASE("binomial lower tail") {
  const double exact = [] {
    double sum = 0.0;
    for (int x = 0; x < 4; ++x) sum += std::tgamma(21.0) / (std::tgamma(x + 1.0) * std::tgamma(21.0 - x)) *
                                       std::pow(0.3, x) * std::pow(0.7, 20 - x);
    return sum;
  }();
  const auto serial = empirical_binomial_lower_tail_serial(200000, 20, 0.3, 4, 77);
  const auto parallel = empirical_binomial_lower_tail(200000, 20, 0.3, 4, 77, 8);
  CHECK(serial.hits == parallel.hits);
  CHECK(serial.samples == 200000);
  const double se = std::sqrt(exact * (1 - exact) / 200000.0);
  CHECK(std::abs(serial.frequency() - exact) < 5 * se);
}

TEST_CASE("first label-2 root edge of T_4: phantom root edge gives 4/7, vacuous clause gives 2/3") {
  Rng rng(10);
  const Tree t = gen_recursive_tree(4);
  const int trials = 20000;
  int phantom = 0;
  int vacuous = 0;
  for (int s = 0; s < trials; ++s) {
    const auto with_phantom = sample_permutation(static_cast<std::size_t>(t.edge_count()) + 1, rng).positions();
    const NodeId v = first_root_child_with_label(t, with_phantom, 2);
    REQUIRE(v != kNoNode);
    phantom += is_bad_permutation(t, with_phantom, v, RootEdge::kPhantom) ? 1 : 0;

    const auto plain = sample_permutation(static_cast<std::size_t>(t.edge_count()), rng).positions();
    vacuous += is_bad_permutation(t, plain, first_root_child_with_label(t, plain, 2)) ? 1 : 0;
  }
  CHECK(std::abs(phantom / double(trials) - 4.0 / 7.0) < 0.02);
  CHECK(std::abs(vacuous / double(trials) - 2.0 / 3.0) < 0.02);
}
