#include "loadbal/acceptance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "loadbal/error.hpp"
#include "loadbal/experiment.hpp"
#include "loadbal/generators.hpp"
#include "loadbal/graphbal.hpp"
#include "loadbal/oracle.hpp"
#include "loadbal/potential.hpp"
#include "loadbal/rng.hpp"
#include "loadbal/sim.hpp"

namespace loadbal {

namespace {

using nlohmann::json;

constexpr double kSandwichTolerance = 1e-9;
constexpr double kGradSumTolerance = 1e-9;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kFiniteDifferenceTolerance = 1e-6;

struct Outcome {
  bool passed = false;
  std::string measured;
  std::string expected;
};

std::vector<double> random_loads(Rng& rng, std::int32_t m, double hi) {
  std::uniform_real_distribution<double> entry(0.0, hi);
  std::vector<double> x(static_cast<std::size_t>(m));
  for (double& v : x) v = entry(rng);
  return x;
}

double max_of(std::span<const double> x) { return *std::max_element(x.begin(), x.end()); }

Outcome potential_sandwich(std::uint64_t seed) {
  const auto check = check_potential_sandwich(
      [](std::span<const double> x, double a) { return psi(x, a); }, 1000, seed);
  return {check.passed(),
          fmt::format("lower gap {:.3g}, upper gap {:.3g}, |sum grad - 1| {:.3g}, fd err {:.3g}", check.worst_lower,
                      check.worst_upper, check.worst_grad_sum, check.worst_fd),
          "gaps <= 1e-9, grad sum within 1e-9, fd err <= 1e-6"};
}

Outcome gradient_growth(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 2, Stream::kSampling));
  std::uniform_int_distribution<std::int32_t> machines(2, 512);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sharpness(kMinSharpness, 2.0);
  double worst = 0.0;  // max over coordinates of after / (e^a before) - 1
  for (int s = 0; s < 1000; ++s) {
    const auto m = machines(rng);
    const double a = s % 2 == 0 ? choose_a(m) : sharpness(rng);
    auto x = random_loads(rng, m, 20.0);
    const auto before = grad_psi(x, a);
    const auto i = std::uniform_int_distribution<std::int32_t>(0, m - 1)(rng);
    x[static_cast<std::size_t>(i)] += unit(rng);
    const auto after = grad_psi(x, a);
    for (std::size_t c = 0; c < before.size(); ++c) {
      worst = std::max(worst, after[c] / (std::exp(a) * before[c]) - 1.0);
    }
  }
  return {worst <= 1e-12, fmt::format("max relative excess {:.3g}", worst), "<= 1e-12"};
}

Outcome first_phase_inequality(std::uint64_t seed) {
  const std::int32_t m = 50;
  const std::int32_t n = 1000;
  const PlantedSpec spec{m, n, 1.0, 3, 0.0};
  const auto params = PotentialParams::for_machines(m);
  const std::size_t half = static_cast<std::size_t>(n) / 2;
  double worst_slack = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng inst_rng = make_rng(seed, static_cast<std::uint64_t>(trial), Stream::kInstance);
    Rng order_rng = make_rng(seed, static_cast<std::uint64_t>(trial), Stream::kOrder);
    const auto planted = gen_planted(spec, inst_rng);
    const auto order = sample_permutation(static_cast<std::size_t>(n), order_rng);
    const auto increments = ledger_increments(planted.instance, planted.hidden, order);

    std::vector<double> first_half(static_cast<std::size_t>(m), 0.0);
    double inner_sum = 0.0;
    softmax_run(planted.instance, order, params, [&](const StepEvent& ev) {
      if (ev.step >= half) return;
      const auto v = grad_psi(ev.virtual_before, params.a);
      const Increment& o = increments[ev.step];
      inner_sum += v[static_cast<std::size_t>(o.machine)] * o.load;
      first_half[static_cast<std::size_t>(ev.machine)] += ev.normalized_load;
    });
    const double lhs = max_of(first_half);
    const double rhs = std::exp(2.0 * params.a) * inner_sum + std::log(static_cast<double>(m)) / params.a;
    worst_slack = std::min(worst_slack, rhs - lhs);
    if (lhs > rhs + 1e-6) ++violations;
  }
  return {violations == 0, fmt::format("{} violations, min slack {:.4f}", violations, worst_slack),
          "0 violations of ||s^{n/2}|| <= e^{2a} sum <v,o> + ln m / a (tol 1e-6)"};
}

Outcome upper_bound_cap(std::uint64_t seed, int threads) {
  json cfg{{"instance", {{"kind", "planted"}, {"m", 100}, {"n", 2000}, {"opt", 1.0}, {"feasible", 3}}},
           {"algorithm", "softmax"},
           {"trials", 200},
           {"seed", seed}};
  const auto result = run_trials(ExperimentConfig::from_json(cfg), threads);
  const double a = choose_a(100);
  const double cap = 2.0 * (2.0 * std::exp(2.0 * a) + std::log(100.0) / a);
  const double mean = result.aggregate.makespan.mean;
  return {mean <= cap, fmt::format("mean makespan {:.4f} (a = {:.6f})", mean, a),
          fmt::format("<= {:.4f}", cap)};
}

Outcome classic_adversary(std::uint64_t seed, int threads) {
  std::string measured;
  bool ok = true;
  for (const char* algorithm : {"softmax", "greedy"}) {
    json cfg{{"instance", {{"kind", "classic-pairs"}, {"m", 64}}},
             {"algorithm", algorithm},
             {"order", "adversarial"},
             {"deterministic_ties", true},
             {"trials", 1},
             {"seed", seed}};
    const auto result = run_trials(ExperimentConfig::from_json(cfg), threads);
    const auto& r = result.trials.at(0);
    ok = ok && r.makespan >= 6.0 && r.opt == 1.0;
    measured += fmt::format("{}{}: makespan {} opt {}", measured.empty() ? "" : "; ", algorithm,
                            format_number(r.makespan), format_number(r.opt));
  }
  return {ok, measured, "makespan >= 6, tree OPT = 1"};
}

Outcome bad_node_frequency(std::uint64_t seed, int threads) {
  json cfg{{"instance", {{"kind", "fat-tree"}, {"k", 3}}},
           {"algorithm", "greedy"},
           {"order", "times"},
           {"analyzers", {"bad-nodes"}},
           {"trials", 20},
           {"seed", seed}};
  const auto result = run_trials(ExperimentConfig::from_json(cfg), threads);
  double worst = 1.0;
  for (const auto& r : result.trials) worst = std::min(worst, r.metrics.at("bad_node_fraction"));
  return {worst >= 0.96, fmt::format("min per-trial bad fraction {:.6f} over 20 trials", worst), ">= 0.96"};
}

Outcome chernoff_monte_carlo(std::uint64_t seed, int threads) {
  const auto bound = chernoff_lower_tail(27.0, 2.0 / 3.0);
  const auto tail = empirical_binomial_lower_tail(1'000'000, 81, 1.0 / 3.0, 9, seed, threads);
  return {tail.frequency() <= bound.simplified && bound.tight <= bound.simplified,
          fmt::format("P[X < 9] ~ {:.3g} ({} / {}), tight bound {:.4g}", tail.frequency(), tail.hits, tail.samples,
                      bound.tight),
          fmt::format("<= e^-6 = {:.6f}", bound.simplified)};
}

Outcome bad_permutation_frequency(std::uint64_t seed, int threads) {
  const std::int32_t depth = 4;
  const std::int32_t label = 2;
  // Root children with label >= 2 number 2^{D-2} + 2^{D-3}; the phantom root
  // edge adds one more competitor.
  double competitors = 1.0;
  for (std::int32_t d = label; d < depth; ++d) competitors += std::ldexp(1.0, depth - d);
  const double exact = std::ldexp(1.0, depth - label) / competitors;

  json cfg{{"instance", {{"kind", "recursive"}, {"D", depth}}},
           {"algorithm", "opt"},
           {"analyzers", {"bad-permutation"}},
           {"phantom_root_edge", true},
           {"trials", 20000},
           {"seed", seed}};
  const auto result = run_trials(ExperimentConfig::from_json(cfg), threads);
  const double freq = result.aggregate.metric_means.at("bad_perm_label_2");
  return {std::abs(freq - 4.0 / 7.0) <= 0.02 && std::abs(exact - 4.0 / 7.0) < 1e-15,
          fmt::format("frequency {:.4f} (counting ratio {:.6f})", freq, exact), "4/7 +- 0.02 = [0.5514, 0.5914]"};
}

Outcome recursive_structure() {
  const std::vector<std::vector<std::uint64_t>> expected{
      {1}, {1, 3}, {1, 5, 15}, {1, 9, 45, 135}, {1, 17, 153, 765, 2295}};
  bool ok = true;
  std::string measured;
  for (std::int32_t d = 0; d <= 4; ++d) {
    const auto counts = count_recursive_nodes(d);
    const auto tree = gen_recursive_tree(d);
    ok = ok && counts == expected[static_cast<std::size_t>(d)] &&
         static_cast<std::uint64_t>(tree.node_count()) == counts.back();
    measured += fmt::format("{}n({})={}", d ? " " : "", d, tree.node_count());
  }
  for (std::int32_t d = 0; d <= 6; ++d) {
    const auto counts = count_recursive_nodes(d);
    ok = ok && std::log2(static_cast<double>(counts.back())) <= 2.0 * d * d;
    if (d == 6) measured += fmt::format(" n(6)={}", counts.back());
  }
  return {ok, measured, "1, 3, 15, 135, 2295 and n(D) <= 4^{D^2} for D <= 6"};
}

Outcome bottom_up_loading(std::uint64_t seed, int threads) {
  json cfg{{"instance", {{"kind", "full-tree"}, {"arity", 9}, {"height", 3}}},
           {"algorithm", "greedy"},
           {"order", "bottom-up"},
           {"analyzers", {"fully-loaded"}},
           {"trials", 1000},
           {"seed", seed}};
  const auto result = run_trials(ExperimentConfig::from_json(cfg), threads);
  const double freq = result.aggregate.metric_means.at("root_fully_loaded");
  return {freq >= kBottomUpRootThreshold,
          fmt::format("P[root in-degree >= 3] = {:.4f} (pilot {:.6f})", freq, kBottomUpPilotFrequency),
          fmt::format(">= {} (frozen pilot threshold)", kBottomUpRootThreshold)};
}

Instance random_tiny_instance(Rng& rng) {
  std::uniform_int_distribution<std::int32_t> machines(1, 4);
  std::uniform_int_distribution<std::int32_t> jobs(1, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Instance inst;
  inst.machine_count = machines(rng);
  const auto n = jobs(rng);
  for (std::int32_t j = 0; j < n; ++j) {
    std::vector<std::pair<MachineId, double>> loads;
    while (loads.empty()) {
      for (MachineId i = 0; i < inst.machine_count; ++i) {
        if (unit(rng) < 0.6) loads.emplace_back(i, 1.0 - unit(rng));
      }
    }
    inst.jobs.push_back(Job::make(j, std::move(loads)));
  }
  return inst;
}

Tree random_tree(Rng& rng, std::int32_t nodes) {
  std::vector<NodeId> parents(static_cast<std::size_t>(nodes), kNoNode);
  for (NodeId v = 1; v < nodes; ++v) {
    parents[static_cast<std::size_t>(v)] = std::uniform_int_distribution<NodeId>(0, v - 1)(rng);
  }
  return Tree::from_parents(std::move(parents));
}

Outcome oracle_equivalence(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 11, Stream::kSampling));
  int bad_general = 0;
  int bad_tree = 0;
  for (int s = 0; s < 200; ++s) {
    const Instance inst = random_tiny_instance(rng);
    const double opt = brute_force_opt(inst).makespan;
    const auto order = sample_permutation(inst.job_count(), rng);
    const double soft = makespan(softmax_run(inst, order, PotentialParams::for_machines(inst.machine_count)), inst);
    const double greedy = makespan(greedy_instance_run(inst, order, &rng), inst);
    if (opt > soft + 1e-12 || opt > greedy + 1e-12) ++bad_general;

    const Tree tree = random_tree(rng, std::uniform_int_distribution<std::int32_t>(2, 9)(rng));
    const Instance tinst = graph_to_instance(tree);
    const double topt = brute_force_opt(tinst).makespan;
    const auto torder = sample_permutation(static_cast<std::size_t>(tree.edge_count()), rng);
    const double tgreedy = greedy_run(tree, torder, rng).max_in_degree();
    if (topt != 1.0 || topt > tgreedy) ++bad_tree;
  }
  return {bad_general == 0 && bad_tree == 0,
          fmt::format("{} general and {} tree disagreements over 200 + 200 instances", bad_general, bad_tree),
          "OPT <= softmax, greedy; tree OPT = 1"};
}

Outcome determinism(std::uint64_t seed, const std::string& scratch) {
  namespace fs = std::filesystem;
  const fs::path dir = scratch.empty() ? fs::temp_directory_path() / "loadbal_acceptance" : fs::path(scratch);
  fs::create_directories(dir);
  const std::vector<json> configs{
      json{{"instance", {{"kind", "fat-tree"}, {"k", 2}}},
           {"algorithm", "greedy"},
           {"order", "times"},
           {"analyzers", {"bad-nodes", "bad-subtree", "fully-loaded"}},
           {"trials", 200},
           {"seed", seed}},
      json{{"instance", {{"kind", "planted"}, {"m", 20}, {"n", 200}, {"opt", 2.0}}},
           {"algorithm", "softmax"},
           {"doubling", true},
           {"trials", 100},
           {"seed", seed},
           {"format", "json"},
           {"record_loads", true}},
      json{{"instance", {{"kind", "recursive"}, {"D", 3}}},
           {"algorithm", "greedy"},
           {"analyzers", {"bad-permutation"}},
           {"shuffle_labels", true},
           {"trials", 200},
           {"seed", seed}}};
  int mismatches = 0;
  std::size_t bytes = 0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<std::string> contents;
    for (int threads : {1, 8}) {
      for (int rep = 0; rep < 2; ++rep) {
        auto cfg = ExperimentConfig::from_json(configs[c]);
        cfg.out = (dir / fmt::format("run{}.out", c)).string();
        run_experiment(cfg, threads);
        contents.push_back(read_file(cfg.out));
      }
    }
    bytes += contents.front().size();
    for (const auto& text : contents) mismatches += text == contents.front() ? 0 : 1;
  }
  return {mismatches == 0, fmt::format("{} mismatching files ({} bytes per reference set)", mismatches, bytes),
          "byte-identical at --threads 1 and 8"};
}

Outcome greedy_monotonicity(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 13, Stream::kSampling));
  int increases = 0;
  int decreases = 0;
  for (int s = 0; s < 100; ++s) {
    const Tree tree = random_tree(rng, std::uniform_int_distribution<std::int32_t>(3, 200)(rng));
    const auto edges = tree.edges();
    const auto order = sample_permutation(edges.size(), rng);
    std::vector<std::uint8_t> coins(edges.size());
    for (auto& coin : coins) coin = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;

    std::vector<EdgeId> leaf_edges;
    for (EdgeId e = 0; e < tree.edge_count(); ++e) {
      if (tree.is_leaf(tree.edge_child(e))) leaf_edges.push_back(e);
    }
    const EdgeId removed =
        leaf_edges[std::uniform_int_distribution<std::size_t>(0, leaf_edges.size() - 1)(rng)];

    // Drop the edge, keep every other edge's coin and relative arrival order.
    std::vector<Edge> kept;
    std::vector<std::uint8_t> kept_coins;
    std::vector<std::int32_t> renumber(edges.size(), -1);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (static_cast<EdgeId>(e) == removed) continue;
      renumber[e] = static_cast<std::int32_t>(kept.size());
      kept.push_back(edges[e]);
      kept_coins.push_back(coins[e]);
    }
    std::vector<std::int32_t> kept_order;
    for (std::int32_t e : order.order) {
      if (e != removed) kept_order.push_back(renumber[static_cast<std::size_t>(e)]);
    }

    const auto full = greedy_orient_edges(tree.node_count(), edges, order,
                                          [&](EdgeId e) { return coins[static_cast<std::size_t>(e)] != 0; });
    const auto reduced =
        greedy_orient_edges(tree.node_count(), kept, ArrivalSchedule::from_permutation(kept_order),
                            [&](EdgeId e) { return kept_coins[static_cast<std::size_t>(e)] != 0; });
    if (reduced.max_in_degree() > full.max_in_degree()) ++increases;
    decreases += reduced.max_in_degree() < full.max_in_degree() ? 1 : 0;
  }
  return {increases == 0,
          fmt::format("{} increases in 100 triples ({} strict decreases)", increases, decreases),
          "deleting a leaf edge never increases max in-degree"};
}

}  // namespace

bool SandwichCheck::passed() const {
  return worst_lower <= kSandwichTolerance && worst_upper <= kSandwichTolerance &&
         worst_grad_sum <= kGradSumTolerance && worst_fd <= kFiniteDifferenceTolerance;
}

SandwichCheck check_potential_sandwich(const PsiFunction& psi_fn, std::int64_t vectors, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 1, Stream::kSampling));
  std::uniform_int_distribution<std::int32_t> machines(2, 512);
  SandwichCheck check;
  check.vectors = vectors;
  for (std::int64_t s = 0; s < vectors; ++s) {
    const auto m = machines(rng);
    const double a = choose_a(m);
    auto x = random_loads(rng, m, 20.0);
    const double value = psi_fn(x, a);
    const double top = max_of(x);
    check.worst_lower = std::max(check.worst_lower, top - value);
    check.worst_upper = std::max(check.worst_upper, value - top - std::log(static_cast<double>(m)) / a);

    const auto grad = grad_psi(x, a);
    check.worst_grad_sum =
        std::max(check.worst_grad_sum, std::abs(std::accumulate(grad.begin(), grad.end(), 0.0) - 1.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + kFiniteDifferenceStep;
      const double up = psi_fn(x, a);
      x[i] = saved - kFiniteDifferenceStep;
      const double down = psi_fn(x, a);
      x[i] = saved;
      const double fd = (up - down) / (2.0 * kFiniteDifferenceStep);
      check.worst_fd = std::max(check.worst_fd, std::abs(fd - grad[i]));
    }
  }
  return check;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  struct Criterion {
    int id;
    const char* name;
    double limit;
    std::function<Outcome()> body;
  };
  const auto seed = options.seed;
  const int threads = options.threads;
  const std::vector<Criterion> criteria{
      {1, "potential sandwich and gradient", 5, [&] { return potential_sandwich(seed); }},
      {2, "coordinatewise gradient growth", 5, [&] { return gradient_growth(seed); }},
      {3, "first-phase potential inequality", 30, [&] { return first_phase_inequality(seed); }},
      {4, "softmax upper-bound cap", 120, [&] { return upper_bound_cap(seed, threads); }},
      {5, "classic adaptive adversary", 1, [&] { return classic_adversary(seed, threads); }},
      {6, "bad-node frequency", 120, [&] { return bad_node_frequency(seed, threads); }},
      {7, "chernoff lower tail", 30, [&] { return chernoff_monte_carlo(seed, threads); }},
      {8, "bad-permutation frequency", 120, [&] { return bad_permutation_frequency(seed, threads); }},
      {9, "recursive-tree structure", 1, [] { return recursive_structure(); }},
      {10, "bottom-up greedy loading", 30, [&] { return bottom_up_loading(seed, threads); }},
      {11, "oracle equivalence", 60, [&] { return oracle_equivalence(seed); }},
      {12, "run determinism across threads", 60, [&] { return determinism(seed, options.scratch_dir); }},
      {13, "greedy monotonicity", 30, [&] { return greedy_monotonicity(seed); }},
  };

  std::vector<CriterionResult> results;
  for (const auto& c : criteria) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), c.id) == options.only.end()) {
      continue;
    }
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    r.time_limit = c.limit;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Outcome o = c.body();
      r.passed = o.passed;
      r.measured = o.measured;
      r.expected = o.expected;
    } catch (const std::exception& e) {
      r.passed = false;
      r.measured = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.seconds > r.time_limit) {
      r.passed = false;
      r.measured += fmt::format(" [over time limit]");
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_criterion(const CriterionResult& r) {
  return fmt::format("[{}] {:>2} {}: {} | expected {}", r.passed ? "PASS" : "FAIL", r.id, r.name, r.measured,
                     r.expected);
}

std::string format_timing(const CriterionResult& r) {
  return fmt::format("{:>2} {}: {:.2f}s (limit {}s)", r.id, r.name, r.seconds, r.time_limit);
}

}  // namespace loadbal
