#include "loadbal/experiment.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "loadbal/error.hpp"
#include "loadbal/generators.hpp"
#include "loadbal/oracle.hpp"
#include "loadbal/potential.hpp"
#include "loadbal/sim.hpp"

namespace loadbal {

namespace {

using nlohmann::json;

// Instances at most this large get an exact brute-force OPT for ratios.
constexpr double kExactOptSearchSpace = 1e6;

template <typename Enum>
struct NameTable {
  Enum value;
  const char* name;
};

constexpr NameTable<Algorithm> kAlgorithms[] = {
    {Algorithm::kSoftmax, "softmax"}, {Algorithm::kGreedy, "greedy"}, {Algorithm::kOpt, "opt"}};
constexpr NameTable<OrderMode> kOrders[] = {{OrderMode::kPermutation, "permutation"},
                                            {OrderMode::kTimes, "times"},
                                            {OrderMode::kBottomUp, "bottom-up"},
                                            {OrderMode::kAdversarial, "adversarial"}};
constexpr NameTable<Analyzer> kAnalyzers[] = {{Analyzer::kBadNodes, "bad-nodes"},
                                              {Analyzer::kBadSubtree, "bad-subtree"},
                                              {Analyzer::kBadPermutation, "bad-permutation"},
                                              {Analyzer::kFullyLoaded, "fully-loaded"}};
constexpr NameTable<OutputFormat> kFormats[] = {{OutputFormat::kCsv, "csv"}, {OutputFormat::kJson, "json"}};

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum> (&table)[N], const std::string& name, const char* what) {
  for (const auto& entry : table) {
    if (name == entry.name) return entry.value;
  }
  throw Error(ErrorCode::kConfig, std::string("unknown ") + what + " '" + name + "'");
}

template <typename Enum, std::size_t N>
const char* name_of(const NameTable<Enum> (&table)[N], Enum value) {
  for (const auto& entry : table) {
    if (entry.value == value) return entry.name;
  }
  return "?";
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

bool has_analyzer(const ExperimentConfig& c, Analyzer a) {
  return std::find(c.analyzers.begin(), c.analyzers.end(), a) != c.analyzers.end();
}

// Immutable per-experiment data shared by all trials.
struct Source {
  enum class Kind { kTree, kInstance, kPlanted, kClassic } kind = Kind::kTree;
  std::optional<Tree> tree;
  std::optional<Instance> instance;
  PlantedSpec planted;
  std::int32_t classic_machines = 0;
  std::optional<std::int32_t> fat_k;
  double opt = 0.0;
  std::string opt_kind = "exact";
};

json load_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
}

void set_instance_opt(Source& src) {
  const Instance& inst = *src.instance;
  if (auto violations = validate(inst); !violations.empty()) {
    throw Error(ErrorCode::kInfeasibleInstance, violations.front());
  }
  try {
    src.opt = brute_force_opt(inst, kExactOptSearchSpace).makespan;
    src.opt_kind = "exact";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSearchSpaceTooLarge) throw;
    src.opt = opt_lower_bound(inst.jobs, inst.machine_count);
    src.opt_kind = "lower-bound";
  }
}

void set_tree_opt(Source& src) {
  src.opt = tree_opt_orientation(*src.tree).max_in_degree();
  src.opt_kind = "exact";
}

// Optimal makespan of a graph-balancing instance that is a tree.
double tree_instance_opt(const Instance& inst) {
  std::vector<Edge> edges;
  for (const Job& job : inst.jobs) edges.push_back(Edge{job.loads.at(0).first, job.loads.at(1).first});
  return tree_opt_orientation(Tree::from_edges(inst.machine_count, edges, 0)).max_in_degree();
}

Source prepare_source(const ExperimentConfig& config) {
  const json& desc = config.instance;
  if (!desc.is_object()) throw Error(ErrorCode::kConfig, "instance must be an object");
  Source src;
  try {
    std::string kind = get_or<std::string>(desc, "kind", "");
    if (kind.empty()) {
      if (desc.contains("parents")) kind = "tree";
      else if (desc.contains("machines")) kind = "instance";
    }
    if (kind == "file") {
      const json j = load_json_file(desc.at("path").get<std::string>());
      if (j.contains("parents")) {
        src.tree = tree_from_json(j);
      } else {
        src.instance = instance_from_json(j);
      }
    } else if (kind == "tree") {
      src.tree = tree_from_json(desc.contains("tree") ? desc.at("tree") : desc);
    } else if (kind == "instance") {
      src.instance = instance_from_json(desc.contains("instance") ? desc.at("instance") : desc);
    } else if (kind == "fat-tree") {
      const auto k = desc.at("k").get<std::int32_t>();
      src.tree = gen_fat_tree(k, config.allow_large);
      src.fat_k = k;
    } else if (kind == "full-tree") {
      src.tree = gen_full_tree(desc.at("arity").get<std::int32_t>(), desc.at("height").get<std::int32_t>(),
                               config.allow_large);
    } else if (kind == "recursive") {
      src.tree = gen_recursive_tree(desc.at("D").get<std::int32_t>(), config.allow_large);
    } else if (kind == "planted") {
      src.kind = Source::Kind::kPlanted;
      src.planted.machine_count = desc.at("m").get<std::int32_t>();
      src.planted.job_count = desc.at("n").get<std::int32_t>();
      src.planted.opt_value = get_or<double>(desc, "opt", 1.0);
      src.planted.feasible_machines = get_or<std::int32_t>(desc, "feasible", std::min(2, src.planted.machine_count));
      src.planted.min_job_size = get_or<double>(desc, "min_size", 0.0);
      src.opt = src.planted.opt_value;
      src.opt_kind = "planted";
      validate_planted(src.planted);
      return src;
    } else if (kind == "classic-pairs") {
      src.kind = Source::Kind::kClassic;
      src.classic_machines = desc.at("m").get<std::int32_t>();
      src.instance = classic_pairs_instance(src.classic_machines);
      src.opt = tree_instance_opt(*src.instance);
      src.opt_kind = "exact";
      return src;
    } else {
      throw Error(ErrorCode::kConfig, "unknown instance kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("instance descriptor: ") + e.what());
  }

  if (src.tree) {
    src.kind = Source::Kind::kTree;
    set_tree_opt(src);
  } else {
    src.kind = Source::Kind::kInstance;
    set_instance_opt(src);
  }
  return src;
}

void check_compatible(const ExperimentConfig& c, const Source& src) {
  const bool tree = src.kind == Source::Kind::kTree;
  if (!c.analyzers.empty() && !tree) throw Error(ErrorCode::kConfig, "analyzers need a tree instance");
  if (c.order == OrderMode::kBottomUp && !tree) throw Error(ErrorCode::kConfig, "bottom-up order needs a tree");
  if (c.order == OrderMode::kAdversarial) {
    if (src.kind != Source::Kind::kClassic) {
      throw Error(ErrorCode::kConfig, "adversarial order needs the classic-pairs source");
    }
    if (c.algorithm == Algorithm::kOpt) throw Error(ErrorCode::kConfig, "opt cannot play the adaptive adversary");
  }
  if (c.phantom_root_edge && (!tree || c.order == OrderMode::kBottomUp)) {
    throw Error(ErrorCode::kConfig, "phantom root edge needs a tree with random order");
  }
  if (c.shuffle_labels && !tree) throw Error(ErrorCode::kConfig, "shuffle_labels needs a tree");
  const bool needs_times = has_analyzer(c, Analyzer::kBadNodes) || has_analyzer(c, Analyzer::kBadSubtree);
  if (needs_times) {
    if (c.order != OrderMode::kTimes) throw Error(ErrorCode::kConfig, "bad-node analyzers need order=times");
    if (!c.k && !src.fat_k) throw Error(ErrorCode::kConfig, "bad-node analyzers need k");
  }
  if (has_analyzer(c, Analyzer::kBadPermutation) && (!src.tree || !src.tree->has_labels())) {
    throw Error(ErrorCode::kConfig, "bad-permutation analyzer needs a labeled tree");
  }
  if (c.trials < 0) throw Error(ErrorCode::kConfig, "trials must be nonnegative");
}

PotentialParams potential_params(const ExperimentConfig& c, std::int32_t machines) {
  PotentialParams p = PotentialParams::for_machines(machines);
  if (c.a) p.a = *c.a;
  return p;
}

double safe_ratio(double makespan, double opt) {
  if (opt > 0.0) return makespan / opt;
  return makespan == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
}

Orientation orientation_from(const Tree& tree, const Assignment& assignment) {
  Orientation o{std::vector<NodeId>(static_cast<std::size_t>(tree.edge_count())),
                std::vector<std::int32_t>(static_cast<std::size_t>(tree.node_count()), 0)};
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    const auto head = *assignment.machine_of(e);
    o.head[static_cast<std::size_t>(e)] = head;
    ++o.in_degree[static_cast<std::size_t>(head)];
  }
  return o;
}

ArrivalSchedule draw_order(OrderMode mode, std::size_t count, Rng& rng) {
  return mode == OrderMode::kTimes ? sample_arrival_times(count, rng) : sample_permutation(count, rng);
}

TrialReport run_tree_trial(const ExperimentConfig& c, const Source& src, std::int64_t trial) {
  const auto t64 = static_cast<std::uint64_t>(trial);
  TrialReport report;

  std::optional<ShuffledTree> shuffled;
  if (c.shuffle_labels) {
    Rng rng = make_rng(c.seed, t64, Stream::kShuffle);
    shuffled = shuffle_labels(*src.tree, rng);
  }
  const Tree& tree = shuffled ? shuffled->tree : *src.tree;
  const auto edges = static_cast<std::size_t>(tree.edge_count());

  Rng order_rng = make_rng(c.seed, t64, Stream::kOrder);
  ArrivalSchedule full;
  if (c.order == OrderMode::kBottomUp) {
    full = bottom_up_order(tree, order_rng);
  } else {
    full = draw_order(c.order, edges + (c.phantom_root_edge ? 1 : 0), order_rng);
  }
  // The phantom root edge, item `edges`, is never handed to the algorithm.
  ArrivalSchedule schedule = full;
  if (c.phantom_root_edge) {
    std::erase(schedule.order, static_cast<std::int32_t>(edges));
    if (schedule.has_times()) schedule.times.resize(edges);
  }

  Rng tie_rng = make_rng(c.seed, t64, Stream::kTies);
  Orientation orientation;
  switch (c.algorithm) {
    case Algorithm::kGreedy:
      if (c.deterministic_ties) {
        const auto list = tree.edges();
        orientation = greedy_orient_edges(tree.node_count(), list, schedule, [](EdgeId) { return true; });
      } else {
        orientation = greedy_run(tree, schedule, tie_rng);
      }
      break;
    case Algorithm::kSoftmax: {
      const Instance inst = graph_to_instance(tree);
      const auto params = potential_params(c, inst.machine_count);
      const Assignment a =
          c.doubling ? doubling_wrap(inst, schedule, params).assignment : softmax_run(inst, schedule, params);
      orientation = orientation_from(tree, a);
      break;
    }
    case Algorithm::kOpt:
      orientation = tree_opt_orientation(tree);
      break;
  }

  report.makespan = orientation.max_in_degree();
  report.opt = src.opt;
  report.metrics["root_in_degree"] = orientation.in_degree[static_cast<std::size_t>(tree.root())];

  std::optional<std::vector<NodeId>> bad;
  const std::int32_t k = c.k ? *c.k : src.fat_k.value_or(0);
  if (has_analyzer(c, Analyzer::kBadNodes) || has_analyzer(c, Analyzer::kBadSubtree)) {
    // Trials already run in parallel; the per-node kernel stays on this thread.
    bad = detect_bad_nodes(tree, schedule.times, k, 1);
  }
  if (has_analyzer(c, Analyzer::kBadNodes)) report.metrics["bad_node_fraction"] = bad_node_fraction(tree, *bad);
  if (has_analyzer(c, Analyzer::kBadSubtree)) {
    report.metrics["bad_subtree"] = find_bad_subtree(tree, schedule.times, k, *bad) ? 1.0 : 0.0;
  }
  if (has_analyzer(c, Analyzer::kFullyLoaded)) {
    const auto full_flags = check_fully_loaded(tree, orientation);
    report.metrics["root_fully_loaded"] = full_flags[static_cast<std::size_t>(tree.root())];
    const auto count = std::count(full_flags.begin(), full_flags.end(), std::uint8_t{1});
    report.metrics["fully_loaded_fraction"] = static_cast<double>(count) / static_cast<double>(full_flags.size());
  }
  if (has_analyzer(c, Analyzer::kBadPermutation)) {
    const auto positions = full.positions();
    const auto mode = c.phantom_root_edge ? RootEdge::kPhantom : RootEdge::kAbsent;
    const auto top = *tree.label(tree.root());
    for (std::int32_t d = 0; d < top; ++d) {
      const NodeId child = first_root_child_with_label(tree, positions, d);
      if (child == kNoNode) continue;
      report.metrics[fmt::format("bad_perm_label_{}", d)] =
          is_bad_permutation(tree, positions, child, mode) ? 1.0 : 0.0;
    }
  }

  if (c.record_loads) {
    std::vector<std::int32_t> degrees = orientation.in_degree;
    if (shuffled) degrees = shuffled->unshuffle<std::int32_t>(degrees);
    report.loads.assign(degrees.begin(), degrees.end());
  }
  return report;
}

TrialReport run_adversary_trial(const ExperimentConfig& c, const Source& src, std::int64_t trial) {
  const auto t64 = static_cast<std::uint64_t>(trial);
  AdaptiveAdversary adversary(src.classic_machines);
  const auto m = static_cast<std::size_t>(src.classic_machines);
  SoftmaxScheduler scheduler(potential_params(c, src.classic_machines),
                             static_cast<std::size_t>(adversary.total_jobs()));
  Rng tie_rng = make_rng(c.seed, t64, Stream::kTies);
  LoadVector loads(m);

  std::vector<MachineId> choices;
  while (auto jobs = adversary.next(choices)) {
    choices.clear();
    for (const Job& job : *jobs) {
      MachineId pick;
      if (c.algorithm == Algorithm::kSoftmax) {
        pick = scheduler.step(job);
      } else {
        const MachineId u = job.loads[0].first;
        const MachineId v = job.loads[1].first;
        if (loads[static_cast<std::size_t>(u)] != loads[static_cast<std::size_t>(v)]) {
          pick = loads[static_cast<std::size_t>(u)] < loads[static_cast<std::size_t>(v)] ? u : v;
        } else {
          pick = c.deterministic_ties || std::bernoulli_distribution(0.5)(tie_rng) ? u : v;
        }
      }
      apply_in_place(loads, job, pick);
      choices.push_back(pick);
    }
  }
  TrialReport report;
  report.makespan = loads.max();
  report.opt = tree_instance_opt(adversary.instance());
  if (c.record_loads) report.loads.assign(loads.values().begin(), loads.values().end());
  return report;
}

TrialReport run_instance_trial(const ExperimentConfig& c, const Source& src, std::int64_t trial) {
  const auto t64 = static_cast<std::uint64_t>(trial);
  std::optional<Instance> planted;
  if (src.kind == Source::Kind::kPlanted) {
    Rng rng = make_rng(c.seed, t64, Stream::kInstance);
    planted = gen_planted(src.planted, rng).instance;
  }
  const Instance& inst = planted ? *planted : *src.instance;

  Rng order_rng = make_rng(c.seed, t64, Stream::kOrder);
  const ArrivalSchedule schedule = draw_order(c.order, inst.job_count(), order_rng);
  Rng tie_rng = make_rng(c.seed, t64, Stream::kTies);

  Assignment assignment;
  switch (c.algorithm) {
    case Algorithm::kSoftmax: {
      const auto params = potential_params(c, inst.machine_count);
      assignment =
          c.doubling ? doubling_wrap(inst, schedule, params).assignment : softmax_run(inst, schedule, params);
      break;
    }
    case Algorithm::kGreedy:
      assignment = greedy_instance_run(inst, schedule, c.deterministic_ties ? nullptr : &tie_rng);
      break;
    case Algorithm::kOpt:
      assignment = brute_force_opt(inst).witness;
      break;
  }
  const LoadVector loads = machine_loads(assignment, inst);
  TrialReport report;
  report.makespan = loads.max();
  report.opt = src.opt;
  if (c.record_loads) report.loads.assign(loads.values().begin(), loads.values().end());
  return report;
}

TrialReport run_one(const ExperimentConfig& c, const Source& src, std::int64_t trial) {
  TrialReport report;
  if (src.kind == Source::Kind::kTree) {
    report = run_tree_trial(c, src, trial);
  } else if (src.kind == Source::Kind::kClassic && c.order == OrderMode::kAdversarial) {
    report = run_adversary_trial(c, src, trial);
  } else {
    report = run_instance_trial(c, src, trial);
  }
  report.trial = trial;
  report.seed = derive_seed(c.seed, static_cast<std::uint64_t>(trial), Stream::kTrial);
  report.ratio = safe_ratio(report.makespan, report.opt);
  return report;
}

Aggregate aggregate_of(const std::vector<TrialReport>& trials, const std::string& opt_kind) {
  Aggregate agg;
  agg.opt_kind = opt_kind;
  std::vector<double> makespans;
  std::vector<double> ratios;
  std::map<std::string, std::vector<double>> metrics;
  double opt_sum = 0.0;
  for (const auto& r : trials) {
    makespans.push_back(r.makespan);
    ratios.push_back(r.ratio);
    opt_sum += r.opt;
    for (const auto& [name, value] : r.metrics) metrics[name].push_back(value);
  }
  agg.makespan = SummaryStats::of(std::move(makespans));
  agg.ratio = SummaryStats::of(std::move(ratios));
  agg.mean_opt = trials.empty() ? 0.0 : opt_sum / static_cast<double>(trials.size());
  for (auto& [name, values] : metrics) agg.metric_means[name] = SummaryStats::of(std::move(values)).mean;
  return agg;
}

ExperimentResult finish(const ExperimentConfig& config, const Source& src, std::vector<TrialReport> reports) {
  ExperimentResult result{config, std::move(reports), {}};
  result.aggregate = aggregate_of(result.trials, src.opt_kind);
  return result;
}

std::vector<std::string> metric_columns(const std::vector<TrialReport>& trials) {
  std::map<std::string, int> names;
  for (const auto& r : trials) {
    for (const auto& [name, value] : r.metrics) names[name] = 0;
  }
  std::vector<std::string> out;
  for (const auto& [name, unused] : names) out.push_back(name);
  return out;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  static const char* kKnown[] = {"instance", "algorithm", "trials", "seed", "order", "analyzers",
                                 "shuffle_labels", "doubling", "deterministic_ties", "phantom_root_edge",
                                 "record_loads", "allow_large", "k", "a", "format", "out", "verbosity"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kKnown), std::end(kKnown), [&](const char* k) { return key == k; }) ==
        std::end(kKnown)) {
      throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (!j.contains("instance")) throw Error(ErrorCode::kConfig, "config needs an instance");
    c.instance = j.at("instance");
    c.algorithm = parse_name(kAlgorithms, get_or<std::string>(j, "algorithm", "softmax"), "algorithm");
    c.trials = get_or<std::int64_t>(j, "trials", 1);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.order = parse_name(kOrders, get_or<std::string>(j, "order", "permutation"), "order");
    if (j.contains("analyzers")) {
      for (const auto& name : j.at("analyzers")) {
        c.analyzers.push_back(parse_name(kAnalyzers, name.get<std::string>(), "analyzer"));
      }
    }
    c.shuffle_labels = get_or<bool>(j, "shuffle_labels", false);
    c.doubling = get_or<bool>(j, "doubling", false);
    c.deterministic_ties = get_or<bool>(j, "deterministic_ties", false);
    c.phantom_root_edge = get_or<bool>(j, "phantom_root_edge", false);
    c.record_loads = get_or<bool>(j, "record_loads", false);
    c.allow_large = get_or<bool>(j, "allow_large", false);
    if (j.contains("k") && !j.at("k").is_null()) c.k = j.at("k").get<std::int32_t>();
    if (j.contains("a") && !j.at("a").is_null()) c.a = j.at("a").get<double>();
    c.format = parse_name(kFormats, get_or<std::string>(j, "format", "csv"), "format");
    c.out = get_or<std::string>(j, "out", "");
    c.verbosity = get_or<std::int32_t>(j, "verbosity", 0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config: ") + e.what());
  }
  if (c.a && !(*c.a > 0.0)) throw Error(ErrorCode::kConfig, "a must be positive");
  return c;
}

json ExperimentConfig::to_json() const {
  json analyzers_json = json::array();
  for (Analyzer a : analyzers) analyzers_json.push_back(name_of(kAnalyzers, a));
  return json{{"instance", instance},
              {"algorithm", name_of(kAlgorithms, algorithm)},
              {"trials", trials},
              {"seed", seed},
              {"order", name_of(kOrders, order)},
              {"analyzers", std::move(analyzers_json)},
              {"shuffle_labels", shuffle_labels},
              {"doubling", doubling},
              {"deterministic_ties", deterministic_ties},
              {"phantom_root_edge", phantom_root_edge},
              {"record_loads", record_loads},
              {"allow_large", allow_large},
              {"k", k ? json(*k) : json(nullptr)},
              {"a", a ? json(*a) : json(nullptr)},
              {"format", name_of(kFormats, format)},
              {"out", out},
              {"verbosity", verbosity}};
}

SummaryStats SummaryStats::of(std::vector<double> values) {
  SummaryStats s;
  s.count = static_cast<std::int64_t>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.min = values.front();
  s.max = values.back();
  // Nearest-rank quantiles.
  auto rank = [&](double q) {
    auto idx = static_cast<std::size_t>(std::ceil(q * n));
    return values[std::clamp<std::size_t>(idx, 1, values.size()) - 1];
  };
  s.p50 = rank(0.5);
  s.p90 = rank(0.9);
  return s;
}

json SummaryStats::to_json() const {
  return json{{"count", count}, {"mean", mean}, {"stddev", stddev}, {"min", min},
              {"max", max},     {"p50", p50},   {"p90", p90}};
}

json Aggregate::to_json() const {
  return json{{"makespan", makespan.to_json()},
              {"ratio", ratio.to_json()},
              {"mean_opt", mean_opt},
              {"opt_kind", opt_kind},
              {"metric_means", metric_means}};
}

ExperimentResult run_trials(const ExperimentConfig& config, int threads) {
  const Source src = prepare_source(config);
  check_compatible(config, src);
  const auto count = config.trials;
  std::vector<TrialReport> reports(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(team)
  for (std::int64_t t = 0; t < count; ++t) {
    try {
      reports[static_cast<std::size_t>(t)] = run_one(config, src, t);
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return finish(config, src, std::move(reports));
}

ExperimentResult run_trials_serial(const ExperimentConfig& config) {
  const Source src = prepare_source(config);
  check_compatible(config, src);
  std::vector<TrialReport> reports;
  reports.reserve(static_cast<std::size_t>(config.trials));
  for (std::int64_t t = 0; t < config.trials; ++t) reports.push_back(run_one(config, src, t));
  return finish(config, src, std::move(reports));
}

std::string render(const ExperimentResult& result, OutputFormat format) {
  if (format == OutputFormat::kJson) {
    json trials = json::array();
    for (const auto& r : result.trials) {
      json row{{"trial", r.trial}, {"seed", r.seed},       {"makespan", r.makespan},
               {"opt", r.opt},     {"ratio", r.ratio},     {"metrics", r.metrics}};
      if (result.config.record_loads) row["loads"] = r.loads;
      trials.push_back(std::move(row));
    }
    json doc{{"config", result.config.to_json()}, {"trials", std::move(trials)},
             {"aggregate", result.aggregate.to_json()}};
    return doc.dump(2) + "\n";
  }

  std::ostringstream out;
  const auto columns = metric_columns(result.trials);
  out << "# config: " << result.config.to_json().dump() << "\n";
  out << "trial,seed,makespan,opt,ratio";
  for (const auto& name : columns) out << "," << name;
  if (result.config.record_loads) out << ",loads";
  out << "\n";
  for (const auto& r : result.trials) {
    out << r.trial << "," << r.seed << "," << format_number(r.makespan) << "," << format_number(r.opt) << ","
        << format_number(r.ratio);
    for (const auto& name : columns) {
      auto it = r.metrics.find(name);
      out << "," << (it == r.metrics.end() ? "" : format_number(it->second));
    }
    if (result.config.record_loads) {
      out << ",";
      for (std::size_t i = 0; i < r.loads.size(); ++i) out << (i ? " " : "") << format_number(r.loads[i]);
    }
    out << "\n";
  }
  const auto& agg = result.aggregate;
  out << "#agg," << agg.makespan.count << ",," << format_number(agg.makespan.mean) << ","
      << format_number(agg.mean_opt) << "," << format_number(agg.ratio.mean);
  for (const auto& name : columns) out << "," << format_number(agg.metric_means.at(name));
  out << "\n";
  out << "# aggregate: " << agg.to_json().dump() << "\n";
  return out.str();
}

std::string summary_line(const ExperimentResult& result) {
  const auto& agg = result.aggregate;
  std::string line = fmt::format("trials={} mean_makespan={} mean_ratio={} max_makespan={} opt={}({})",
                                 agg.makespan.count, format_number(agg.makespan.mean),
                                 format_number(agg.ratio.mean), format_number(agg.makespan.max),
                                 format_number(agg.mean_opt), agg.opt_kind);
  for (const auto& [name, value] : agg.metric_means) line += fmt::format(" {}={}", name, format_number(value));
  return line;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  ExperimentResult result = run_trials(config, threads);
  const std::string text = render(result, config.format);
  if (config.out.empty()) {
    std::cout << text;
  } else {
    write_file(config.out, text);
  }
  return result;
}

namespace {

bool is_instance_key(const std::string& key) {
  return key == "k" || key == "D" || key == "m" || key == "n" || key == "opt" || key == "arity" || key == "height";
}

bool is_grid_key(const std::string& key) {
  return key == "T" || key == "trials" || key == "algorithm" || key == "order" || is_instance_key(key);
}

void apply_grid_value(json& cfg, const std::string& key, const json& value) {
  if (key == "T" || key == "trials") {
    cfg["trials"] = value;
  } else if (is_instance_key(key)) {
    cfg["instance"][key] = value;
  } else {
    cfg[key] = value;
  }
}

}  // namespace

std::vector<SweepRow> run_sweep(const json& base_config, const json& grid, int threads) {
  if (!grid.is_object()) throw Error(ErrorCode::kConfig, "grid must be an object of value lists");
  std::vector<std::pair<std::string, std::vector<json>>> axes;
  for (const auto& [key, values] : grid.items()) {
    if (!is_grid_key(key)) throw Error(ErrorCode::kConfig, "unknown sweep parameter '" + key + "'");
    if (!values.is_array()) throw Error(ErrorCode::kConfig, "grid entry '" + key + "' must be a list");
    axes.emplace_back(key, std::vector<json>(values.begin(), values.end()));
  }
  std::vector<SweepRow> rows;
  if (axes.empty()) return rows;
  for (const auto& axis : axes) {
    if (axis.second.empty()) return rows;
  }

  std::vector<std::size_t> index(axes.size(), 0);
  for (;;) {
    SweepRow row;
    row.point = json::object();
    json cfg = base_config;
    try {
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const json& value = axes[a].second[index[a]];
        row.point[axes[a].first] = value;
        apply_grid_value(cfg, axes[a].first, value);
      }
      const auto config = ExperimentConfig::from_json(cfg);
      const auto result = run_trials(config, threads);
      row.aggregate = result.aggregate;
      row.trials = config.trials;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));

    // Odometer step; last axis fastest.
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++index[a] < axes[a].second.size()) break;
      index[a] = 0;
      if (a == 0) return rows;
    }
  }
}

std::string render_sweep(const json& base_config, const json& grid, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "# config: " << base_config.dump() << "\n";
  out << "# grid: " << grid.dump() << "\n";
  if (rows.empty()) return out.str();

  std::vector<std::string> keys;
  for (const auto& [key, unused] : grid.items()) keys.push_back(key);
  std::map<std::string, int> metric_names;
  for (const auto& row : rows) {
    if (!row.aggregate) continue;
    for (const auto& [name, value] : row.aggregate->metric_means) metric_names[name] = 0;
  }
  for (const auto& key : keys) out << key << ",";
  out << "trials,mean_makespan,stddev_makespan,max_makespan,mean_ratio,max_ratio,opt_kind";
  for (const auto& [name, unused] : metric_names) out << ",mean_" << name;
  out << ",error\n";

  for (const auto& row : rows) {
    for (const auto& key : keys) {
      const json& v = row.point.contains(key) ? row.point.at(key) : json(nullptr);
      out << (v.is_string() ? v.get<std::string>() : v.dump()) << ",";
    }
    if (row.aggregate) {
      const auto& agg = *row.aggregate;
      out << row.trials << "," << format_number(agg.makespan.mean) << "," << format_number(agg.makespan.stddev)
          << "," << format_number(agg.makespan.max) << "," << format_number(agg.ratio.mean) << ","
          << format_number(agg.ratio.max) << "," << agg.opt_kind;
      for (const auto& [name, unused] : metric_names) {
        auto it = agg.metric_means.find(name);
        out << "," << (it == agg.metric_means.end() ? "" : format_number(it->second));
      }
    } else {
      out << ",,,,,,";
      for (std::size_t i = 0; i < metric_names.size(); ++i) out << ",";
    }
    std::string error = row.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << "," << error << "\n";
  }
  return out.str();
}

}  // namespace loadbal
