// loadbal: generate instances, run and sweep experiments, verify acceptance.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "loadbal/acceptance.hpp"
#include "loadbal/error.hpp"
#include "loadbal/experiment.hpp"
#include "loadbal/generators.hpp"
#include "loadbal/graphbal.hpp"
#include "loadbal/rng.hpp"

using nlohmann::json;
using namespace loadbal;

namespace {

struct GenArgs {
  std::string kind;
  std::int32_t k = 2;
  std::int32_t depth = 3;
  std::int32_t m = 0;
  std::int32_t n = 0;
  double opt = 1.0;
  std::int32_t feasible = 2;
  std::int32_t arity = 2;
  std::int32_t height = 3;
  std::uint64_t seed = 0;
  std::string out;
  bool allow_large = false;
};

struct RunArgs {
  std::string config;
  std::string instance;
  std::string algo;
  std::optional<std::int64_t> trials;
  std::optional<std::uint64_t> seed;
  std::string order;
  std::string out;
  std::string format;
  std::string grid;
  int threads = 0;
  bool allow_large = false;
};

std::uint64_t parse_seed(const std::string& text) {
  try {
    std::size_t used = 0;
    const auto value = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "bad seed '" + text + "'");
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* value = std::getenv("LOADBAL_SEED");
  if (value == nullptr || *value == '\0') return std::nullopt;
  return parse_seed(value);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

int cmd_gen(const GenArgs& g) {
  std::string text;
  std::string counts;
  if (g.kind == "fat-tree" || g.kind == "recursive" || g.kind == "full-tree") {
    const Tree tree = g.kind == "fat-tree"    ? gen_fat_tree(g.k, g.allow_large)
                      : g.kind == "recursive" ? gen_recursive_tree(g.depth, g.allow_large)
                                              : gen_full_tree(g.arity, g.height, g.allow_large);
    text = to_json(tree).dump() + "\n";
    counts = fmt::format("nodes={} edges={}", tree.node_count(), tree.edge_count());
  } else if (g.kind == "planted") {
    PlantedSpec spec{g.m, g.n, g.opt, g.feasible, 0.0};
    const auto seed = env_seed().value_or(g.seed);
    Rng rng = make_rng(seed, 0, Stream::kInstance);
    const auto planted = gen_planted(spec, rng);
    text = to_json(planted.instance).dump() + "\n";
    counts = fmt::format("machines={} jobs={}", planted.instance.machine_count, planted.instance.job_count());
  } else if (g.kind == "classic-pairs") {
    const Instance inst = classic_pairs_instance(g.m);
    text = to_json(inst).dump() + "\n";
    counts = fmt::format("machines={} jobs={}", inst.machine_count, inst.job_count());
  } else {
    throw Error(ErrorCode::kConfig, "unknown generator '" + g.kind + "'");
  }
  emit(g.out, text);
  std::cerr << counts << "\n";
  return 0;
}

json base_config(const RunArgs& r) {
  json cfg = json::object();
  if (!r.config.empty()) {
    try {
      cfg = json::parse(read_file(r.config));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, r.config + ": " + e.what());
    }
    if (!cfg.is_object()) throw Error(ErrorCode::kConfig, r.config + ": config must be an object");
  }
  if (!r.instance.empty()) cfg["instance"] = {{"kind", "file"}, {"path", r.instance}};
  if (!r.algo.empty()) cfg["algorithm"] = r.algo;
  if (r.trials) cfg["trials"] = *r.trials;
  if (r.seed) cfg["seed"] = *r.seed;
  if (const auto s = env_seed()) cfg["seed"] = *s;
  if (!r.order.empty()) cfg["order"] = r.order;
  if (!r.out.empty()) cfg["out"] = r.out;
  if (!r.format.empty()) cfg["format"] = r.format;
  if (r.allow_large) cfg["allow_large"] = true;
  if (!cfg.contains("instance")) throw Error(ErrorCode::kConfig, "no instance: pass --instance or --config");
  return cfg;
}

int cmd_run(const RunArgs& r) {
  const auto config = ExperimentConfig::from_json(base_config(r));
  const auto result = run_experiment(config, r.threads);
  std::cerr << summary_line(result) << "\n";
  return 0;
}

int cmd_sweep(const RunArgs& r) {
  const json base = base_config(r);
  ExperimentConfig::from_json(base);
  json grid = json::object();
  if (!r.grid.empty()) {
    try {
      grid = json::parse(r.grid.front() == '{' ? r.grid : read_file(r.grid));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, std::string("grid: ") + e.what());
    }
  }
  const auto rows = run_sweep(base, grid, r.threads);
  emit(base.value("out", std::string()), render_sweep(base, grid, rows));
  std::cerr << fmt::format("points={}\n", rows.size());
  return 0;
}

int cmd_verify(int threads, std::uint64_t seed, std::vector<int> only) {
  AcceptanceOptions options;
  options.threads = threads;
  options.seed = env_seed().value_or(seed);
  options.only = std::move(only);
  bool all = true;
  for (const auto& r : run_acceptance(options)) {
    std::cout << format_criterion(r) << std::endl;
    std::cerr << "  time " << format_timing(r) << "\n";
    all = all && r.passed;
  }
  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << "\n";
  return all ? 0 : 1;
}

void add_run_flags(CLI::App* cmd, RunArgs& r) {
  cmd->add_option("--config", r.config, "experiment config JSON");
  cmd->add_option("--instance", r.instance, "instance or tree JSON file");
  cmd->add_option("--algo", r.algo, "softmax | greedy | opt");
  cmd->add_option("--trials", r.trials, "number of trials");
  cmd->add_option_function<std::string>("--seed", [&r](const std::string& s) { r.seed = parse_seed(s); },
                                        "master seed (LOADBAL_SEED overrides)");
  cmd->add_option("--order", r.order, "permutation | times | bottom-up | adversarial");
  cmd->add_option("--out", r.out, "output path (stdout when absent)");
  cmd->add_option("--format", r.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", r.threads, "cap on worker threads");
  cmd->add_flag("--allow-large", r.allow_large, "lift generator size limits");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loadbal: online load balancing experiments"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a tree or instance");
  gen_cmd->add_option("kind", gen.kind, "fat-tree | recursive | full-tree | planted | classic-pairs")->required();
  gen_cmd->add_option("--k", gen.k, "fat-tree parameter");
  gen_cmd->add_option("--D", gen.depth, "recursive tree depth");
  gen_cmd->add_option("--m", gen.m, "machines");
  gen_cmd->add_option("--n", gen.n, "jobs");
  gen_cmd->add_option("--opt", gen.opt, "planted optimum");
  gen_cmd->add_option("--feasible", gen.feasible, "feasible machines per planted job");
  gen_cmd->add_option("--arity", gen.arity, "full-tree arity");
  gen_cmd->add_option("--height", gen.height, "full-tree height");
  gen_cmd->add_option_function<std::string>("--seed", [&gen](const std::string& s) { gen.seed = parse_seed(s); },
                                            "seed for planted instances");
  gen_cmd->add_option("--out", gen.out, "output path (stdout when absent)");
  gen_cmd->add_flag("--allow-large", gen.allow_large, "lift generator size limits");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run trials and write per-trial results");
  add_run_flags(run_cmd, run);

  RunArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a config over a parameter grid");
  add_run_flags(sweep_cmd, sweep);
  sweep_cmd->add_option("--grid", sweep.grid, "grid JSON, inline or a file path");

  int verify_threads = 0;
  std::uint64_t verify_seed = AcceptanceOptions{}.seed;
  std::vector<int> verify_only;
  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
  verify_cmd->add_option("--only", verify_only, "criterion ids to run");
  verify_cmd->add_option("--threads", verify_threads, "cap on worker threads");
  verify_cmd->add_option_function<std::string>(
      "--seed", [&verify_seed](const std::string& s) { verify_seed = parse_seed(s); }, "master seed");

  try {
    app.parse(argc, argv);
    if (*gen_cmd) return cmd_gen(gen);
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*verify_cmd) return cmd_verify(verify_threads, verify_seed, verify_only);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code_for(ErrorCode::kConfig);
  } catch (const Error& e) {
    std::cerr << "loadbal: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << "loadbal: config: " << e.what() << "\n";
    return exit_code_for(ErrorCode::kConfig);
  } catch (const std::exception& e) {
    std::cerr << "loadbal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
