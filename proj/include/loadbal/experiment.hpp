#pragma once

// Seeded, reproducible Monte-Carlo experiments: an instance source, an
// algorithm and an arrival-order model, repeated over independent trials.
// Trials may run in parallel; results never depend on the thread count.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "loadbal/core.hpp"
#include "loadbal/graphbal.hpp"
#include "loadbal/schedule.hpp"

namespace loadbal {

enum class Algorithm { kSoftmax, kGreedy, kOpt };
enum class OrderMode { kPermutation, kTimes, kBottomUp, kAdversarial };
enum class Analyzer { kBadNodes, kBadSubtree, kBadPermutation, kFullyLoaded };
enum class OutputFormat { kCsv, kJson };

struct ExperimentConfig {
  // Source descriptor, e.g. {"kind": "fat-tree", "k": 3}. Kinds: file,
  // fat-tree, full-tree, recursive, planted, classic-pairs, tree, instance.
  nlohmann::json instance;
  Algorithm algorithm = Algorithm::kSoftmax;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  OrderMode order = OrderMode::kPermutation;
  std::vector<Analyzer> analyzers;
  bool shuffle_labels = false;
  bool doubling = false;
  bool deterministic_ties = false;
  bool phantom_root_edge = false;
  bool record_loads = false;
  bool allow_large = false;
  std::optional<std::int32_t> k;
  std::optional<double> a;
  OutputFormat format = OutputFormat::kCsv;
  std::string out;
  std::int32_t verbosity = 0;

  // Throws kConfig on unknown names or wrong types.
  static ExperimentConfig from_json(const nlohmann::json& j);
  // Fully resolved, defaults included.
  nlohmann::json to_json() const;
};

struct TrialReport {
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  double makespan = 0.0;
  double opt = 0.0;
  double ratio = 0.0;
  std::map<std::string, double> metrics;
  std::vector<double> loads;  // only with record_loads
};

struct SummaryStats {
  std::int64_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;

  static SummaryStats of(std::vector<double> values);
  nlohmann::json to_json() const;
};

struct Aggregate {
  SummaryStats makespan;
  SummaryStats ratio;
  double mean_opt = 0.0;
  std::string opt_kind;  // exact | lower-bound | planted
  std::map<std::string, double> metric_means;

  nlohmann::json to_json() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialReport> trials;  // by trial index
  Aggregate aggregate;
};

// threads <= 0 uses the OpenMP default.
ExperimentResult run_trials(const ExperimentConfig& config, int threads = 0);
// Reference runner: one trial after another on the calling thread.
ExperimentResult run_trials_serial(const ExperimentConfig& config);

std::string render(const ExperimentResult& result, OutputFormat format);
std::string summary_line(const ExperimentResult& result);

// Runs and writes config.out (stdout when empty) in config.format.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads);

struct SweepRow {
  nlohmann::json point;
  std::optional<Aggregate> aggregate;
  std::int64_t trials = 0;
  std::string error;
};

// One row per point of the cartesian product of `grid` (keys k, D, m, n,
// opt, arity, height, T, algorithm, order). A key with an empty list, or an
// empty grid, yields no rows. Per-point errors land in the row.
std::vector<SweepRow> run_sweep(const nlohmann::json& base_config, const nlohmann::json& grid, int threads);
std::string render_sweep(const nlohmann::json& base_config, const nlohmann::json& grid,
                         const std::vector<SweepRow>& rows);

// Shared helpers.
std::string format_number(double value);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace loadbal
