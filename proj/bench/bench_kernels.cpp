// Serial reference vs OpenMP kernels. Usage: loadbal_bench [threads] [repeats]

#include <fmt/format.h>
#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <functional>

#include "loadbal/experiment.hpp"
#include "loadbal/generators.hpp"
#include "loadbal/rng.hpp"
#include "loadbal/sim.hpp"

using namespace loadbal;

namespace {

double best_seconds(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  fmt::print("{:<30} serial {:8.4f}s  parallel {:8.4f}s  speedup {:5.2f}x  {}\n", name, serial, parallel,
             serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  fmt::print("threads {}, best of {}\n", threads, repeats);

  {
    const Tree tree = gen_fat_tree(3);
    Rng rng(1);
    const auto times = sample_arrival_times(static_cast<std::size_t>(tree.edge_count()), rng).times;
    std::vector<NodeId> a;
    std::vector<NodeId> b;
    const double s = best_seconds(repeats, [&] { a = detect_bad_nodes_serial(tree, times, 3); });
    const double p = best_seconds(repeats, [&] { b = detect_bad_nodes(tree, times, 3, threads); });
    report("detect_bad_nodes (k=3)", s, p, a == b);
  }
  {
    TailCount a;
    TailCount b;
    const double s =
        best_seconds(repeats, [&] { a = empirical_binomial_lower_tail_serial(2'000'000, 81, 1.0 / 3.0, 9, 5); });
    const double p =
        best_seconds(repeats, [&] { b = empirical_binomial_lower_tail(2'000'000, 81, 1.0 / 3.0, 9, 5, threads); });
    report("binomial tail (2e6 samples)", s, p, a.hits == b.hits);
  }
  {
    const auto cfg = ExperimentConfig::from_json(nlohmann::json{
        {"instance", {{"kind", "planted"}, {"m", 100}, {"n", 2000}, {"opt", 1.0}, {"feasible", 3}}},
        {"algorithm", "softmax"},
        {"trials", 64},
        {"seed", 3}});
    std::string a;
    std::string b;
    const double s = best_seconds(repeats, [&] { a = render(run_trials_serial(cfg), OutputFormat::kCsv); });
    const double p = best_seconds(repeats, [&] { b = render(run_trials(cfg, threads), OutputFormat::kCsv); });
    report("run_trials (softmax, 64)", s, p, a == b);
  }
  {
    const auto cfg = ExperimentConfig::from_json(nlohmann::json{{"instance", {{"kind", "recursive"}, {"D", 4}}},
                                                                {"algorithm", "greedy"},
                                                                {"analyzers", {"bad-permutation"}},
                                                                {"trials", 2000},
                                                                {"seed", 4}});
    std::string a;
    std::string b;
    const double s = best_seconds(repeats, [&] { a = render(run_trials_serial(cfg), OutputFormat::kCsv); });
    const double p = best_seconds(repeats, [&] { b = render(run_trials(cfg, threads), OutputFormat::kCsv); });
    report("run_trials (greedy T_4, 2000)", s, p, a == b);
  }
  return 0;
}
