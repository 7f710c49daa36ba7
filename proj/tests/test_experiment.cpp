#include <doctest.h>

#include <cmath>
#include <sstream>

#include "loadbal/error.hpp"
#include "loadbal/experiment.hpp"
#include "loadbal/potential.hpp"

using namespace loadbal;
using nlohmann::json;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = ExperimentConfig::from_json(json::parse(R"({"instance": {"kind": "fat-tree", "k": 2}})"));
  CHECK(c.seed == 0);
  CHECK(c.trials == 1);
  CHECK(c.algorithm == Algorithm::kSoftmax);
  const json resolved = c.to_json();
  CHECK(resolved.contains("seed"));
  CHECK(ExperimentConfig::from_json(resolved).to_json() == resolved);

  CHECK(code_of([] { ExperimentConfig::from_json(json::parse(R"({"instance": {}, "bogus": 1})")); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { ExperimentConfig::from_json(json::parse(R"({"instance": {}, "algorithm": "x"})")); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { ExperimentConfig::from_json(json::parse(R"({"instance": {}, "trials": "many"})")); }) ==
        ErrorCode::kConfig);
}

TEST_CASE("opt on trees has ratio one") {
  for (const char* inst : {R"({"kind": "fat-tree", "k": 2})", R"({"kind": "recursive", "D": 3})",
                           R"({"kind": "full-tree", "arity": 3, "height": 4})"}) {
    json cfg{{"instance", json::parse(inst)}, {"algorithm", "opt"}, {"trials", 3}};
    const auto r = run_trials(ExperimentConfig::from_json(cfg));
    for (const auto& t : r.trials) {
      CHECK(t.makespan == 1.0);
      CHECK(t.ratio == 1.0);
    }
    CHECK(r.aggregate.ratio.mean == 1.0);
  }
}

TEST_CASE("parallel and serial runners agree") {
  const std::vector<json> configs{
      {{"instance", {{"kind", "fat-tree"}, {"k", 2}}},
       {"algorithm", "greedy"},
       {"order", "times"},
       {"analyzers", {"bad-nodes", "bad-subtree", "fully-loaded"}},
       {"trials", 16},
       {"seed", 5}},
      {{"instance", {{"kind", "planted"}, {"m", 6}, {"n", 12}, {"opt", 1.0}}},
       {"algorithm", "softmax"},
       {"doubling", true},
       {"trials", 16},
       {"seed", 6}},
      {{"instance", {{"kind", "classic-pairs"}, {"m", 16}}},
       {"algorithm", "greedy"},
       {"order", "adversarial"},
       {"trials", 16},
       {"seed", 7}},
      {{"instance", {{"kind", "recursive"}, {"D", 3}}},
       {"algorithm", "greedy"},
       {"order", "bottom-up"},
       {"shuffle_labels", true},
       {"analyzers", {"bad-permutation"}},
       {"trials", 16},
       {"seed", 8}},
  };
  for (const auto& j : configs) {
    const auto cfg = ExperimentConfig::from_json(j);
    const auto serial = render(run_trials_serial(cfg), OutputFormat::kCsv);
    CHECK(render(run_trials(cfg, 1), OutputFormat::kCsv) == serial);
    CHECK(render(run_trials(cfg, 8), OutputFormat::kCsv) == serial);
    CHECK(render(run_trials(cfg, 3), OutputFormat::kJson) == render(run_trials_serial(cfg), OutputFormat::kJson));
  }
}

TEST_CASE("csv layout") {
  json cfg{{"instance", {{"kind", "planted"}, {"m", 4}, {"n", 8}, {"opt", 1.0}}}, {"trials", 3}, {"seed", 9}};
  const auto lines = lines_of(render(run_trials(ExperimentConfig::from_json(cfg)), OutputFormat::kCsv));
  REQUIRE(lines.size() == 1 + 1 + 3 + 2);
  CHECK(lines[0].rfind("# config: ", 0) == 0);
  const json embedded = json::parse(lines[0].substr(10));
  CHECK(embedded.at("seed") == 9);
  CHECK(lines[1].rfind("trial,seed,makespan,opt,ratio", 0) == 0);
  CHECK(lines[2].rfind("0,", 0) == 0);
  CHECK(lines[5].rfind("#agg", 0) == 0);
  CHECK(lines[6].rfind("# aggregate: ", 0) == 0);

  const json out = json::parse(render(run_trials(ExperimentConfig::from_json(cfg)), OutputFormat::kJson));
  CHECK(out.at("config").at("seed") == 9);
  CHECK(out.at("trials").size() == 3);
}

TEST_CASE("classic adversary forces logarithmic load") {
  for (const char* algo : {"softmax", "greedy"}) {
    json cfg{{"instance", {{"kind", "classic-pairs"}, {"m", 32}}},
             {"algorithm", algo},
             {"order", "adversarial"},
             {"trials", 4},
             {"seed", 1}};
    const auto r = run_trials(ExperimentConfig::from_json(cfg));
    for (const auto& t : r.trials) {
      CHECK(t.makespan >= 5.0);
      CHECK(t.opt == 1.0);
    }
  }
}

TEST_CASE("summary statistics") {
  const auto s = SummaryStats::of({4.0, 1.0, 3.0, 2.0});
  CHECK(s.count == 4);
  CHECK(s.mean == 2.5);
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.p50 == 2.0);
  CHECK(s.p90 == 4.0);
}

TEST_CASE("sweep over fat trees grows with k") {
  json base{{"instance", {{"kind", "fat-tree"}, {"k", 1}}},
            {"algorithm", "greedy"},
            {"order", "times"},
            {"trials", 3},
            {"seed", 2}};
  const auto rows = run_sweep(base, json{{"k", {1, 2, 3}}}, 0);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].aggregate.has_value());
    CHECK(rows[i].aggregate->makespan.mean >= rows[i - 1].aggregate->makespan.mean);
  }
}

TEST_CASE("sweep of softmax on planted instances stays under the cap") {
  json base{{"instance", {{"kind", "planted"}, {"m", 10}, {"n", 20}, {"opt", 1.0}}},
            {"algorithm", "softmax"},
            {"trials", 4},
            {"seed", 3}};
  const json grid{{"m", {10, 100, 1000}}, {"n", {2000}}};
  const auto rows = run_sweep(base, grid, 0);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    REQUIRE(row.aggregate.has_value());
    const auto m = row.point.at("m").get<std::int32_t>();
    const double a = choose_a(m);
    CHECK(row.aggregate->ratio.max <= 2.0 * (2.0 * std::exp(2.0 * a) + std::log(m) / a));
  }
  CHECK(render_sweep(base, grid, rows).find("# grid: ") != std::string::npos);
}

TEST_CASE("sweep edge cases") {
  json base{{"instance", {{"kind", "recursive"}, {"D", 1}}}, {"algorithm", "opt"}, {"trials", 2}};
  CHECK(run_sweep(base, json::object(), 0).empty());
  CHECK(run_sweep(base, json{{"D", json::array()}}, 0).empty());
  const auto rows = run_sweep(base, json{{"D", {2, 9999, 3}}}, 0);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].aggregate.has_value());
  CHECK_FALSE(rows[1].aggregate.has_value());
  CHECK(rows[1].error.find("size-limit") != std::string::npos);
  CHECK(rows[2].aggregate.has_value());
  CHECK(code_of([&] { run_sweep(base, json{{"nope", {1}}}, 0); }) == ErrorCode::kConfig);
}

TEST_CASE("number formatting") {
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(std::nan("")) == "nan");
}
