#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "loadbal_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(LOADBAL_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string at(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("gen writes trees and instances") {
  REQUIRE(run("gen fat-tree --k 2 --out " + at("fat2.json")) == 0);
  CHECK(nlohmann::json::parse(slurp(at("fat2.json"))).at("n") == 273);
  REQUIRE(run("gen recursive --D 3 --out " + at("rec3.json")) == 0);
  CHECK(nlohmann::json::parse(slurp(at("rec3.json"))).at("n") == 135);
  REQUIRE(run("gen planted --m 4 --n 10 --opt 2 --seed 3 --out " + at("planted.json")) == 0);
  CHECK(nlohmann::json::parse(slurp(at("planted.json"))).at("jobs").size() == 10);
  REQUIRE(run("gen classic-pairs --m 8 --out " + at("pairs.json")) == 0);
}

TEST_CASE("gen exit codes") {
  CHECK(run("gen recursive --D 9999") == 3);
  CHECK(run("gen fat-tree --k 4") == 3);
  CHECK(run("gen planted --m 4 --n 2") == 2);
  CHECK(run("gen nonsense") == 2);
  CHECK(run("gen fat-tree --k 1 --out /nonexistent/dir/x.json") == 5);
}

TEST_CASE("run is deterministic across invocations and thread counts") {
  REQUIRE(run("gen fat-tree --k 2 --out " + at("tree.json")) == 0);
  const std::string out = at("run.csv");
  const std::string base =
      "run --instance " + at("tree.json") + " --algo greedy --order times --trials 50 --seed 11 --out " + out;
  REQUIRE(run(base + " --threads 1") == 0);
  const std::string first = slurp(out);
  REQUIRE(run(base + " --threads 1") == 0);
  CHECK(slurp(out) == first);
  REQUIRE(run(base + " --threads 8") == 0);
  CHECK(slurp(out) == first);
  CHECK(first.rfind("# config: ", 0) == 0);
  CHECK(first.find("\"seed\":11") != std::string::npos);
  CHECK(first.find("#agg") != std::string::npos);

  REQUIRE(run(base + " --format json --threads 4") == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("trials").size() == 50);
}

TEST_CASE("LOADBAL_SEED overrides --seed") {
  REQUIRE(run("gen recursive --D 2 --out " + at("r2.json")) == 0);
  const std::string out = at("seeded.csv");
  REQUIRE(run("run --instance " + at("r2.json") + " --algo greedy --seed 1 --out " + out) == 0);
  CHECK(slurp(out).find("\"seed\":1,") != std::string::npos);
  REQUIRE(std::system(("LOADBAL_SEED=77 " + std::string(LOADBAL_CLI) + " run --instance " + at("r2.json") +
                       " --algo greedy --seed 1 --out " + out + " 2>/dev/null")
                          .c_str()) == 0);
  CHECK(slurp(out).find("\"seed\":77") != std::string::npos);
}

TEST_CASE("run and sweep errors") {
  CHECK(run("run --instance " + at("missing.json")) == 5);
  CHECK(run("run --instance " + at("tree.json") + " --algo bogus") == 2);
  CHECK(run("run --algo greedy") == 2);
  CHECK(run("run --instance " + at("tree.json") + " --format xml") == 2);
  CHECK(run("frobnicate") == 2);

  std::ofstream(at("infeasible.json")) << R"({"machines": 2, "jobs": [{"id": 0, "loads": {}}]})";
  CHECK(run("run --instance " + at("infeasible.json") + " --algo softmax") == 4);
}

TEST_CASE("sweep writes one row per point") {
  std::ofstream(at("sweep.json")) << R"({"instance": {"kind": "recursive", "D": 1}, "algorithm": "opt", "trials": 2})";
  REQUIRE(run("sweep --config " + at("sweep.json") + " --grid '{\"D\": [1, 2, 3]}' --out " + at("sweep.csv")) == 0);
  const std::string text = slurp(at("sweep.csv"));
  std::size_t rows = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) rows += line.empty() || line[0] == '#' ? 0 : 1;
  CHECK(rows == 1 + 3);

  REQUIRE(run("sweep --config " + at("sweep.json") + " --grid '{}' --out " + at("empty.csv")) == 0);
  const std::string empty = slurp(at("empty.csv"));
  CHECK(empty.find("\n#") != std::string::npos);
  CHECK(empty.find("mean_makespan") == std::string::npos);
}

TEST_CASE("verify report is reproducible") {
  const std::string cmd = std::string(LOADBAL_CLI) + " verify --only 2 9 13 2>/dev/null > ";
  REQUIRE(std::system((cmd + at("verify1.txt")).c_str()) == 0);
  REQUIRE(std::system((cmd + at("verify2.txt")).c_str()) == 0);
  CHECK(slurp(at("verify1.txt")) == slurp(at("verify2.txt")));
  CHECK(slurp(at("verify1.txt")).find("[PASS]  9") != std::string::npos);
}
