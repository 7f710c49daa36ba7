// Runs every acceptance criterion and prints one line per criterion.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "loadbal/acceptance.hpp"

int main(int argc, char** argv) {
  loadbal::AcceptanceOptions options;
  options.scratch_dir = (std::filesystem::temp_directory_path() / "loadbal_acceptance_test").string();
  for (int i = 1; i < argc; ++i) options.only.push_back(std::atoi(argv[i]));
  bool all = true;
  for (const auto& r : loadbal::run_acceptance(options)) {
    std::cout << loadbal::format_criterion(r) << "\n  time " << loadbal::format_timing(r) << std::endl;
    all = all && r.passed;
  }
  std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
  return all ? 0 : 1;
}
