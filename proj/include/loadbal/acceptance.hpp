#pragma once

// Desk-scale acceptance checks. `loadbal verify` and the acceptance test
// binary both run these.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace loadbal {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string measured;
  std::string expected;
  double seconds = 0.0;
  double time_limit = 0.0;
};

struct AcceptanceOptions {
  int threads = 0;
  std::uint64_t seed = 2024;
  std::string scratch_dir;  // for the determinism check; system temp dir when empty
  std::vector<int> only;    // criterion ids; all when empty
};

// Frozen from tools/pilot_bottom_up (200000 trials, seed 0x9170):
// P[root in-degree >= 3] = 0.992235; threshold = pilot - 4 standard errors of
// a 1000-trial frequency.
inline constexpr double kBottomUpPilotFrequency = 0.992235;
inline constexpr double kBottomUpRootThreshold = 0.981;

using PsiFunction = std::function<double(std::span<const double>, double)>;

struct SandwichCheck {
  std::int64_t vectors = 0;
  double worst_lower = 0.0;      // max(||x||_inf - psi(x)); <= tol passes
  double worst_upper = 0.0;      // max(psi(x) - ||x||_inf - ln m / a)
  double worst_grad_sum = 0.0;   // max |sum grad - 1|
  double worst_fd = 0.0;         // max |grad - central difference of psi|

  bool passed() const;
};

// The sandwich, gradient-sum and finite-difference checks with a pluggable
// psi so a corrupted potential can be shown to fail.
SandwichCheck check_potential_sandwich(const PsiFunction& psi_fn, std::int64_t vectors, std::uint64_t seed);

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);
// Pass/fail, measured and expected; deterministic for a given seed.
std::string format_criterion(const CriterionResult& result);
std::string format_timing(const CriterionResult& result);

}  // namespace loadbal
