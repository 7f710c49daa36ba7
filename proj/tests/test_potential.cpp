#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "loadbal/acceptance.hpp"
#include "loadbal/error.hpp"
#include "loadbal/potential.hpp"
#include "loadbal/rng.hpp"
#include "loadbal/schedule.hpp"

using namespace loadbal;

namespace {

// Direct evaluation, no max shift; fine for the small entries used here.
double naive_psi(const std::vector<double>& x, double a) {
  double sum = 0.0;
  for (double v : x) sum += std::exp(a * v);
  return std::log(sum) / a;
}

ArrivalSchedule identity(std::size_t n) {
  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return ArrivalSchedule::from_permutation(order);
}

}  // namespace

TEST_CASE("choose_a") {
  CHECK(choose_a(100) == doctest::Approx(0.254530).epsilon(1e-6));
  CHECK(choose_a(2) == kMinSharpness);
  CHECK(choose_a(16) == doctest::Approx(0.169957).epsilon(1e-5));
  CHECK(choose_a(100) == doctest::Approx(std::log(std::log(100.0)) / 6.0));
}

TEST_CASE("psi values") {
  CHECK(psi(std::vector<double>(4, 0.0), 1.0) == doctest::Approx(std::log(4.0)));
  CHECK(psi(std::vector<double>{2.0, 0.0, 0.0}, 2.0) == doctest::Approx(0.5 * std::log(std::exp(4.0) + 2.0)));
  CHECK(psi(std::vector<double>{2.0, 0.0, 0.0}, 2.0) == doctest::Approx(2.017988).epsilon(1e-6));
  CHECK(psi(std::vector<double>{2.0, 0.0, 0.0}, 2.0) == doctest::Approx(naive_psi({2.0, 0.0, 0.0}, 2.0)));
  // no overflow where the naive form would
  CHECK(std::isfinite(psi(std::vector<double>{1e4, 1e4}, 1.0)));
  CHECK(psi(std::vector<double>{1e4, 1e4}, 1.0) == doctest::Approx(1e4 + std::log(2.0)));
}

TEST_CASE("grad_psi values") {
  const auto uniform = grad_psi(std::vector<double>(3, 0.0), 0.7);
  for (double g : uniform) CHECK(g == doctest::Approx(1.0 / 3.0));
  const auto g = grad_psi(std::vector<double>{1.0, 0.0}, 1.0);
  CHECK(g[0] == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(0.268941).epsilon(1e-6));
}

TEST_CASE("grad_psi matches a finite-difference oracle of the naive potential") {
  Rng rng(7);
  std::uniform_real_distribution<double> entry(0.0, 3.0);
  for (int s = 0; s < 50; ++s) {
    std::vector<double> x(5);
    for (double& v : x) v = entry(rng);
    const double a = s % 2 == 0 ? 0.3 : 1.1;
    const auto grad = grad_psi(x, a);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto up = x;
      auto down = x;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      CHECK(grad[i] == doctest::Approx((naive_psi(up, a) - naive_psi(down, a)) / 2e-6).epsilon(1e-6));
      CHECK(grad[i] > 0.0);
      CHECK(grad[i] < 1.0);
      sum += grad[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("delta_psi values") {
  const std::vector<double> x{1.0, 0.0};
  const double e = std::exp(1.0);
  CHECK(delta_psi(x, 0, 0.2, 1.0) == doctest::Approx(std::log(std::exp(1.2) + 1.0) - std::log(e + 1.0)));
  CHECK(delta_psi(x, 1, 0.3, 1.0) == doctest::Approx(std::log(e + std::exp(0.3)) - std::log(e + 1.0)));
  CHECK(delta_psi(x, 0, 0.2, 1.0) == doctest::Approx(0.150021).epsilon(1e-6));
  CHECK(delta_psi(x, 1, 0.3, 1.0) == doctest::Approx(0.089924).epsilon(1e-6));
  CHECK(delta_psi(x, 1, 0.3, 1.0) < delta_psi(x, 0, 0.2, 1.0));
  CHECK(delta_psi(x, 1, 0.0, 1.0) == 0.0);
  auto after = x;
  after[0] += 0.2;
  CHECK(delta_psi(x, 0, 0.2, 1.0) == doctest::Approx(psi(after, 1.0) - psi(x, 1.0)));
}

TEST_CASE("sandwich check passes for psi and fails for a sign-flipped psi") {
  const auto good = check_potential_sandwich([](std::span<const double> x, double a) { return psi(x, a); }, 200, 1);
  CHECK(good.passed());
  const auto flipped =
      check_potential_sandwich([](std::span<const double> x, double a) { return -psi(x, a); }, 200, 1);
  CHECK_FALSE(flipped.passed());
  CHECK(flipped.worst_lower > 1.0);
}

TEST_CASE("softmax step choices") {
  SUBCASE("single feasible machine is forced") {
    SoftmaxScheduler s(PotentialParams{1.0, 3}, 10);
    CHECK(s.step(Job::make(0, {{2, 0.5}})) == 2);
  }
  SUBCASE("smaller potential increase wins") {
    SoftmaxScheduler s(PotentialParams{1.0, 2}, 10);
    CHECK(s.step(Job::make(0, {{0, 1.0}})) == 0);
    CHECK(s.virtual_loads()[0] == 1.0);
    CHECK(s.step(Job::make(1, {{0, 0.2}, {1, 0.3}})) == 1);
  }
  SUBCASE("ties go to the lowest index") {
    SoftmaxScheduler s(PotentialParams{0.5, 3}, 10);
    CHECK(s.step(Job::make(0, {{0, 0.4}, {1, 0.4}, {2, 0.4}})) == 0);
  }
  SUBCASE("a job with no loads is infeasible") {
    SoftmaxScheduler s(PotentialParams{1.0, 2}, 10);
    try {
      s.step(Job::make(0, {}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInfeasibleInstance);
    }
  }
}

TEST_CASE("softmax_run resets virtual loads once, before job n/2") {
  Instance inst{2, {}};
  for (JobId j = 0; j < 4; ++j) inst.jobs.push_back(Job::make(j, {{0, 0.25}, {1, 0.5}}));
  std::vector<bool> resets;
  std::vector<std::vector<double>> before;
  softmax_run(inst, identity(4), PotentialParams{1.0, 2}, [&](const StepEvent& ev) {
    resets.push_back(ev.phase_reset);
    before.emplace_back(ev.virtual_before.begin(), ev.virtual_before.end());
  });
  CHECK(resets == std::vector<bool>{false, false, true, false});
  CHECK(before[2] == std::vector<double>{0.0, 0.0});
  CHECK(std::accumulate(before[3].begin(), before[3].end(), 0.0) == doctest::Approx(0.25));

  Instance single{1, {Job::make(0, {{0, 1.0}})}};
  int steps = 0;
  softmax_run(single, identity(1), PotentialParams{1.0, 1}, [&](const StepEvent& ev) {
    CHECK_FALSE(ev.phase_reset);
    ++steps;
  });
  CHECK(steps == 1);
}

TEST_CASE("softmax_run rejects a bad schedule") {
  Instance inst{1, {Job::make(0, {{0, 1.0}}), Job::make(1, {{0, 1.0}})}};
  CHECK_THROWS_AS(softmax_run(inst, ArrivalSchedule::from_permutation({0, 0}), PotentialParams{1.0, 1}), Error);
  CHECK_THROWS_AS(softmax_run(inst, ArrivalSchedule::from_permutation({0}), PotentialParams{1.0, 1}), Error);
}

TEST_CASE("doubling keeps normalized loads bounded for unit jobs") {
  Instance inst{3, {}};
  for (JobId j = 0; j < 9; ++j) inst.jobs.push_back(Job::make(j, {{j % 3, 1.0}, {(j + 1) % 3, 1.0}}));
  double worst = 0.0;
  const auto out = doubling_wrap(inst, identity(9), PotentialParams::for_machines(3),
                                 [&](const StepEvent& ev) { worst = std::max(worst, ev.normalized_load); });
  CHECK(out.final_guess >= 1.0);
  CHECK(worst <= 1.0);
  CHECK(out.assignment.is_total());
}

TEST_CASE("doubling trace: min load 1 then 10") {
  Instance inst{1, {Job::make(0, {{0, 1.0}}), Job::make(1, {{0, 10.0}})}};
  const auto out = doubling_wrap(inst, identity(2), PotentialParams{1.0, 1});
  // g: 1 -> 2 (load 1 >= g), 2 -> 4 -> 8 -> 16 (load 10 >= g), then 2*LB = 20 > 16 -> 32
  CHECK(out.final_guess == 32.0);
  CHECK(out.final_guess > 20.0);
  CHECK(out.doublings == 5);
  CHECK(makespan(out.assignment, inst) == 11.0);
}

TEST_CASE("doubling trace: a job whose only load reaches the guess") {
  Instance inst{2, {Job::make(0, {{0, 1.0}, {1, 1.0}}), Job::make(1, {{1, 5.0}})}};
  const auto out = doubling_wrap(inst, identity(2), PotentialParams{1.0, 2});
  CHECK(out.assignment.machine_of(1).value() == 1);
  CHECK(out.final_guess > 5.0);
  CHECK_THROWS_AS(doubling_wrap(Instance{1, {Job::make(0, {})}}, identity(1), PotentialParams{1.0, 1}), Error);
}
