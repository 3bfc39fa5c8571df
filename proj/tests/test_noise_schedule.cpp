#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "fedphd/noise_schedule.hpp"
#include "fedphd/rng.hpp"

using fedphd::build_schedule;
using fedphd::NoiseSchedule;

TEST_CASE("constant-beta schedule matches the closed form (1-beta)^t") {
  const NoiseSchedule sched = build_schedule(3, 0.1, 0.1);
  CHECK(sched.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(sched.alpha_bar(2) == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(sched.alpha_bar(3) == doctest::Approx(0.729).epsilon(1e-12));
}

TEST_CASE("tiny beta keeps alpha_bar at one") {
  const NoiseSchedule sched = build_schedule(1, 1e-15, 1e-15);
  CHECK(sched.alpha_bar(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear 1000-step schedule matches an independent product loop") {
  const int steps = 1000;
  const double beta_start = 1e-4;
  const double beta_end = 0.02;
  const NoiseSchedule sched = build_schedule(steps, beta_start, beta_end);

  // Product-loop oracle, written independently of the schedule internals.
  double product = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double beta =
        beta_start + (beta_end - beta_start) * (t - 1) / (steps - 1);
    product *= 1.0 - beta;
    if (t == steps) {
      const double rel =
          std::abs(sched.alpha_bar(t) - product) / std::abs(product);
      CHECK(rel <= 1e-12);
    }
  }
  CHECK(sched.beta(1) == doctest::Approx(beta_start).epsilon(1e-15));
  CHECK(sched.beta(steps) == doctest::Approx(beta_end).epsilon(1e-15));
}

TEST_CASE("schedule invariants hold for random valid betas") {
  fedphd::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int steps = 1 + static_cast<int>(rng.uniform_int(64));
    std::vector<double> betas(steps);
    for (double& beta : betas) beta = 1e-4 + 0.5 * rng.uniform();
    const NoiseSchedule sched{betas};
    double previous = 1.0;
    for (int t = 1; t <= steps; ++t) {
      CHECK(sched.alpha_bar(t) < previous);       // strictly decreasing
      CHECK(sched.alpha_bar(t) > 0.0);
      CHECK(sched.alpha_bar(t) ==
            sched.alpha_bar(t - 1) * sched.alpha(t));  // exact recurrence
      previous = sched.alpha_bar(t);
    }
  }
}

TEST_CASE("invalid schedule arguments are rejected") {
  CHECK_THROWS_AS(build_schedule(0, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.1, 1.0), std::invalid_argument);
  const NoiseSchedule sched = build_schedule(4, 0.1, 0.2);
  CHECK_THROWS_AS(sched.beta(0), std::invalid_argument);
  CHECK_THROWS_AS(sched.beta(5), std::invalid_argument);
  CHECK(sched.alpha_bar(0) == 1.0);
}
