#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "frodo/optimizer.hpp"
#include "frodo/rng.hpp"

using frodo::AgentState;
using frodo::MemoryKernel;
using frodo::OptimizerConfig;
using frodo::UpdateStatus;
using frodo::Variant;
using frodo::Vec;

namespace {

OptimizerConfig make(Variant v, double alpha, double beta = 0.0,
                     double lambda = 0.15, int horizon = 1) {
  OptimizerConfig cfg;
  cfg.variant = v;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.lambda = lambda;
  cfg.horizon = horizon;
  return cfg;
}

}  // namespace

TEST_CASE("single gradient step without memory") {
  auto cfg = make(Variant::no_memory, 0.5);
  AgentState s{.x = {1.0, 0.0}};
  CHECK(descent_update(s, {1.0, 0.0}, cfg, nullptr) == UpdateStatus::ok);
  CHECK(s.x == Vec{0.5, 0.0});
}

TEST_CASE("fractional with empty history reduces to the plain step") {
  auto frac = make(Variant::fractional, 0.7, 0.9, 0.15, 40);
  MemoryKernel kernel = frac.build_kernel();
  AgentState a{.x = {1.25, -2.0}};
  descent_update(a, {0.5, 0.25}, frac, &kernel);

  auto plain = make(Variant::no_memory, 0.7);
  AgentState b{.x = {1.25, -2.0}};
  descent_update(b, {0.5, 0.25}, plain, nullptr);

  CHECK(a.x == b.x);  // bitwise
  CHECK(a.grad_history.size() == 1);
}

TEST_CASE("hand-evaluated fractional update") {
  // mu(1) = 1, so M = (1,0); x - 1*g - 1*M = (3,0) - (1,0) - (1,0) = (1,0)
  auto cfg = make(Variant::fractional, 1.0, 1.0, 0.5, 10);
  MemoryKernel kernel = cfg.build_kernel();
  AgentState s{.x = {3.0, 0.0}};
  s.grad_history.push_back({1.0, 0.0});
  descent_update(s, {1.0, 0.0}, cfg, &kernel);
  CHECK(s.x == Vec{1.0, 0.0});
}

TEST_CASE("beta = 0 makes fractional, heavy_ball and no_memory bit-identical") {
  frodo::Rng rng(17);
  auto frac = make(Variant::fractional, 0.31, 0.0, 0.12, 25);
  auto heavy = make(Variant::heavy_ball, 0.31, 0.0);
  auto plain = make(Variant::no_memory, 0.31, /*beta ignored*/ 7.0);
  MemoryKernel frac_kernel = frac.build_kernel();
  MemoryKernel heavy_kernel = heavy.build_kernel();

  AgentState a{.x = {0.4, -1.0, 2.0}};
  AgentState b = a;
  AgentState c = a;
  for (int step = 0; step < 200; ++step) {
    const Vec g{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    descent_update(a, g, frac, &frac_kernel);
    descent_update(b, g, heavy, &heavy_kernel);
    descent_update(c, g, plain, nullptr);
    CHECK(a.x == b.x);
    CHECK(a.x == c.x);
  }
}

TEST_CASE("horizon 1 makes fractional and heavy_ball bit-identical for any lambda") {
  frodo::Rng rng(18);
  for (double lambda : {0.1, 0.37, 0.99}) {
    auto frac = make(Variant::fractional, 0.45, 0.3, lambda, 1);
    auto heavy = make(Variant::heavy_ball, 0.45, 0.3);
    MemoryKernel frac_kernel = frac.build_kernel();
    MemoryKernel heavy_kernel = heavy.build_kernel();
    CHECK(frac_kernel.weight(1) == 1.0);

    AgentState a{.x = {1.0, 1.0}};
    AgentState b = a;
    for (int step = 0; step < 100; ++step) {
      const Vec g{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      descent_update(a, g, frac, &frac_kernel);
      descent_update(b, g, heavy, &heavy_kernel);
      CHECK(a.x == b.x);
    }
  }
}

TEST_CASE("plain GD contracts a 1-D quadratic by exactly |1 - alpha c|") {
  const double c = 1.8;
  for (double alpha : {0.1, 0.5, 1.0}) {
    auto cfg = make(Variant::plain_gd, alpha);
    AgentState s{.x = {1.0}};
    double prev = 1.0;
    for (int step = 0; step < 50; ++step) {
      descent_update(s, {c * s.x[0]}, cfg, nullptr);
      const double expected = std::abs(1.0 - alpha * c) * prev;
      CHECK(std::abs(std::abs(s.x[0]) - expected) < 1e-12 * std::max(1.0, expected));
      prev = std::abs(s.x[0]);
    }
  }
}

TEST_CASE("gradient history is bounded by the horizon") {
  auto cfg = make(Variant::fractional, 0.1, 0.05, 0.2, 7);
  MemoryKernel kernel = cfg.build_kernel();
  AgentState s{.x = {0.0}};
  for (int step = 1; step <= 30; ++step) {
    descent_update(s, {1.0 / step}, cfg, &kernel);
    CHECK(s.grad_history.size() == static_cast<std::size_t>(std::min(step, 7)));
    // newest first
    CHECK(s.grad_history.front()[0] == 1.0 / step);
  }
}

TEST_CASE("missing kernel for a memory variant is an error") {
  auto cfg = make(Variant::fractional, 0.1, 0.1, 0.2, 5);
  AgentState s{.x = {1.0}};
  CHECK_THROWS_AS(descent_update(s, {1.0}, cfg, nullptr), std::invalid_argument);
}

TEST_CASE("non-finite gradients flag divergence instead of throwing") {
  auto cfg = make(Variant::no_memory, 0.1);
  AgentState s{.x = {1.0}};
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(descent_update(s, {inf}, cfg, nullptr) == UpdateStatus::diverged);
  CHECK(s.x == Vec{1.0});  // untouched
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(descent_update(s, {nan}, cfg, nullptr) == UpdateStatus::diverged);
}

TEST_CASE("first adam step moves by roughly alpha in the sign direction") {
  auto cfg = make(Variant::adam, 0.01);
  AgentState s{.x = {5.0, -3.0}};
  descent_update(s, {0.4, -0.002}, cfg, nullptr);
  CHECK(s.x[0] == doctest::Approx(5.0 - 0.01).epsilon(1e-4));
  CHECK(s.x[1] == doctest::Approx(-3.0 + 0.01).epsilon(1e-4));
  CHECK(s.adam_steps == 1);
}

TEST_CASE("adam matches a hand-rolled reference over several steps") {
  auto cfg = make(Variant::adam, 0.05);
  AgentState s{.x = {1.0}};
  double x = 1.0, m = 0.0, v = 0.0;
  frodo::Rng rng(21);
  for (int t = 1; t <= 25; ++t) {
    const double g = rng.uniform(-1, 1);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    descent_update(s, {g}, cfg, nullptr);
    CHECK(s.x[0] == doctest::Approx(x).epsilon(1e-14));
  }
}

TEST_CASE("nesterov matches the velocity-form recurrence on a quadratic") {
  // v <- gamma v + grad f(x - alpha gamma v); x <- x - alpha v
  const double c = 0.8, alpha = 0.1, gamma = 0.9;
  auto cfg = make(Variant::nesterov, alpha);
  cfg.momentum = gamma;
  AgentState s{.x = {2.0}};
  double x = 2.0, v = 0.0;
  for (int t = 0; t < 40; ++t) {
    const Vec look = gradient_eval_point(s, cfg);
    CHECK(look[0] == doctest::Approx(x - alpha * gamma * v).epsilon(1e-14));
    descent_update(s, {c * look[0]}, cfg, nullptr);
    v = gamma * v + c * (x - alpha * gamma * v);
    x -= alpha * v;
    CHECK(s.x[0] == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(std::abs(s.x[0]) < 0.5);  // heading to the minimum
}

TEST_CASE("config validation names broken fields") {
  auto bad_alpha = make(Variant::plain_gd, 0.0);
  CHECK_THROWS_WITH_AS(bad_alpha.validate(), "alpha must be positive",
                       std::invalid_argument);
  auto bad_lambda = make(Variant::fractional, 0.1, 0.1, 1.5, 10);
  CHECK_THROWS_WITH_AS(bad_lambda.validate(), "lambda must lie in (0,1)",
                       std::invalid_argument);
  auto bad_horizon = make(Variant::fractional, 0.1, 0.1, 0.5, 0);
  CHECK_THROWS_AS(bad_horizon.validate(), std::invalid_argument);
}
