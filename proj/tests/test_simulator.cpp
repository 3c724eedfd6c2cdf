#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "frodo/mlp.hpp"
#include "frodo/objective.hpp"
#include "frodo/simulator.hpp"
#include "oracles.hpp"

using frodo::AxisQuadratic;
using frodo::DirectedGraph;
using frodo::RunConfig;
using frodo::RunRecord;
using frodo::RunStatus;
using frodo::Variant;
using frodo::Vec;

namespace {

RunConfig exp1_run(Variant v, double alpha, double beta, double lambda, int horizon,
                   Vec start) {
  RunConfig cfg;
  cfg.graph = DirectedGraph::fully_connected(4, true);
  cfg.objectives = frodo::exp1_objectives();
  cfg.opt.variant = v;
  cfg.opt.alpha = alpha;
  cfg.opt.beta = beta;
  cfg.opt.lambda = lambda;
  cfg.opt.horizon = horizon;
  cfg.initial_state = std::move(start);
  cfg.x_star = {0.0, 0.0};
  cfg.tolerance = 1e-3;
  cfg.rounds = 10000;
  return cfg;
}

std::vector<Vec> exp1_coeffs() {
  return {{0.5, 0.005}, {0.5, 0.005}, {0.5, 0.005}, {0.5, 0.005}};
}
std::vector<Vec> exp1_centers() {
  return {{2.0, 0.0}, {-2.0, 0.0}, {0.0, 2.0}, {0.0, -2.0}};
}

}  // namespace

TEST_CASE("unit-curvature quadratic with alpha 1 converges in one descent step") {
  RunConfig cfg;
  cfg.graph = DirectedGraph::fully_connected(1, true);
  cfg.objectives = {std::make_shared<AxisQuadratic>(Vec{0.5}, Vec{0.0})};
  cfg.opt.variant = Variant::no_memory;
  cfg.opt.alpha = 1.0;
  cfg.initial_state = {5.0};
  cfg.x_star = {0.0};
  cfg.tolerance = 1e-3;
  cfg.rounds = 10;

  const RunRecord rec = frodo::run(cfg);
  CHECK(rec.status == RunStatus::converged);
  // round 1 is alignment only; the single descent happens in round 2
  CHECK(rec.iterations == 2);
  CHECK(rec.mean_state_trace.back() == Vec{0.0});
  CHECK(rec.error_trace.back() == 0.0);
}

TEST_CASE("starting at the optimum converges in round 1 for every variant") {
  for (Variant v : {Variant::fractional, Variant::heavy_ball, Variant::no_memory,
                    Variant::nesterov, Variant::adam, Variant::plain_gd}) {
    auto cfg = exp1_run(v, 0.8, 0.4, 0.15, 90, {0.0, 0.0});
    const RunRecord rec = frodo::run(cfg);
    CHECK(rec.status == RunStatus::converged);
    CHECK(rec.iterations == 1);
    // alignment of identical states is a fixed point
    CHECK(rec.mean_state_trace.back() == Vec{0.0, 0.0});
    CHECK(rec.disagreement_trace.back() == 0.0);
  }
}

TEST_CASE("simulated mean trajectory matches the closed form: no_memory") {
  // nonzero slow coordinate keeps the error above the sentinel tolerance,
  // so the run exhausts the full budget
  auto cfg = exp1_run(Variant::no_memory, 0.8, 0.0, 0.15, 1, {1.0, 0.5});
  cfg.rounds = 500;
  cfg.tolerance = 1e-30;
  const RunRecord rec = frodo::run(cfg);

  oracles::QuadMeanClosedForm oracle(exp1_coeffs(), exp1_centers(), 0.8, 0.0, 0.15, 1);
  const auto expect = oracle.trajectory({1.0, 0.5}, 500);
  REQUIRE(rec.mean_state_trace.size() == expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k) {
    CHECK(std::abs(rec.mean_state_trace[k][0] - expect[k][0]) < 1e-10);
    CHECK(std::abs(rec.mean_state_trace[k][1] - expect[k][1]) < 1e-10);
  }

  // per-round contraction on x1 equals |1 - alpha * c1| with c1 = 1
  for (std::size_t k = 3; k < 12; ++k) {
    const double ratio =
        std::abs(rec.mean_state_trace[k][0] / rec.mean_state_trace[k - 1][0]);
    CHECK(ratio == doctest::Approx(std::abs(1.0 - 0.8)).epsilon(1e-10));
  }
}

TEST_CASE("simulated mean trajectory matches the closed form: fractional and heavy_ball") {
  struct Case {
    Variant v;
    double alpha, beta, lambda;
    int horizon;
  };
  for (const Case& c : {Case{Variant::fractional, 0.8, 0.4, 0.15, 90},
                        Case{Variant::fractional, 0.6, 0.24, 0.1, 80},
                        Case{Variant::heavy_ball, 0.9, 0.45, 0.5, 1}}) {
    auto cfg = exp1_run(c.v, c.alpha, c.beta, c.lambda, c.horizon, {0.3, 0.9});
    cfg.rounds = 500;
    cfg.tolerance = 1e-30;
    const RunRecord rec = frodo::run(cfg);

    const int oracle_horizon = (c.v == Variant::heavy_ball) ? 1 : c.horizon;
    const double oracle_lambda = (c.v == Variant::heavy_ball) ? 0.5 : c.lambda;
    oracles::QuadMeanClosedForm oracle(exp1_coeffs(), exp1_centers(), c.alpha,
                                       c.beta, oracle_lambda, oracle_horizon);
    const auto expect = oracle.trajectory({0.3, 0.9}, 500);
    REQUIRE(rec.mean_state_trace.size() == expect.size());
    for (std::size_t k = 0; k < expect.size(); ++k) {
      CHECK(std::abs(rec.mean_state_trace[k][0] - expect[k][0]) < 1e-10);
      CHECK(std::abs(rec.mean_state_trace[k][1] - expect[k][1]) < 1e-10);
    }
  }
}

TEST_CASE("agents re-equalize after every alignment on the complete graph") {
  auto cfg = exp1_run(Variant::fractional, 0.8, 0.4, 0.15, 90, {0.5, 0.86});
  cfg.rounds = 200;
  cfg.tolerance = 1e-30;
  const RunRecord rec = frodo::run(cfg);
  // post-alignment states are bitwise identical, so disagreement is exactly 0
  for (std::size_t k = 1; k < rec.disagreement_trace.size(); ++k) {
    CHECK(rec.disagreement_trace[k] == 0.0);
  }
}

TEST_CASE("identical configs reproduce bit-identical records") {
  auto cfg = exp1_run(Variant::fractional, 0.73, 0.35, 0.17, 85, {0.86, 0.5});
  const RunRecord a = frodo::run(cfg);
  const RunRecord b = frodo::run(cfg);
  CHECK(a.status == b.status);
  CHECK(a.iterations == b.iterations);
  CHECK(a.error_trace == b.error_trace);
  CHECK(a.objective_trace == b.objective_trace);
  CHECK(a.mean_state_trace == b.mean_state_trace);
}

TEST_CASE("error decreases monotonically in the tail of a converging run") {
  auto cfg = exp1_run(Variant::fractional, 0.8, 0.05, 0.15, 90, {0.0, 1.0});
  const RunRecord rec = frodo::run(cfg);
  REQUIRE(rec.status == RunStatus::converged);
  // find the last increase; beyond it the error must shrink to the end
  std::size_t k0 = 1;
  for (std::size_t k = 1; k + 1 < rec.error_trace.size(); ++k) {
    if (rec.error_trace[k + 1] > rec.error_trace[k]) k0 = k + 1;
  }
  CHECK(k0 + 10 < rec.error_trace.size());  // a real tail exists
  for (std::size_t k = k0; k + 1 < rec.error_trace.size(); ++k) {
    CHECK(rec.error_trace[k + 1] <= rec.error_trace[k]);
  }
}

TEST_CASE("disconnected graphs are refused") {
  RunConfig cfg;
  cfg.graph = DirectedGraph(3, {{0, 1}, {1, 2}});
  cfg.objectives = {std::make_shared<AxisQuadratic>(Vec{1.0}, Vec{0.0}),
                    std::make_shared<AxisQuadratic>(Vec{1.0}, Vec{0.0}),
                    std::make_shared<AxisQuadratic>(Vec{1.0}, Vec{0.0})};
  cfg.initial_state = {1.0};
  CHECK_THROWS_AS(frodo::run(cfg), std::invalid_argument);
}

TEST_CASE("an unstable step size is recorded as diverged, not thrown") {
  RunConfig cfg;
  cfg.graph = DirectedGraph::fully_connected(1, true);
  cfg.objectives = {std::make_shared<AxisQuadratic>(Vec{1.0}, Vec{0.0})};
  cfg.opt.variant = Variant::plain_gd;
  cfg.opt.alpha = 2.5;  // |1 - alpha c| = 4 with c = 2: error quadruples
  cfg.initial_state = {1.0};
  cfg.x_star = {0.0};
  cfg.rounds = 10000;
  const RunRecord rec = frodo::run(cfg);
  CHECK(rec.status == RunStatus::diverged);
  CHECK(rec.iterations < 100);  // tripped the norm guard early
}

TEST_CASE("hitting the round budget reports not_converged") {
  auto cfg = exp1_run(Variant::no_memory, 0.6, 0.0, 0.15, 1, {0.0, 1.0});
  cfg.rounds = 5;
  const RunRecord rec = frodo::run(cfg);
  CHECK(rec.status == RunStatus::not_converged);
  CHECK(rec.iterations == 5);
  CHECK(rec.error_trace.size() == 6);  // rounds 0..5
}

TEST_CASE("mean loss target drives convergence when no minimizer is known") {
  frodo::Dataset data = frodo::synthetic_blobs(4, 2, 64, 2.0, 0.4, 5);
  auto parts = frodo::stratified_split(data, 2, 5);
  RunConfig cfg;
  cfg.graph = DirectedGraph::fully_connected(2, true);
  cfg.objectives = {
      std::make_shared<frodo::MlpObjective>(std::vector<int>{4, 6, 2}, parts[0], 8, 11),
      std::make_shared<frodo::MlpObjective>(std::vector<int>{4, 6, 2}, parts[1], 8, 12)};
  cfg.opt.variant = Variant::plain_gd;
  cfg.opt.alpha = 0.3;
  cfg.initial_state = frodo::MlpObjective::initial_params({4, 6, 2}, 3);
  cfg.target_loss = 0.35;
  cfg.rounds = 4000;
  cfg.record_mean_states = false;
  cfg.data_source = "synthetic";

  const RunRecord rec = frodo::run(cfg);
  CHECK(rec.status == RunStatus::converged);
  CHECK(rec.final_objective / 2.0 < 0.35);
  CHECK(rec.mean_state_trace.empty());
  CHECK(rec.error_trace.empty());  // no x_star
}
