#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frodo/graph.hpp"
#include "frodo/memory_kernel.hpp"
#include "frodo/objective.hpp"
#include "frodo/optimizer.hpp"
#include "frodo/vec.hpp"

namespace frodo {

enum class RunStatus { converged, not_converged, diverged };

inline const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::not_converged: return "not_converged";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

// One synchronous simulation: K rounds of (gradient, memory, descent) then
// state alignment, exactly as the round loop prescribes. The descent stage
// is skipped in round 1.
struct RunConfig {
  DirectedGraph graph = DirectedGraph::fully_connected(1);
  std::vector<std::shared_ptr<Objective>> objectives;  // one per agent
  OptimizerConfig opt;
  int rounds = 10000;                // K
  Vec initial_state;                 // shared x^0
  std::vector<Vec> per_agent_initial;  // optional override; empty = shared
  double tolerance = 1e-3;           // epsilon on ||xbar - x*||
  Vec x_star;                        // known minimizer; empty = none
  double target_loss = std::numeric_limits<double>::quiet_NaN();
  // mean local loss threshold for objectives with no known x*
  std::uint64_t seed = 0;            // echoed for replay
  bool record_mean_states = true;
  std::string data_source = "analytic";
};

struct RunRecord {
  RunStatus status = RunStatus::not_converged;
  int iterations = 0;      // round index at which the run stopped
  double final_error = std::numeric_limits<double>::quiet_NaN();
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> error_trace;         // ||xbar^k - x*||, per round
  std::vector<double> objective_trace;     // sum_i f_i(xbar^k), per round
  std::vector<double> disagreement_trace;  // max_i ||x_i - xbar||, per round
  std::vector<Vec> mean_state_trace;       // xbar^k when recorded
  int max_history_len = 0;                 // structural O(T n) check

  // config echo for replay
  OptimizerConfig opt;
  Vec start;
  int num_agents = 0;
  int rounds_requested = 0;
  double tolerance = 0.0;
  double target_loss = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::string data_source;
};

namespace detail {

inline Vec mean_state(const std::vector<Vec>& states) {
  Vec mean = zeros(states[0].size());
  for (const Vec& s : states) add_in_place(mean, s);
  scale_in_place(mean, 1.0 / static_cast<double>(states.size()));
  return mean;
}

inline double max_disagreement(const std::vector<Vec>& states, const Vec& mean) {
  double worst = 0.0;
  for (const Vec& s : states) worst = std::max(worst, norm2(sub(s, mean)));
  return worst;
}

}  // namespace detail

inline RunRecord run(const RunConfig& cfg) {
  const int n_agents = cfg.graph.num_agents();
  if (!cfg.graph.is_strongly_connected()) {
    throw std::invalid_argument("refusing to run: graph is not strongly connected");
  }
  if (cfg.objectives.size() != static_cast<std::size_t>(n_agents)) {
    throw std::invalid_argument("need exactly one objective per agent");
  }
  const std::size_t dim = cfg.objectives[0]->dimension();
  for (const auto& f : cfg.objectives) {
    if (f->dimension() != dim) {
      throw std::invalid_argument("objectives have mismatched dimensions");
    }
  }
  if (cfg.rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!cfg.x_star.empty() && cfg.x_star.size() != dim) {
    throw std::invalid_argument("x_star dimension mismatch");
  }
  cfg.opt.validate();

  std::vector<AgentState> agents(static_cast<std::size_t>(n_agents));
  if (!cfg.per_agent_initial.empty()) {
    if (cfg.per_agent_initial.size() != static_cast<std::size_t>(n_agents)) {
      throw std::invalid_argument("per-agent initial states: wrong count");
    }
    for (int i = 0; i < n_agents; ++i) {
      if (cfg.per_agent_initial[static_cast<std::size_t>(i)].size() != dim) {
        throw std::invalid_argument("initial state dimension mismatch");
      }
      agents[static_cast<std::size_t>(i)].x = cfg.per_agent_initial[static_cast<std::size_t>(i)];
    }
  } else {
    if (cfg.initial_state.size() != dim) {
      throw std::invalid_argument("initial state dimension mismatch");
    }
    for (auto& a : agents) a.x = cfg.initial_state;
  }

  std::optional<MemoryKernel> kernel;
  if (cfg.opt.uses_memory()) kernel.emplace(cfg.opt.build_kernel());

  RunRecord rec;
  rec.opt = cfg.opt;
  rec.start = cfg.initial_state;
  rec.num_agents = n_agents;
  rec.rounds_requested = cfg.rounds;
  rec.tolerance = cfg.tolerance;
  rec.target_loss = cfg.target_loss;
  rec.seed = cfg.seed;
  rec.data_source = cfg.data_source;

  const bool has_target_loss = !std::isnan(cfg.target_loss);

  auto record_round = [&](const std::vector<Vec>& states) {
    const Vec mean = detail::mean_state(states);
    rec.disagreement_trace.push_back(detail::max_disagreement(states, mean));
    double objective = 0.0;
    for (const auto& f : cfg.objectives) objective += f->value(mean);
    rec.objective_trace.push_back(objective);
    if (!cfg.x_star.empty()) {
      rec.error_trace.push_back(norm2(sub(mean, cfg.x_star)));
    }
    if (cfg.record_mean_states) rec.mean_state_trace.push_back(mean);
    return std::pair<double, double>(
        cfg.x_star.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : rec.error_trace.back(),
        objective);
  };

  auto states_of = [&]() {
    std::vector<Vec> states;
    states.reserve(agents.size());
    for (const auto& a : agents) states.push_back(a.x);
    return states;
  };

  // round 0: the initial configuration, before any communication
  record_round(states_of());

  bool diverged = false;
  int stop_round = cfg.rounds;
  for (int round = 1; round <= cfg.rounds; ++round) {
    if (round > 1) {
      // stage 1+2: every agent evaluates its gradient at its pre-descent
      // state, then applies the descent rule
      std::vector<Vec> grads(agents.size());
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const Vec at = gradient_eval_point(agents[i], cfg.opt);
        grads[i] = cfg.objectives[i]->gradient(at);
      }
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const UpdateStatus st =
            descent_update(agents[i], grads[i], cfg.opt, kernel ? &*kernel : nullptr);
        rec.max_history_len = std::max(
            rec.max_history_len, static_cast<int>(agents[i].grad_history.size()));
        if (st == UpdateStatus::diverged) diverged = true;
      }
    }

    // stage 3: alignment
    {
      std::vector<Vec> aligned = consensus_step(cfg.graph, states_of());
      for (std::size_t i = 0; i < agents.size(); ++i) {
        agents[i].x = std::move(aligned[i]);
      }
    }

    const auto [error, objective] = record_round(states_of());

    for (const auto& a : agents) {
      if (!all_finite(a.x) || norm2(a.x) > 1e8) diverged = true;
    }
    if (diverged) {
      rec.status = RunStatus::diverged;
      stop_round = round;
      break;
    }
    const bool hit_error = !cfg.x_star.empty() && error < cfg.tolerance;
    const bool hit_loss =
        has_target_loss &&
        objective / static_cast<double>(n_agents) < cfg.target_loss;
    if (hit_error || hit_loss) {
      rec.status = RunStatus::converged;
      stop_round = round;
      break;
    }
  }

  rec.iterations = stop_round;
  rec.final_objective = rec.objective_trace.back();
  if (!rec.error_trace.empty()) rec.final_error = rec.error_trace.back();
  return rec;
}

}  // namespace frodo
