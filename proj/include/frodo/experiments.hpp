#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "frodo/data.hpp"
#include "frodo/mlp.hpp"
#include "frodo/objective.hpp"
#include "frodo/rng.hpp"
#include "frodo/simulator.hpp"
#include "frodo/stats.hpp"

namespace frodo {

// Index-addressed parallel map with deterministic results: task i writes to
// slot i, so the outcome is independent of scheduling. The first exception
// thrown by a task is rethrown after all workers finish.
inline void parallel_for(std::size_t count, int degree,
                         const std::function<void(std::size_t)>& fn) {
  if (degree < 1) degree = 1;
  if (degree == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(
      std::min<std::size_t>(count, static_cast<std::size_t>(degree)));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Experiment 1: ill-conditioned quadratics on the 4-agent complete graph
// ---------------------------------------------------------------------------

// One sampled hyperparameter set. The same draw is reused across variants:
// heavy_ball pins the horizon to 1 and no_memory pins beta to 0.
struct HyperDraw {
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  int horizon = 0;
};

struct SweepSpec {
  std::vector<Variant> variants{Variant::fractional, Variant::heavy_ball,
                                Variant::no_memory};
  int draws = 100;
  bool fixed_starts = true;  // the four published unit-circle points
  int uniform_starts = 1;    // uniformly sampled circle points per draw
  double epsilon = 1e-3;     // convergence tolerance on ||xbar - x*||
  int max_rounds = 10000;    // censoring cap
  std::uint64_t seed = 0;

  // published sweep ranges; beta depends on the drawn alpha
  static constexpr double alpha_lo = 0.6, alpha_hi = 1.0;
  static constexpr double beta_hi_div = 1.5, beta_lo_div = 2.5;
  static constexpr double lambda_lo = 0.1, lambda_hi = 0.2;
  static constexpr int horizon_lo = 80, horizon_hi = 100;

  void validate() const {
    if (variants.empty()) throw std::invalid_argument("sweep.variants is empty");
    if (draws < 1) throw std::invalid_argument("sweep.draws must be positive");
    if (uniform_starts < 0) {
      throw std::invalid_argument("sweep.uniform_starts must be non-negative");
    }
    if (!fixed_starts && uniform_starts == 0) {
      throw std::invalid_argument("sweep has no start points at all");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("sweep.epsilon must be positive");
    if (max_rounds < 1) throw std::invalid_argument("sweep.max_rounds must be positive");
  }
};

inline const std::vector<Vec>& exp1_fixed_starts() {
  // (0.86, 0.5) and (0.5, 0.86) as published; they sit 1e-3 off the circle
  static const std::vector<Vec> points{{1.0, 0.0}, {0.86, 0.5}, {0.5, 0.86}, {0.0, 1.0}};
  return points;
}

struct Exp1Run {
  Variant variant = Variant::fractional;
  int draw = 0;
  int start_index = 0;  // 0..3 fixed points, >= 4 uniform
  Vec start;
  HyperDraw hyper;  // after variant pinning
  RunRecord record;
};

struct VariantSummary {
  Variant variant = Variant::fractional;
  SampleSummary uniform_iterations;  // converged uniform-start runs
  int uniform_converged = 0;
  int uniform_censored = 0;
  int uniform_diverged = 0;
  int total_censored = 0;
  int total_diverged = 0;
  KsResult steep_vs_flat;  // two-sided, (1,0)-start vs (0,1)-start iterations
};

struct PairwiseKs {
  Variant baseline = Variant::no_memory;
  KsResult ks;  // one-sided: fractional stochastically smaller
};

struct Exp1Report {
  SweepSpec spec;
  std::vector<HyperDraw> draws;
  std::vector<Vec> uniform_points;  // per draw, `uniform_starts` many
  std::vector<Exp1Run> runs;
  std::vector<VariantSummary> variants;
  std::vector<PairwiseKs> fractional_vs;  // on uniform starts
  double speedup_vs_no_memory = std::numeric_limits<double>::quiet_NaN();
};

inline HyperDraw pin_variant(HyperDraw h, Variant v) {
  if (v == Variant::no_memory || v == Variant::plain_gd) h.beta = 0.0;
  if (v == Variant::heavy_ball) h.horizon = 1;
  if (!OptimizerConfig{.variant = v}.uses_memory()) h.horizon = 0;
  return h;
}

inline Exp1Report run_experiment1(const SweepSpec& spec, int parallel = 1) {
  spec.validate();
  Exp1Report report;
  report.spec = spec;

  // one stream for the paired draws, one for the start angles
  Rng draw_rng(derive_seed(spec.seed, 0xd4a3));
  for (int d = 0; d < spec.draws; ++d) {
    HyperDraw h;
    h.alpha = draw_rng.uniform(SweepSpec::alpha_lo, SweepSpec::alpha_hi);
    h.beta = draw_rng.uniform(h.alpha / SweepSpec::beta_lo_div,
                              h.alpha / SweepSpec::beta_hi_div);
    h.lambda = draw_rng.uniform(SweepSpec::lambda_lo, SweepSpec::lambda_hi);
    h.horizon = draw_rng.uniform_int(SweepSpec::horizon_lo, SweepSpec::horizon_hi);
    report.draws.push_back(h);
  }
  Rng angle_rng(derive_seed(spec.seed, 0xc19c1e));
  for (int d = 0; d < spec.draws; ++d) {
    for (int u = 0; u < spec.uniform_starts; ++u) {
      const double theta = angle_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      report.uniform_points.push_back({std::cos(theta), std::sin(theta)});
    }
  }

  const int fixed_count = spec.fixed_starts ? 4 : 0;
  const int starts_per_draw = fixed_count + spec.uniform_starts;
  const std::size_t total = spec.variants.size() *
                            static_cast<std::size_t>(spec.draws) *
                            static_cast<std::size_t>(starts_per_draw);
  report.runs.resize(total);

  parallel_for(total, parallel, [&](std::size_t task) {
    const int per_variant = spec.draws * starts_per_draw;
    const int v_idx = static_cast<int>(task) / per_variant;
    const int rem = static_cast<int>(task) % per_variant;
    const int draw = rem / starts_per_draw;
    const int slot = rem % starts_per_draw;

    Exp1Run out;
    out.variant = spec.variants[static_cast<std::size_t>(v_idx)];
    out.draw = draw;
    out.start_index = slot;
    if (slot < fixed_count) {
      out.start = exp1_fixed_starts()[static_cast<std::size_t>(slot)];
    } else {
      const std::size_t u = static_cast<std::size_t>(draw) *
                                static_cast<std::size_t>(spec.uniform_starts) +
                            static_cast<std::size_t>(slot - fixed_count);
      out.start = report.uniform_points[u];
    }
    out.hyper = pin_variant(report.draws[static_cast<std::size_t>(draw)], out.variant);

    RunConfig cfg;
    cfg.graph = DirectedGraph::fully_connected(4, true);
    cfg.objectives = exp1_objectives();
    cfg.opt.variant = out.variant;
    cfg.opt.alpha = out.hyper.alpha;
    cfg.opt.beta = out.hyper.beta;
    cfg.opt.lambda = out.hyper.lambda;
    cfg.opt.horizon = std::max(out.hyper.horizon, 1);
    cfg.rounds = spec.max_rounds;
    cfg.initial_state = out.start;
    cfg.tolerance = spec.epsilon;
    cfg.x_star = {0.0, 0.0};
    cfg.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(v_idx),
                           static_cast<std::uint64_t>(draw),
                           static_cast<std::uint64_t>(slot));
    out.record = run(cfg);
    report.runs[task] = std::move(out);
  });

  // aggregates: means over converged uniform-start runs; KS between the
  // steepest and flattest fixed starts, pooled over draws
  for (std::size_t v_idx = 0; v_idx < spec.variants.size(); ++v_idx) {
    VariantSummary vs;
    vs.variant = spec.variants[v_idx];
    std::vector<double> uniform_iters, steep_iters, flat_iters;
    for (const Exp1Run& r : report.runs) {
      if (r.variant != vs.variant) continue;
      const bool converged = r.record.status == RunStatus::converged;
      if (r.record.status == RunStatus::diverged) ++vs.total_diverged;
      if (r.record.status == RunStatus::not_converged) ++vs.total_censored;
      if (r.start_index >= fixed_count) {
        if (converged) {
          ++vs.uniform_converged;
          uniform_iters.push_back(static_cast<double>(r.record.iterations));
        } else if (r.record.status == RunStatus::diverged) {
          ++vs.uniform_diverged;
        } else {
          ++vs.uniform_censored;
        }
      } else if (converged && r.start_index == 0) {
        steep_iters.push_back(static_cast<double>(r.record.iterations));
      } else if (converged && r.start_index == 3) {
        flat_iters.push_back(static_cast<double>(r.record.iterations));
      }
    }
    if (!uniform_iters.empty()) vs.uniform_iterations = summarize(uniform_iters);
    if (!steep_iters.empty() && !flat_iters.empty()) {
      vs.steep_vs_flat = ks_two_sided(steep_iters, flat_iters);
    }
    report.variants.push_back(vs);
  }

  // one-sided comparisons on the uniform starts: is fractional faster?
  auto uniform_sample = [&](Variant v) {
    std::vector<double> iters;
    for (const Exp1Run& r : report.runs) {
      if (r.variant == v && r.start_index >= fixed_count &&
          r.record.status == RunStatus::converged) {
        iters.push_back(static_cast<double>(r.record.iterations));
      }
    }
    return iters;
  };
  const auto it_frac = std::find(spec.variants.begin(), spec.variants.end(),
                                 Variant::fractional);
  if (it_frac != spec.variants.end() && spec.uniform_starts > 0) {
    const auto frac = uniform_sample(Variant::fractional);
    for (Variant v : spec.variants) {
      if (v == Variant::fractional) continue;
      const auto base = uniform_sample(v);
      if (!frac.empty() && !base.empty()) {
        report.fractional_vs.push_back(
            {v, ks_one_sided(frac, base, KsDirection::less)});
      }
      if (v == Variant::no_memory && !frac.empty() && !base.empty()) {
        report.speedup_vs_no_memory =
            summarize(base).mean / summarize(frac).mean;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Experiment 2: federated two-agent neural network training
// ---------------------------------------------------------------------------

struct DataSpec {
  std::string source = "synthetic";  // "synthetic" or "mnist"
  std::string mnist_dir;             // directory holding the IDX files
  std::size_t mnist_limit = 2048;    // training subset size
  int dim = 64;                      // synthetic feature dimension
  int classes = 10;
  int total = 2048;                  // synthetic sample count
  double center_spread = 1.0;
  double noise_std = 2.0;
};

struct FederatedSpec {
  std::vector<Variant> variants{Variant::fractional, Variant::plain_gd,
                                Variant::nesterov, Variant::heavy_ball,
                                Variant::adam};
  int agents = 2;
  int seeds = 5;
  int rounds = 400;
  int batch_size = 64;
  std::vector<int> hidden{32};
  DataSpec data;
  double alpha = 0.05;
  double beta = 0.025;
  double lambda = 0.15;
  int horizon = 80;
  double adam_alpha = 0.002;
  double momentum = 0.9;
  double target_fraction = 1.1;  // target = fraction * best adam final loss
  std::uint64_t seed = 0;

  void validate() const {
    if (variants.empty()) throw std::invalid_argument("exp2.variants is empty");
    if (agents < 2) throw std::invalid_argument("exp2.agents must be at least 2");
    if (seeds < 1) throw std::invalid_argument("exp2.seeds must be positive");
    if (rounds < 2) throw std::invalid_argument("exp2.rounds must be at least 2");
    if (batch_size < 1) throw std::invalid_argument("exp2.batch_size must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("exp2.alpha must be positive");
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw std::invalid_argument("exp2.lambda must lie in (0,1)");
    }
    if (horizon < 1) throw std::invalid_argument("exp2.horizon must be positive");
    if (data.source != "synthetic" && data.source != "mnist") {
      throw std::invalid_argument("exp2.data.source must be synthetic or mnist");
    }
  }
};

struct Exp2Run {
  Variant variant = Variant::plain_gd;
  int seed_index = 0;
  RunRecord record;  // mean loss per round = objective_trace / agents
};

struct Exp2Report {
  FederatedSpec spec;
  std::string data_source_used;   // "synthetic" or "mnist"
  double target_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<Exp2Run> runs;
  // rounds_to_target[v][s]: first round whose mean loss is below the target,
  // 0 when the run never got there (censored at the budget)
  std::vector<std::vector<int>> rounds_to_target;
  std::vector<double> gd_over_fractional_ratio;  // per seed, censored at cap
};

namespace detail {

inline bool mnist_files_present(const std::string& dir) {
  namespace fs = std::filesystem;
  return fs::exists(fs::path(dir) / "train-images-idx3-ubyte") &&
         fs::exists(fs::path(dir) / "train-labels-idx1-ubyte");
}

inline Dataset exp2_dataset(const DataSpec& data, std::uint64_t seed,
                            std::string& source_used) {
  if (data.source == "mnist" && !data.mnist_dir.empty() &&
      mnist_files_present(data.mnist_dir)) {
    namespace fs = std::filesystem;
    source_used = "mnist";
    return load_mnist_idx(
        (fs::path(data.mnist_dir) / "train-images-idx3-ubyte").string(),
        (fs::path(data.mnist_dir) / "train-labels-idx1-ubyte").string(),
        data.mnist_limit);
  }
  source_used = "synthetic";
  return synthetic_blobs(data.dim, data.classes, data.total,
                         data.center_spread, data.noise_std, seed);
}

}  // namespace detail

inline Exp2Report run_experiment2(const FederatedSpec& spec, int parallel = 1) {
  spec.validate();
  Exp2Report report;
  report.spec = spec;

  const std::size_t total =
      spec.variants.size() * static_cast<std::size_t>(spec.seeds);
  report.runs.resize(total);

  parallel_for(total, parallel, [&](std::size_t task) {
    const int v_idx = static_cast<int>(task / static_cast<std::size_t>(spec.seeds));
    const int seed_idx = static_cast<int>(task % static_cast<std::size_t>(spec.seeds));
    const Variant variant = spec.variants[static_cast<std::size_t>(v_idx)];

    // data, partition and initialization vary by repetition, not by variant,
    // so every variant faces the identical problem instance
    std::string source_used;
    const std::uint64_t data_seed = derive_seed(spec.seed, 0xda7a, static_cast<std::uint64_t>(seed_idx));
    Dataset data = detail::exp2_dataset(spec.data, data_seed, source_used);
    auto parts = stratified_split(data, spec.agents, data_seed);

    std::vector<int> layers;
    layers.push_back(data.dim);
    for (int h : spec.hidden) layers.push_back(h);
    layers.push_back(data.num_classes);

    RunConfig cfg;
    cfg.graph = DirectedGraph::fully_connected(spec.agents, true);
    for (int a = 0; a < spec.agents; ++a) {
      cfg.objectives.push_back(std::make_shared<MlpObjective>(
          layers, parts[static_cast<std::size_t>(a)], spec.batch_size,
          derive_seed(spec.seed, 0xba7c4, static_cast<std::uint64_t>(seed_idx),
                      static_cast<std::uint64_t>(a))));
    }
    cfg.opt.variant = variant;
    cfg.opt.alpha = variant == Variant::adam ? spec.adam_alpha : spec.alpha;
    cfg.opt.beta = spec.beta;
    cfg.opt.lambda = spec.lambda;
    cfg.opt.horizon = spec.horizon;
    cfg.opt.momentum = spec.momentum;
    cfg.rounds = spec.rounds;
    cfg.initial_state = MlpObjective::initial_params(
        layers, derive_seed(spec.seed, 0x1217, static_cast<std::uint64_t>(seed_idx)));
    cfg.tolerance = 1e-12;  // no x*: convergence is judged on the loss curves
    cfg.record_mean_states = false;
    cfg.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(v_idx),
                           static_cast<std::uint64_t>(seed_idx));
    cfg.data_source = source_used;

    Exp2Run out;
    out.variant = variant;
    out.seed_index = seed_idx;
    out.record = run(cfg);
    report.runs[task] = std::move(out);
  });

  report.data_source_used = report.runs.empty() ? "synthetic"
                                                : report.runs[0].record.data_source;

  // the target chases the best final loss adam achieved across repetitions
  const double agents = static_cast<double>(spec.agents);
  double best_adam = std::numeric_limits<double>::infinity();
  for (const Exp2Run& r : report.runs) {
    if (r.variant == Variant::adam) {
      best_adam = std::min(best_adam, r.record.final_objective / agents);
    }
  }
  if (std::isfinite(best_adam)) {
    report.target_loss = spec.target_fraction * best_adam;
  }

  report.rounds_to_target.assign(spec.variants.size(),
                                 std::vector<int>(static_cast<std::size_t>(spec.seeds), 0));
  if (std::isfinite(report.target_loss)) {
    for (const Exp2Run& r : report.runs) {
      const auto v_pos =
          std::find(spec.variants.begin(), spec.variants.end(), r.variant) -
          spec.variants.begin();
      // round 0 is the shared initialization; "reaching" the target means
      // crossing it during training
      for (std::size_t k = 1; k < r.record.objective_trace.size(); ++k) {
        if (r.record.objective_trace[k] / agents < report.target_loss) {
          report.rounds_to_target[static_cast<std::size_t>(v_pos)]
                                 [static_cast<std::size_t>(r.seed_index)] =
              static_cast<int>(k);
          break;
        }
      }
    }
  }

  // speedup over plain gradient descent, per repetition; runs that never hit
  // the target count as the full budget (a lower bound on the true ratio)
  const auto frac_pos = std::find(spec.variants.begin(), spec.variants.end(),
                                  Variant::fractional);
  const auto gd_pos = std::find(spec.variants.begin(), spec.variants.end(),
                                Variant::plain_gd);
  if (frac_pos != spec.variants.end() && gd_pos != spec.variants.end()) {
    const auto& frac = report.rounds_to_target[static_cast<std::size_t>(
        frac_pos - spec.variants.begin())];
    const auto& gd = report.rounds_to_target[static_cast<std::size_t>(
        gd_pos - spec.variants.begin())];
    for (int s = 0; s < spec.seeds; ++s) {
      const double f = frac[static_cast<std::size_t>(s)] > 0
                           ? frac[static_cast<std::size_t>(s)]
                           : spec.rounds;
      const double g = gd[static_cast<std::size_t>(s)] > 0
                           ? gd[static_cast<std::size_t>(s)]
                           : spec.rounds;
      report.gd_over_fractional_ratio.push_back(g / f);
    }
  }
  return report;
}

}  // namespace frodo
