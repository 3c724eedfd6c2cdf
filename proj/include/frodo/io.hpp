#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "frodo/experiments.hpp"
#include "frodo/simulator.hpp"

namespace frodo {

using nlohmann::json;

// Failed writes must never leave a truncated file behind: write to a
// temporary sibling, then rename into place.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

// shortest round-trip formatting, shared by CSV and JSON output
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  return json(v).dump();
}

inline json optimizer_to_json(const OptimizerConfig& opt) {
  json j{{"variant", variant_name(opt.variant)}, {"alpha", opt.alpha}};
  if (opt.uses_memory()) {
    j["beta"] = opt.beta;
    j["horizon"] = opt.effective_horizon();
  }
  if (opt.variant == Variant::fractional) j["lambda"] = opt.lambda;
  if (opt.variant == Variant::nesterov) j["momentum"] = opt.momentum;
  if (opt.variant == Variant::adam) {
    j["adam_beta1"] = opt.adam_beta1;
    j["adam_beta2"] = opt.adam_beta2;
    j["adam_eps"] = opt.adam_eps;
  }
  return j;
}

inline json record_to_json(const RunRecord& rec, bool include_traces = true) {
  json j;
  j["status"] = run_status_name(rec.status);
  j["iterations"] = rec.iterations;
  j["final_error"] = rec.final_error;
  j["final_objective"] = rec.final_objective;
  j["config"] = {{"optimizer", optimizer_to_json(rec.opt)},
                 {"num_agents", rec.num_agents},
                 {"rounds", rec.rounds_requested},
                 {"epsilon", rec.tolerance},
                 {"x0", rec.start},
                 {"seed", rec.seed}};
  if (!std::isnan(rec.target_loss)) j["config"]["target_loss"] = rec.target_loss;
  j["data_source"] = rec.data_source;
  if (include_traces) {
    j["error_trace"] = rec.error_trace;
    j["objective_trace"] = rec.objective_trace;
    j["disagreement_trace"] = rec.disagreement_trace;
    if (!rec.mean_state_trace.empty()) j["mean_state_trace"] = rec.mean_state_trace;
  }
  return j;
}

// fixed summary row: variant, alpha, beta, lambda, T, start point, seed,
// iterations, final error, status
inline std::string csv_header() {
  return "variant,alpha,beta,lambda,T,start_point,seed,iterations,final_error,status\n";
}

inline std::string csv_row(const RunRecord& rec, const std::string& start_point) {
  std::string row;
  row += variant_name(rec.opt.variant);
  row += ',';
  row += format_double(rec.opt.alpha);
  row += ',';
  row += format_double(rec.opt.effective_beta());
  row += ',';
  row += rec.opt.variant == Variant::fractional ? format_double(rec.opt.lambda) : "";
  row += ',';
  row += rec.opt.uses_memory() ? std::to_string(rec.opt.effective_horizon()) : "";
  row += ',';
  row += '"' + start_point + '"';
  row += ',';
  row += std::to_string(rec.seed);
  row += ',';
  row += std::to_string(rec.iterations);
  row += ',';
  // for runs with no known minimizer the closest thing to an error is the
  // final mean local loss
  row += !std::isnan(rec.final_error)
             ? format_double(rec.final_error)
             : format_double(rec.final_objective / std::max(rec.num_agents, 1));
  row += ',';
  row += run_status_name(rec.status);
  row += '\n';
  return row;
}

inline std::string point_label(const Vec& v) {
  std::string out = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// experiment reports
// ---------------------------------------------------------------------------

inline json hyper_to_json(const HyperDraw& h) {
  return json{{"alpha", h.alpha}, {"beta", h.beta}, {"lambda", h.lambda},
              {"horizon", h.horizon}};
}

inline json exp1_report_to_json(const Exp1Report& report) {
  json j;
  j["experiment"] = "exp1";
  json spec;
  {
    std::vector<std::string> names;
    for (Variant v : report.spec.variants) names.emplace_back(variant_name(v));
    spec["variants"] = names;
    spec["draws"] = report.spec.draws;
    spec["fixed_starts"] = report.spec.fixed_starts;
    spec["uniform_starts"] = report.spec.uniform_starts;
    spec["epsilon"] = report.spec.epsilon;
    spec["max_rounds"] = report.spec.max_rounds;
    spec["seed"] = report.spec.seed;
    spec["ranges"] = {{"alpha", {SweepSpec::alpha_lo, SweepSpec::alpha_hi}},
                      {"beta", {"alpha/2.5", "alpha/1.5"}},
                      {"lambda", {SweepSpec::lambda_lo, SweepSpec::lambda_hi}},
                      {"horizon", {SweepSpec::horizon_lo, SweepSpec::horizon_hi}}};
  }
  j["spec"] = spec;
  j["draws"] = json::array();
  for (const HyperDraw& h : report.draws) j["draws"].push_back(hyper_to_json(h));

  j["variants"] = json::array();
  for (const VariantSummary& vs : report.variants) {
    json v;
    v["variant"] = variant_name(vs.variant);
    v["uniform_iterations"] = {{"count", vs.uniform_iterations.count},
                               {"mean", vs.uniform_iterations.mean},
                               {"stddev", vs.uniform_iterations.stddev},
                               {"min", vs.uniform_iterations.min},
                               {"max", vs.uniform_iterations.max}};
    v["uniform_converged"] = vs.uniform_converged;
    v["uniform_censored"] = vs.uniform_censored;
    v["uniform_diverged"] = vs.uniform_diverged;
    v["total_censored"] = vs.total_censored;
    v["total_diverged"] = vs.total_diverged;
    v["ks_steep_vs_flat"] = {{"D", vs.steep_vs_flat.statistic},
                             {"p", vs.steep_vs_flat.p_value}};
    j["variants"].push_back(v);
  }

  j["fractional_vs"] = json::array();
  for (const PairwiseKs& p : report.fractional_vs) {
    j["fractional_vs"].push_back({{"baseline", variant_name(p.baseline)},
                                  {"D_plus", p.ks.statistic},
                                  {"p", p.ks.p_value}});
  }
  j["speedup_vs_no_memory"] = report.speedup_vs_no_memory;

  j["runs"] = json::array();
  for (const Exp1Run& r : report.runs) {
    j["runs"].push_back({{"variant", variant_name(r.variant)},
                         {"draw", r.draw},
                         {"start_index", r.start_index},
                         {"start", r.start},
                         {"hyper", hyper_to_json(r.hyper)},
                         {"iterations", r.record.iterations},
                         {"status", run_status_name(r.record.status)},
                         {"final_error", r.record.final_error},
                         {"seed", r.record.seed}});
  }
  return j;
}

inline json exp2_report_to_json(const Exp2Report& report) {
  json j;
  j["experiment"] = "exp2";
  json spec;
  {
    std::vector<std::string> names;
    for (Variant v : report.spec.variants) names.emplace_back(variant_name(v));
    spec["variants"] = names;
    spec["agents"] = report.spec.agents;
    spec["seeds"] = report.spec.seeds;
    spec["rounds"] = report.spec.rounds;
    spec["batch_size"] = report.spec.batch_size;
    spec["hidden"] = report.spec.hidden;
    spec["alpha"] = report.spec.alpha;
    spec["beta"] = report.spec.beta;
    spec["lambda"] = report.spec.lambda;
    spec["horizon"] = report.spec.horizon;
    spec["adam_alpha"] = report.spec.adam_alpha;
    spec["momentum"] = report.spec.momentum;
    spec["target_fraction"] = report.spec.target_fraction;
    spec["seed"] = report.spec.seed;
    spec["data"] = {{"source", report.spec.data.source},
                    {"dim", report.spec.data.dim},
                    {"classes", report.spec.data.classes},
                    {"total", report.spec.data.total},
                    {"center_spread", report.spec.data.center_spread},
                    {"noise_std", report.spec.data.noise_std}};
  }
  j["spec"] = spec;
  j["data_source_used"] = report.data_source_used;
  j["target_loss"] = report.target_loss;

  j["rounds_to_target"] = json::object();
  for (std::size_t v = 0; v < report.spec.variants.size(); ++v) {
    j["rounds_to_target"][variant_name(report.spec.variants[v])] =
        report.rounds_to_target[v];
  }
  j["gd_over_fractional_ratio"] = report.gd_over_fractional_ratio;

  j["runs"] = json::array();
  const double agents = static_cast<double>(report.spec.agents);
  for (const Exp2Run& r : report.runs) {
    j["runs"].push_back({{"variant", variant_name(r.variant)},
                         {"seed_index", r.seed_index},
                         {"rounds_run", r.record.iterations},
                         {"status", run_status_name(r.record.status)},
                         {"final_mean_loss", r.record.final_objective / agents},
                         {"seed", r.record.seed}});
  }
  return j;
}

// loss curves as plot-ready CSV: round, variant, seed, mean_loss
inline std::string exp2_curves_csv(const Exp2Report& report) {
  std::string out = "round,variant,seed_index,mean_loss\n";
  const double agents = static_cast<double>(report.spec.agents);
  for (const Exp2Run& r : report.runs) {
    for (std::size_t k = 0; k < r.record.objective_trace.size(); ++k) {
      out += std::to_string(k);
      out += ',';
      out += variant_name(r.variant);
      out += ',';
      out += std::to_string(r.seed_index);
      out += ',';
      out += format_double(r.record.objective_trace[k] / agents);
      out += '\n';
    }
  }
  return out;
}

}  // namespace frodo
