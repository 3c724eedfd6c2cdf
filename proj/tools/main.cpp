// frodo: deterministic multi-agent distributed-optimization simulator.
//
//   frodo run      --config cfg [--out DIR] [--seed N] [--verbose]
//   frodo exp1     --config cfg [--out DIR] [--seed N] [--parallel K]
//   frodo exp2     --config cfg [--out DIR] [--seed N] [--parallel K]
//   frodo validate --config cfg
//
// Exit codes: 0 success, 1 config error, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "frodo/config.hpp"
#include "frodo/experiments.hpp"
#include "frodo/io.hpp"
#include "frodo/simulator.hpp"

namespace {

namespace fs = std::filesystem;
using frodo::json;

struct CliArgs {
  std::string subcommand;
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int parallel = 0;  // 0 = number of cores
  bool verbose = false;
};

[[noreturn]] void usage_error(const std::string& message) {
  std::fprintf(stderr, "%s\n", message.c_str());
  std::fprintf(stderr,
               "usage: frodo <run|exp1|exp2|validate> --config FILE "
               "[--out DIR] [--seed N] [--parallel K] [--verbose]\n");
  std::exit(1);
}

CliArgs parse_args(int argc, char** argv) {
  if (argc < 2) usage_error("missing subcommand");
  CliArgs args;
  args.subcommand = argv[1];
  if (args.subcommand != "run" && args.subcommand != "exp1" &&
      args.subcommand != "exp2" && args.subcommand != "validate") {
    usage_error("unknown subcommand: " + args.subcommand);
  }
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    auto next = [&](const char* name) -> std::string {
      if (i + 1 >= argc) usage_error(std::string(name) + " needs a value");
      return argv[++i];
    };
    if (flag == "--config") {
      args.config = next("--config");
    } else if (flag == "--out") {
      args.out = next("--out");
    } else if (flag == "--seed") {
      try {
        args.seed = std::stoull(next("--seed"));
      } catch (...) {
        usage_error("--seed needs an unsigned integer");
      }
    } else if (flag == "--parallel") {
      try {
        args.parallel = std::stoi(next("--parallel"));
      } catch (...) {
        usage_error("--parallel needs an integer");
      }
      if (args.parallel < 1) usage_error("--parallel must be at least 1");
    } else if (flag == "--verbose") {
      args.verbose = true;
    } else {
      usage_error("unknown flag: " + flag);
    }
  }
  if (args.config.empty()) usage_error("--config is required");
  return args;
}

int parallel_degree(const CliArgs& args) {
  if (args.parallel > 0) return args.parallel;
  const unsigned cores = std::thread::hardware_concurrency();
  return cores > 0 ? static_cast<int>(cores) : 1;
}

// The MNIST directory may come from the environment instead of the config.
void apply_mnist_env(json& root) {
  const char* dir = std::getenv("FRODO_MNIST_DIR");
  if (dir == nullptr || *dir == '\0') return;
  if (!root.contains("data")) root["data"] = json::object();
  if (!root["data"].contains("mnist_dir")) root["data"]["mnist_dir"] = dir;
  if (!root["data"].contains("source")) root["data"]["source"] = "mnist";
}

void apply_seed_override(json& root, const CliArgs& args, frodo::ConfigKind kind) {
  if (!args.seed.has_value()) return;
  const char* section = kind == frodo::ConfigKind::exp1
                            ? "sweep"
                            : (kind == frodo::ConfigKind::exp2 ? "exp2" : "run");
  if (!root.contains(section)) root[section] = json::object();
  root[section]["seed"] = *args.seed;
}

int cmd_validate(const CliArgs& args) {
  json root = frodo::parse_config_file(args.config);
  apply_mnist_env(root);
  const frodo::ConfigKind kind = frodo::validate_config(root);
  const char* name = kind == frodo::ConfigKind::exp1
                         ? "exp1"
                         : (kind == frodo::ConfigKind::exp2 ? "exp2" : "run");
  std::printf("config OK (kind: %s)\n", name);
  return 0;
}

int cmd_run(const CliArgs& args) {
  json root = frodo::parse_config_file(args.config);
  apply_mnist_env(root);
  if (frodo::config_kind(root) != frodo::ConfigKind::single_run) {
    throw frodo::ConfigError("experiment.kind: not a single-run config");
  }
  apply_seed_override(root, args, frodo::ConfigKind::single_run);
  frodo::ResolvedRun resolved = frodo::build_run_config(root);

  const frodo::RunRecord rec = frodo::run(resolved.cfg);
  if (args.verbose) {
    std::printf("run: %s after %d rounds\n", frodo::run_status_name(rec.status),
                rec.iterations);
  }

  json report = frodo::record_to_json(rec, true);
  report["objective_family"] = resolved.objective_family;
  frodo::atomic_write_file(fs::path(args.out) / "runs" / "run.json",
                           report.dump(2) + "\n");
  frodo::atomic_write_file(fs::path(args.out) / "report.json",
                           report.dump(2) + "\n");
  frodo::atomic_write_file(
      fs::path(args.out) / "summary.csv",
      frodo::csv_header() + frodo::csv_row(rec, frodo::point_label(rec.start)));
  std::printf("wrote %s\n", (fs::path(args.out) / "report.json").c_str());
  return 0;
}

int cmd_exp1(const CliArgs& args) {
  json root = frodo::parse_config_file(args.config);
  if (frodo::config_kind(root) != frodo::ConfigKind::exp1) {
    throw frodo::ConfigError("experiment.kind: not an exp1 config");
  }
  apply_seed_override(root, args, frodo::ConfigKind::exp1);
  const frodo::SweepSpec spec = frodo::build_sweep_spec(root);

  const frodo::Exp1Report report =
      frodo::run_experiment1(spec, parallel_degree(args));

  std::string csv = frodo::csv_header();
  for (const frodo::Exp1Run& r : report.runs) {
    csv += frodo::csv_row(r.record, frodo::point_label(r.start));
    char name[64];
    std::snprintf(name, sizeof(name), "exp1_%s_d%03d_s%02d.json",
                  frodo::variant_name(r.variant), r.draw, r.start_index);
    frodo::atomic_write_file(fs::path(args.out) / "runs" / name,
                             frodo::record_to_json(r.record, true).dump() + "\n");
  }
  frodo::atomic_write_file(fs::path(args.out) / "summary.csv", csv);
  frodo::atomic_write_file(fs::path(args.out) / "report.json",
                           frodo::exp1_report_to_json(report).dump(2) + "\n");

  if (args.verbose) {
    for (const frodo::VariantSummary& vs : report.variants) {
      std::printf("%-11s iterations %.1f +- %.1f (n=%d, censored=%d, diverged=%d) "
                  "KS steep/flat D=%.3f p=%.3g\n",
                  frodo::variant_name(vs.variant), vs.uniform_iterations.mean,
                  vs.uniform_iterations.stddev, vs.uniform_converged,
                  vs.uniform_censored, vs.uniform_diverged,
                  vs.steep_vs_flat.statistic, vs.steep_vs_flat.p_value);
    }
    std::printf("speedup over no_memory: %.2fx\n", report.speedup_vs_no_memory);
  }
  std::printf("wrote %s\n", (fs::path(args.out) / "report.json").c_str());
  return 0;
}

int cmd_exp2(const CliArgs& args) {
  json root = frodo::parse_config_file(args.config);
  apply_mnist_env(root);
  if (frodo::config_kind(root) != frodo::ConfigKind::exp2) {
    throw frodo::ConfigError("experiment.kind: not an exp2 config");
  }
  apply_seed_override(root, args, frodo::ConfigKind::exp2);
  const frodo::FederatedSpec spec = frodo::build_federated_spec(root);

  const frodo::Exp2Report report =
      frodo::run_experiment2(spec, parallel_degree(args));

  std::string csv = frodo::csv_header();
  for (const frodo::Exp2Run& r : report.runs) {
    char label[32];
    std::snprintf(label, sizeof(label), "init_seed_%d", r.seed_index);
    csv += frodo::csv_row(r.record, label);
    char name[64];
    std::snprintf(name, sizeof(name), "exp2_%s_seed%d.json",
                  frodo::variant_name(r.variant), r.seed_index);
    frodo::atomic_write_file(fs::path(args.out) / "runs" / name,
                             frodo::record_to_json(r.record, true).dump() + "\n");
  }
  frodo::atomic_write_file(fs::path(args.out) / "summary.csv", csv);
  frodo::atomic_write_file(fs::path(args.out) / "curves.csv",
                           frodo::exp2_curves_csv(report));
  frodo::atomic_write_file(fs::path(args.out) / "report.json",
                           frodo::exp2_report_to_json(report).dump(2) + "\n");

  if (args.verbose) {
    std::printf("data source: %s, target mean loss: %.4f\n",
                report.data_source_used.c_str(), report.target_loss);
    for (std::size_t v = 0; v < report.spec.variants.size(); ++v) {
      std::printf("%-11s rounds to target:",
                  frodo::variant_name(report.spec.variants[v]));
      for (int r : report.rounds_to_target[v]) std::printf(" %d", r);
      std::printf("\n");
    }
  }
  std::printf("wrote %s\n", (fs::path(args.out) / "report.json").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const CliArgs args = parse_args(argc, argv);
  try {
    if (args.subcommand == "validate") return cmd_validate(args);
    if (args.subcommand == "run") return cmd_run(args);
    if (args.subcommand == "exp1") return cmd_exp1(args);
    return cmd_exp2(args);
  } catch (const frodo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
