#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "frodo/experiments.hpp"
#include "frodo/simulator.hpp"

namespace frodo {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// parsing: JSON directly, or a small sectioned key = value format where the
// right-hand side is any JSON value (bare words count as strings)
// ---------------------------------------------------------------------------

namespace cfg_detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline json parse_value(const std::string& raw) {
  const std::string text = trim(raw);
  json parsed = json::parse(text, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  return json(text);  // bare word: keep it as a string
}

}  // namespace cfg_detail

inline json parse_config_text(const std::string& text) {
  json root = json::object();
  json* section = &root;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = cfg_detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      }
      const std::string name = cfg_detail::trim(line.substr(1, line.size() - 2));
      if (name.empty()) {
        throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      }
      section = &root[name];
      if (section->is_null()) *section = json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = cfg_detail::trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    (*section)[key] = cfg_detail::parse_value(line.substr(eq + 1));
  }
  return root;
}

inline json parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) throw ConfigError("invalid JSON in " + path);
    if (!parsed.is_object()) throw ConfigError("config root must be an object");
    return parsed;
  }
  return parse_config_text(text);
}

// ---------------------------------------------------------------------------
// typed field access with dotted-path diagnostics
// ---------------------------------------------------------------------------

namespace cfg_detail {

inline const json* find(const json& root, const std::string& dotted) {
  const json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

inline double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

}  // namespace cfg_detail

inline double opt_number(const json& root, const std::string& path, double fallback) {
  const json* v = cfg_detail::find(root, path);
  return v ? cfg_detail::number_at(*v, path) : fallback;
}

inline double req_number(const json& root, const std::string& path) {
  const json* v = cfg_detail::find(root, path);
  if (!v) throw ConfigError(path + ": required field is missing");
  return cfg_detail::number_at(*v, path);
}

inline int opt_int(const json& root, const std::string& path, int fallback) {
  const json* v = cfg_detail::find(root, path);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v->get<int>();
}

inline bool opt_bool(const json& root, const std::string& path, bool fallback) {
  const json* v = cfg_detail::find(root, path);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(path + ": expected true or false");
  return v->get<bool>();
}

inline std::string opt_string(const json& root, const std::string& path,
                              const std::string& fallback) {
  const json* v = cfg_detail::find(root, path);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(path + ": expected a string");
  return v->get<std::string>();
}

inline std::uint64_t opt_seed(const json& root, const std::string& path,
                              std::uint64_t fallback) {
  const json* v = cfg_detail::find(root, path);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(path + ": expected an integer seed");
  return v->get<std::uint64_t>();
}

inline Vec opt_vec(const json& root, const std::string& path, Vec fallback) {
  const json* v = cfg_detail::find(root, path);
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError(path + ": expected an array of numbers");
  Vec out;
  for (const auto& item : *v) out.push_back(cfg_detail::number_at(item, path));
  return out;
}

inline void reject_unknown_keys(const json& section, const std::string& name,
                                const std::vector<std::string>& allowed) {
  if (!section.is_object()) return;
  for (const auto& [key, value] : section.items()) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError(name + "." + key + ": unknown field");
  }
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

enum class ConfigKind { single_run, exp1, exp2 };

inline ConfigKind config_kind(const json& root) {
  const std::string kind = opt_string(root, "experiment.kind", "");
  if (kind == "exp1") return ConfigKind::exp1;
  if (kind == "exp2") return ConfigKind::exp2;
  if (kind == "run") return ConfigKind::single_run;
  if (!kind.empty()) throw ConfigError("experiment.kind: must be run, exp1 or exp2");
  if (root.contains("sweep")) return ConfigKind::exp1;
  if (root.contains("exp2")) return ConfigKind::exp2;
  if (root.contains("objective") || root.contains("optimizer")) {
    return ConfigKind::single_run;
  }
  throw ConfigError("experiment.kind: cannot tell what to run from this config");
}

inline OptimizerConfig build_optimizer(const json& root) {
  const json* section = cfg_detail::find(root, "optimizer");
  if (!section) throw ConfigError("optimizer: required section is missing");
  reject_unknown_keys(*section, "optimizer",
                      {"variant", "alpha", "beta", "lambda", "horizon", "momentum",
                       "adam_beta1", "adam_beta2", "adam_eps"});
  OptimizerConfig opt;
  const std::string name = opt_string(root, "optimizer.variant", "");
  if (name.empty()) throw ConfigError("optimizer.variant: required field is missing");
  try {
    opt.variant = variant_from_name(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("optimizer.variant: ") + e.what());
  }
  opt.alpha = req_number(root, "optimizer.alpha");
  if (!(opt.alpha > 0.0)) {
    throw ConfigError("optimizer.alpha: must be positive");
  }

  const bool has_beta = cfg_detail::find(root, "optimizer.beta") != nullptr;
  const bool has_lambda = cfg_detail::find(root, "optimizer.lambda") != nullptr;
  const bool has_horizon = cfg_detail::find(root, "optimizer.horizon") != nullptr;
  if (opt.variant == Variant::fractional) {
    opt.beta = req_number(root, "optimizer.beta");
    opt.lambda = req_number(root, "optimizer.lambda");
    if (!(opt.lambda > 0.0 && opt.lambda < 1.0)) {
      throw ConfigError("optimizer.lambda: must lie in the open interval (0,1)");
    }
    opt.horizon = opt_int(root, "optimizer.horizon", -1);
    if (opt.horizon < 1) {
      throw ConfigError("optimizer.horizon: required, must be a positive integer");
    }
  } else {
    if (has_lambda) {
      throw ConfigError("optimizer.lambda: only the fractional variant takes lambda");
    }
    if (opt.variant == Variant::heavy_ball) {
      opt.beta = req_number(root, "optimizer.beta");
      opt.horizon = 1;
      if (has_horizon && opt_int(root, "optimizer.horizon", 1) != 1) {
        throw ConfigError("optimizer.horizon: heavy_ball always uses horizon 1");
      }
    } else {
      if (has_beta && req_number(root, "optimizer.beta") != 0.0) {
        throw ConfigError("optimizer.beta: only memory variants take a nonzero beta");
      }
      if (has_horizon) {
        throw ConfigError("optimizer.horizon: only memory variants take a horizon");
      }
    }
  }
  if (opt.beta < 0.0) throw ConfigError("optimizer.beta: must be non-negative");
  opt.momentum = opt_number(root, "optimizer.momentum", opt.momentum);
  if (opt.variant != Variant::nesterov &&
      cfg_detail::find(root, "optimizer.momentum")) {
    throw ConfigError("optimizer.momentum: only the nesterov variant takes momentum");
  }
  if (!(opt.momentum >= 0.0 && opt.momentum < 1.0)) {
    throw ConfigError("optimizer.momentum: must lie in [0,1)");
  }
  opt.adam_beta1 = opt_number(root, "optimizer.adam_beta1", opt.adam_beta1);
  opt.adam_beta2 = opt_number(root, "optimizer.adam_beta2", opt.adam_beta2);
  opt.adam_eps = opt_number(root, "optimizer.adam_eps", opt.adam_eps);
  return opt;
}

inline DirectedGraph build_graph(const json& root, int default_agents) {
  const json* section = cfg_detail::find(root, "graph");
  if (!section) {
    return DirectedGraph::fully_connected(default_agents, true);
  }
  reject_unknown_keys(*section, "graph", {"fully_connected", "include_self", "agents", "edges"});
  if (cfg_detail::find(root, "graph.fully_connected")) {
    const int n = opt_int(root, "graph.fully_connected", 0);
    if (n < 1) throw ConfigError("graph.fully_connected: must be a positive agent count");
    return DirectedGraph::fully_connected(n, opt_bool(root, "graph.include_self", true));
  }
  const int agents = opt_int(root, "graph.agents", 0);
  if (agents < 1) throw ConfigError("graph.agents: must be a positive agent count");
  const json* edges = cfg_detail::find(root, "graph.edges");
  if (!edges || !edges->is_array()) {
    throw ConfigError("graph.edges: expected an array of [from, to] pairs");
  }
  std::vector<std::pair<int, int>> pairs;
  for (const auto& e : *edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw ConfigError("graph.edges: each edge must be an integer pair [from, to]");
    }
    pairs.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  try {
    return DirectedGraph(agents, pairs);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("graph.edges: ") + e.what());
  }
}

inline DataSpec build_data_spec(const json& root) {
  DataSpec data;
  const json* section = cfg_detail::find(root, "data");
  if (!section) return data;
  reject_unknown_keys(*section, "data",
                      {"source", "mnist_dir", "mnist_limit", "dim", "classes",
                       "total", "center_spread", "noise_std"});
  data.source = opt_string(root, "data.source", data.source);
  if (data.source != "synthetic" && data.source != "mnist") {
    throw ConfigError("data.source: must be synthetic or mnist");
  }
  data.mnist_dir = opt_string(root, "data.mnist_dir", data.mnist_dir);
  data.mnist_limit = static_cast<std::size_t>(
      opt_int(root, "data.mnist_limit", static_cast<int>(data.mnist_limit)));
  data.dim = opt_int(root, "data.dim", data.dim);
  data.classes = opt_int(root, "data.classes", data.classes);
  data.total = opt_int(root, "data.total", data.total);
  data.center_spread = opt_number(root, "data.center_spread", data.center_spread);
  data.noise_std = opt_number(root, "data.noise_std", data.noise_std);
  if (data.dim < 1) throw ConfigError("data.dim: must be positive");
  if (data.classes < 2) throw ConfigError("data.classes: need at least two classes");
  if (data.total < data.classes) throw ConfigError("data.total: too few samples");
  return data;
}

// A single-run config resolved into simulator inputs. The objective family
// is kept for the record echo.
struct ResolvedRun {
  RunConfig cfg;
  std::string objective_family;
};

inline ResolvedRun build_run_config(const json& root) {
  reject_unknown_keys(root, "config",
                      {"experiment", "graph", "objective", "optimizer", "run", "data"});
  ResolvedRun out;
  const std::string family = opt_string(root, "objective.family", "");
  if (family.empty()) throw ConfigError("objective.family: required field is missing");
  out.objective_family = family;

  const json* objective = cfg_detail::find(root, "objective");
  if (family == "exp1") {
    reject_unknown_keys(*objective, "objective", {"family"});
    out.cfg.objectives = exp1_objectives();
    out.cfg.graph = build_graph(root, 4);
    out.cfg.x_star = {0.0, 0.0};
    out.cfg.initial_state = {1.0, 0.0};
  } else if (family == "quadratic") {
    reject_unknown_keys(*objective, "objective", {"family", "coeffs", "centers", "offsets"});
    const json* coeffs = cfg_detail::find(root, "objective.coeffs");
    const json* centers = cfg_detail::find(root, "objective.centers");
    if (!coeffs || !coeffs->is_array() || coeffs->empty()) {
      throw ConfigError("objective.coeffs: expected one coefficient row per agent");
    }
    if (!centers || !centers->is_array() || centers->size() != coeffs->size()) {
      throw ConfigError("objective.centers: expected one center row per agent");
    }
    const json* offsets = cfg_detail::find(root, "objective.offsets");
    for (std::size_t i = 0; i < coeffs->size(); ++i) {
      Vec c, t;
      for (const auto& v : (*coeffs)[i]) c.push_back(cfg_detail::number_at(v, "objective.coeffs"));
      for (const auto& v : (*centers)[i]) t.push_back(cfg_detail::number_at(v, "objective.centers"));
      double off = 0.0;
      if (offsets) off = cfg_detail::number_at((*offsets)[i], "objective.offsets");
      try {
        out.cfg.objectives.push_back(std::make_shared<AxisQuadratic>(c, t, off));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("objective.coeffs: ") + e.what());
      }
    }
    out.cfg.graph = build_graph(root, static_cast<int>(coeffs->size()));
    // x* of the sum is available whenever every column has positive curvature
    const std::size_t dim = out.cfg.objectives[0]->dimension();
    Vec star(dim, 0.0);
    bool solvable = true;
    for (std::size_t j = 0; j < dim && solvable; ++j) {
      double num = 0.0, den = 0.0;
      for (const auto& obj : out.cfg.objectives) {
        const auto& q = static_cast<const AxisQuadratic&>(*obj);
        num += q.coeffs()[j] * q.centers()[j];
        den += q.coeffs()[j];
      }
      if (den > 0.0) star[j] = num / den;
      else solvable = false;
    }
    if (solvable) out.cfg.x_star = star;
    out.cfg.initial_state = Vec(dim, 1.0);
  } else if (family == "mlp") {
    reject_unknown_keys(*objective, "objective", {"family", "hidden", "batch_size"});
    DataSpec data = build_data_spec(root);
    const int batch = opt_int(root, "objective.batch_size", 64);
    if (batch < 1) throw ConfigError("objective.batch_size: must be positive");
    out.cfg.graph = build_graph(root, 2);
    const int agents = out.cfg.graph.num_agents();
    const std::uint64_t seed = opt_seed(root, "run.seed", 0);

    std::string source_used;
    Dataset all = detail::exp2_dataset(data, derive_seed(seed, 0xda7a), source_used);
    auto parts = stratified_split(all, agents, derive_seed(seed, 0xda7a));
    std::vector<int> layers{all.dim};
    const json* hidden = cfg_detail::find(root, "objective.hidden");
    if (hidden) {
      if (!hidden->is_array()) throw ConfigError("objective.hidden: expected an array");
      for (const auto& h : *hidden) {
        if (!h.is_number_integer() || h.get<int>() < 1) {
          throw ConfigError("objective.hidden: layer widths must be positive integers");
        }
        layers.push_back(h.get<int>());
      }
    } else {
      layers.push_back(32);
    }
    layers.push_back(all.num_classes);
    for (int a = 0; a < agents; ++a) {
      if (batch > static_cast<int>(parts[static_cast<std::size_t>(a)].size())) {
        throw ConfigError("objective.batch_size: larger than an agent's partition");
      }
      out.cfg.objectives.push_back(std::make_shared<MlpObjective>(
          layers, parts[static_cast<std::size_t>(a)], batch,
          derive_seed(seed, 0xba7c4, static_cast<std::uint64_t>(a))));
    }
    out.cfg.initial_state =
        MlpObjective::initial_params(layers, derive_seed(seed, 0x1217));
    out.cfg.record_mean_states = false;
    out.cfg.data_source = source_used;
  } else {
    throw ConfigError("objective.family: must be exp1, quadratic or mlp");
  }

  const json* run_section = cfg_detail::find(root, "run");
  if (run_section) {
    reject_unknown_keys(*run_section, "run",
                        {"rounds", "epsilon", "x0", "x_star", "seed", "target_loss",
                         "record_mean_states"});
  }
  out.cfg.opt = build_optimizer(root);
  out.cfg.rounds = opt_int(root, "run.rounds", 10000);
  if (out.cfg.rounds < 1) throw ConfigError("run.rounds: must be at least 1");
  out.cfg.tolerance = opt_number(root, "run.epsilon", 1e-3);
  if (!(out.cfg.tolerance > 0.0)) throw ConfigError("run.epsilon: must be positive");
  out.cfg.initial_state = opt_vec(root, "run.x0", out.cfg.initial_state);
  out.cfg.x_star = opt_vec(root, "run.x_star", out.cfg.x_star);
  out.cfg.seed = opt_seed(root, "run.seed", 0);
  const double target = opt_number(root, "run.target_loss",
                                   std::numeric_limits<double>::quiet_NaN());
  out.cfg.target_loss = target;
  out.cfg.record_mean_states =
      opt_bool(root, "run.record_mean_states", out.cfg.record_mean_states);

  const std::size_t dim = out.cfg.objectives[0]->dimension();
  if (out.cfg.initial_state.size() != dim) {
    throw ConfigError("run.x0: dimension does not match the objective");
  }
  if (!out.cfg.x_star.empty() && out.cfg.x_star.size() != dim) {
    throw ConfigError("run.x_star: dimension does not match the objective");
  }
  return out;
}

inline SweepSpec build_sweep_spec(const json& root) {
  reject_unknown_keys(root, "config", {"experiment", "sweep"});
  const json* section = cfg_detail::find(root, "sweep");
  if (section) {
    reject_unknown_keys(*section, "sweep",
                        {"variants", "draws", "fixed_starts", "uniform_starts",
                         "epsilon", "max_rounds", "seed"});
  }
  SweepSpec spec;
  const json* variants = cfg_detail::find(root, "sweep.variants");
  if (variants) {
    if (!variants->is_array() || variants->empty()) {
      throw ConfigError("sweep.variants: expected a non-empty array of variant names");
    }
    spec.variants.clear();
    for (const auto& v : *variants) {
      if (!v.is_string()) throw ConfigError("sweep.variants: entries must be strings");
      try {
        spec.variants.push_back(variant_from_name(v.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sweep.variants: ") + e.what());
      }
    }
  }
  spec.draws = opt_int(root, "sweep.draws", spec.draws);
  spec.fixed_starts = opt_bool(root, "sweep.fixed_starts", spec.fixed_starts);
  spec.uniform_starts = opt_int(root, "sweep.uniform_starts", spec.uniform_starts);
  spec.epsilon = opt_number(root, "sweep.epsilon", spec.epsilon);
  spec.max_rounds = opt_int(root, "sweep.max_rounds", spec.max_rounds);
  spec.seed = opt_seed(root, "sweep.seed", spec.seed);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

inline FederatedSpec build_federated_spec(const json& root) {
  reject_unknown_keys(root, "config", {"experiment", "exp2", "data"});
  const json* section = cfg_detail::find(root, "exp2");
  if (section) {
    reject_unknown_keys(*section, "exp2",
                        {"variants", "agents", "seeds", "rounds", "batch_size",
                         "hidden", "alpha", "beta", "lambda", "horizon",
                         "adam_alpha", "momentum", "target_fraction", "seed"});
  }
  FederatedSpec spec;
  const json* variants = cfg_detail::find(root, "exp2.variants");
  if (variants) {
    if (!variants->is_array() || variants->empty()) {
      throw ConfigError("exp2.variants: expected a non-empty array of variant names");
    }
    spec.variants.clear();
    for (const auto& v : *variants) {
      if (!v.is_string()) throw ConfigError("exp2.variants: entries must be strings");
      try {
        spec.variants.push_back(variant_from_name(v.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("exp2.variants: ") + e.what());
      }
    }
  }
  spec.agents = opt_int(root, "exp2.agents", spec.agents);
  spec.seeds = opt_int(root, "exp2.seeds", spec.seeds);
  spec.rounds = opt_int(root, "exp2.rounds", spec.rounds);
  spec.batch_size = opt_int(root, "exp2.batch_size", spec.batch_size);
  const json* hidden = cfg_detail::find(root, "exp2.hidden");
  if (hidden) {
    if (!hidden->is_array()) throw ConfigError("exp2.hidden: expected an array");
    spec.hidden.clear();
    for (const auto& h : *hidden) {
      if (!h.is_number_integer() || h.get<int>() < 1) {
        throw ConfigError("exp2.hidden: layer widths must be positive integers");
      }
      spec.hidden.push_back(h.get<int>());
    }
  }
  spec.alpha = opt_number(root, "exp2.alpha", spec.alpha);
  spec.beta = opt_number(root, "exp2.beta", spec.beta);
  spec.lambda = opt_number(root, "exp2.lambda", spec.lambda);
  spec.horizon = opt_int(root, "exp2.horizon", spec.horizon);
  spec.adam_alpha = opt_number(root, "exp2.adam_alpha", spec.adam_alpha);
  spec.momentum = opt_number(root, "exp2.momentum", spec.momentum);
  spec.target_fraction = opt_number(root, "exp2.target_fraction", spec.target_fraction);
  spec.seed = opt_seed(root, "exp2.seed", spec.seed);
  spec.data = build_data_spec(root);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

// Parses and cross-validates without running anything; returns the kind.
inline ConfigKind validate_config(const json& root) {
  const ConfigKind kind = config_kind(root);
  switch (kind) {
    case ConfigKind::single_run: build_run_config(root); break;
    case ConfigKind::exp1: build_sweep_spec(root); break;
    case ConfigKind::exp2: build_federated_spec(root); break;
  }
  return kind;
}

}  // namespace frodo
