#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>

#include "frodo/memory_kernel.hpp"
#include "frodo/vec.hpp"

namespace frodo {

// Descent-direction rule applied in stage two of each communication round.
// fractional: x <- x - alpha*g - beta*M with the power-law memory term M.
// heavy_ball: the fractional rule restricted to a one-step memory (T = 1).
// no_memory / plain_gd: x <- x - alpha*g (the former is the beta = 0 naming
//                       used in the quadratic study, the latter the baseline
//                       naming used in the federated study).
// nesterov:   velocity form, gradient evaluated at the look-ahead point.
// adam:       bias-corrected first/second moment estimates.
enum class Variant {
  fractional,
  heavy_ball,
  no_memory,
  nesterov,
  adam,
  plain_gd,
};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::fractional: return "fractional";
    case Variant::heavy_ball: return "heavy_ball";
    case Variant::no_memory: return "no_memory";
    case Variant::nesterov: return "nesterov";
    case Variant::adam: return "adam";
    case Variant::plain_gd: return "plain_gd";
  }
  return "?";
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "fractional") return Variant::fractional;
  if (name == "heavy_ball") return Variant::heavy_ball;
  if (name == "no_memory") return Variant::no_memory;
  if (name == "nesterov") return Variant::nesterov;
  if (name == "adam") return Variant::adam;
  if (name == "plain_gd") return Variant::plain_gd;
  throw std::invalid_argument("unknown optimizer variant: " + name);
}

struct OptimizerConfig {
  Variant variant = Variant::plain_gd;
  double alpha = 0.1;    // gradient step size
  double beta = 0.0;     // memory feedback magnitude
  double lambda = 0.15;  // fractional-order exponent, memory variants only
  int horizon = 1;       // memory length T
  double momentum = 0.9;       // nesterov
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  bool uses_memory() const {
    return variant == Variant::fractional || variant == Variant::heavy_ball;
  }
  // no_memory pins beta to zero; heavy_ball pins the horizon to one.
  double effective_beta() const {
    return variant == Variant::no_memory ? 0.0 : beta;
  }
  int effective_horizon() const {
    if (variant == Variant::heavy_ball) return 1;
    return uses_memory() ? horizon : 0;
  }

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (beta < 0.0) throw std::invalid_argument("beta must be non-negative");
    if (uses_memory()) {
      if (variant == Variant::fractional && !(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("lambda must lie in (0,1)");
      }
      if (effective_horizon() < 1) {
        throw std::invalid_argument("horizon must be a positive integer");
      }
    }
    if (variant == Variant::nesterov && !(momentum >= 0.0 && momentum < 1.0)) {
      throw std::invalid_argument("momentum must lie in [0,1)");
    }
  }

  // Kernel used by the memory variants. heavy_ball has one weight that is
  // exactly 1 regardless of the exponent.
  MemoryKernel build_kernel() const {
    if (!uses_memory()) {
      throw std::logic_error("variant has no memory kernel");
    }
    if (variant == Variant::heavy_ball) return MemoryKernel(0.5, 1);
    return MemoryKernel(lambda, horizon);
  }
};

// Per-agent mutable state: the iterate, the bounded gradient history
// (newest first, at most the horizon), and variant scratch.
struct AgentState {
  Vec x;
  std::deque<Vec> grad_history;
  Vec adam_m, adam_v;
  std::int64_t adam_steps = 0;
  Vec velocity;  // nesterov
};

enum class UpdateStatus { ok, diverged };

// Point at which the round's gradient should be evaluated: the iterate
// itself, except nesterov's look-ahead x - alpha*momentum*velocity.
inline Vec gradient_eval_point(const AgentState& state,
                               const OptimizerConfig& cfg) {
  if (cfg.variant == Variant::nesterov && !state.velocity.empty()) {
    Vec p = state.x;
    axpy(p, -cfg.alpha * cfg.momentum, state.velocity);
    return p;
  }
  return state.x;
}

// Applies one descent update in place. The gradient is pushed onto the
// history only after the memory term is formed, so the memory covers
// strictly past rounds. Returns diverged when the gradient is non-finite.
inline UpdateStatus descent_update(AgentState& state, const Vec& grad,
                                   const OptimizerConfig& cfg,
                                   const MemoryKernel* kernel) {
  check_same_size(state.x, grad);
  if (!all_finite(grad)) return UpdateStatus::diverged;

  switch (cfg.variant) {
    case Variant::fractional:
    case Variant::heavy_ball: {
      if (kernel == nullptr) {
        throw std::invalid_argument("memory variant requires a kernel");
      }
      const double beta = cfg.effective_beta();
      if (beta != 0.0 && !state.grad_history.empty()) {
        const Vec mem = memory_term(*kernel, state.grad_history, state.x.size());
        axpy(state.x, -cfg.alpha, grad);
        axpy(state.x, -beta, mem);
      } else {
        axpy(state.x, -cfg.alpha, grad);
      }
      state.grad_history.push_front(grad);
      const auto horizon = static_cast<std::size_t>(cfg.effective_horizon());
      while (state.grad_history.size() > horizon) state.grad_history.pop_back();
      break;
    }
    case Variant::no_memory:
    case Variant::plain_gd: {
      axpy(state.x, -cfg.alpha, grad);
      break;
    }
    case Variant::nesterov: {
      if (state.velocity.empty()) state.velocity = zeros(state.x.size());
      scale_in_place(state.velocity, cfg.momentum);
      add_in_place(state.velocity, grad);
      axpy(state.x, -cfg.alpha, state.velocity);
      break;
    }
    case Variant::adam: {
      if (state.adam_m.empty()) {
        state.adam_m = zeros(state.x.size());
        state.adam_v = zeros(state.x.size());
      }
      state.adam_steps += 1;
      const double b1 = cfg.adam_beta1;
      const double b2 = cfg.adam_beta2;
      const double m_corr = 1.0 - std::pow(b1, static_cast<double>(state.adam_steps));
      const double v_corr = 1.0 - std::pow(b2, static_cast<double>(state.adam_steps));
      for (std::size_t i = 0; i < state.x.size(); ++i) {
        const double g = grad[i];
        state.adam_m[i] = b1 * state.adam_m[i] + (1.0 - b1) * g;
        state.adam_v[i] = b2 * state.adam_v[i] + (1.0 - b2) * g * g;
        const double m_hat = state.adam_m[i] / m_corr;
        const double v_hat = state.adam_v[i] / v_corr;
        state.x[i] -= cfg.alpha * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
      }
      detail::flop_counter += 12 * state.x.size();
      break;
    }
  }
  return all_finite(state.x) ? UpdateStatus::ok : UpdateStatus::diverged;
}

}  // namespace frodo
