#pragma once

#include <string>
#include <utility>

#include "warmuplab/errors.hpp"
#include "warmuplab/geometry.hpp"
#include "warmuplab/param_set.hpp"

namespace warmuplab {

enum class OptimizerKind { NormSgd, SignSgd, Lion, Muon, Layerwise };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::NormSgd;
  double beta1 = 0.0;
  double beta2 = 0.0;  // Lion only
  double weight_decay = 0.0;
  double clip = 0.0;  // global Frobenius clip of g before momentum; 0 disables
  GeometryKind geometry = GeometryKind::euclidean();  // Layerwise only
  LmoOptions lmo_options{};

  GeometryKind effective_geometry() const {
    switch (kind) {
      case OptimizerKind::NormSgd: return GeometryKind::euclidean();
      case OptimizerKind::SignSgd:
      case OptimizerKind::Lion: return GeometryKind::entrywise_max();
      case OptimizerKind::Muon: return GeometryKind::spectral();
      case OptimizerKind::Layerwise: return geometry;
    }
    return geometry;
  }
};

struct OptimizerState {
  ParamSet momentum;
  long step_count = 0;

  static OptimizerState init(const ShapeSpec& shapes) {
    return OptimizerState{ParamSet::zeros(shapes), 0};
  }
};

/// x + eta * lmo(g, geom).
inline ParamSet step_lmo(const ParamSet& x, const ParamSet& g, double eta,
                         const GeometryKind& geom, const LmoOptions& opt = {}) {
  if (eta < 0.0) throw InvalidStep("step_lmo: eta must be >= 0");
  if (eta == 0.0) return x;
  return add_scaled(x, lmo(g, geom, opt), eta);
}

/// (1 - lambda*eta) * x + eta * lmo(g, geom).
inline ParamSet step_lmo_wd(const ParamSet& x, const ParamSet& g, double eta, double lambda,
                            const GeometryKind& geom, const LmoOptions& opt = {}) {
  if (eta < 0.0 || lambda < 0.0) throw InvalidStep("step_lmo_wd: eta, lambda must be >= 0");
  const double shrink = lambda * eta;
  if (shrink > 1.0) throw InvalidStep("step_lmo_wd: lambda * eta exceeds 1");
  if (eta == 0.0) return x;
  return add_scaled(scale(x, 1.0 - shrink), lmo(g, geom, opt), eta);
}

/// x - eta * g / ||g||_2; the step length in Frobenius norm is exactly eta.
inline ParamSet step_normalized_sgd(const ParamSet& x, const ParamSet& g_xi, double eta) {
  return step_lmo(x, g_xi, eta, GeometryKind::euclidean());
}

/// beta * m + (1 - beta) * g.
inline ParamSet momentum_update(const ParamSet& m, const ParamSet& g, double beta) {
  if (beta < 0.0 || beta >= 1.0) throw InvalidStep("momentum_update: beta must be in [0, 1)");
  return add_scaled(scale(m, beta), g, 1.0 - beta);
}

/// Entrywise sign(beta1 * m + (1 - beta1) * g); the step applies x - eta * result.
inline ParamSet lion_direction(const ParamSet& m, const ParamSet& g, double beta1) {
  ParamSet blend = momentum_update(m, g, beta1);
  for (std::size_t i = 0; i < blend.layer_count(); ++i)
    for (double& v : blend.layer(i).data()) v = detail::sign0(v);
  return blend;
}

namespace detail {
inline ParamSet maybe_clip(const ParamSet& g, double clip) {
  if (clip <= 0.0) return g;
  const double n = frobenius_norm(g);
  if (n <= clip) return g;
  return scale(g, clip / n);
}
}  // namespace detail

/// One full update: clip, momentum, LMO step (with weight decay when
/// configured). A zero LMO input under a normalizing geometry skips the
/// parameter update and keeps the run going.
inline std::pair<ParamSet, OptimizerState> optimizer_step(const OptimizerConfig& cfg,
                                                          OptimizerState state,
                                                          const ParamSet& x, const ParamSet& g,
                                                          double eta) {
  const ParamSet gc = detail::maybe_clip(g, cfg.clip);
  const GeometryKind geom = cfg.effective_geometry();

  ParamSet direction_source = gc;
  if (cfg.kind == OptimizerKind::Lion) {
    direction_source = momentum_update(state.momentum, gc, cfg.beta1);
    state.momentum = momentum_update(state.momentum, gc, cfg.beta2);
  } else {
    state.momentum = momentum_update(state.momentum, gc, cfg.beta1);
    direction_source = state.momentum;
  }
  ++state.step_count;

  if (direction_source.is_zero()) return {x, std::move(state)};  // converged step, skip

  ParamSet next =
      cfg.weight_decay > 0.0
          ? step_lmo_wd(x, direction_source, eta, cfg.weight_decay, geom, cfg.lmo_options)
          : step_lmo(x, direction_source, eta, geom, cfg.lmo_options);
  return {std::move(next), std::move(state)};
}

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::NormSgd: return "normSGD";
    case OptimizerKind::SignSgd: return "signSGD";
    case OptimizerKind::Lion: return "Lion";
    case OptimizerKind::Muon: return "Muon";
    case OptimizerKind::Layerwise: return "layerwise";
  }
  return "?";
}

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "normSGD" || s == "normsgd") return OptimizerKind::NormSgd;
  if (s == "signSGD" || s == "signsgd") return OptimizerKind::SignSgd;
  if (s == "Lion" || s == "lion") return OptimizerKind::Lion;
  if (s == "Muon" || s == "muon") return OptimizerKind::Muon;
  if (s == "layerwise") return OptimizerKind::Layerwise;
  throw ConfigError("unknown optimizer kind: " + s);
}

}  // namespace warmuplab
