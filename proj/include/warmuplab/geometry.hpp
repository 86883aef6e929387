#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "warmuplab/errors.hpp"
#include "warmuplab/matrix.hpp"
#include "warmuplab/param_set.hpp"

namespace warmuplab {

enum class NormKind { Euclidean, EntrywiseMax, Spectral };

/// Which norm governs the LMO. A single kind applies to the whole ParamSet
/// (Euclidean: global Frobenius; EntrywiseMax: global max-abs; Spectral:
/// per-layer operator norm, max over layers). LayerwiseMax mixes kinds
/// per layer under the max-over-layers composite norm.
struct GeometryKind {
  bool layerwise = false;
  NormKind global = NormKind::Euclidean;
  std::vector<NormKind> per_layer;  // used iff layerwise

  static GeometryKind euclidean() { return {false, NormKind::Euclidean, {}}; }
  static GeometryKind entrywise_max() { return {false, NormKind::EntrywiseMax, {}}; }
  static GeometryKind spectral() { return {false, NormKind::Spectral, {}}; }
  static GeometryKind layerwise_max(std::vector<NormKind> kinds) {
    if (kinds.empty()) throw ShapeMismatch("layerwise_max: empty kind list");
    return {true, NormKind::Euclidean, std::move(kinds)};
  }

  NormKind kind_for_layer(std::size_t i) const {
    if (!layerwise) return global;
    return per_layer.at(i);
  }

  void check_against(const ShapeSpec& shapes) const {
    if (layerwise && per_layer.size() != shapes.layer_count())
      throw ShapeMismatch("geometry: per-layer kind list does not match layer count");
  }
};

/// Knobs for the spectral LMO. Exact SVD is used whenever min(m, n) <= 8
/// unless overridden; larger matrices go through Newton-Schulz.
struct LmoOptions {
  int ns_steps = 5;
  bool force_exact = false;
  bool force_ns = false;
};

namespace detail {

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline double l1_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += std::abs(v);
  return s;
}

inline double linf_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s = std::max(s, std::abs(v));
  return s;
}

inline double nuclear_norm(const Matrix& m) {
  auto sv = singular_values(m);
  return std::accumulate(sv.begin(), sv.end(), 0.0);
}

inline double spectral_norm(const Matrix& m) {
  auto sv = singular_values(m);
  return sv.empty() ? 0.0 : sv.front();
}

inline Matrix ortho_direction(const Matrix& g, const LmoOptions& opt) {
  const bool exact = opt.force_exact ||
                     (!opt.force_ns && std::min(g.rows(), g.cols()) <= 8);
  if (exact) return orthogonalize_exact(g);
  return orthogonalize_ns(g, opt.ns_steps);
}

}  // namespace detail

inline double dual_norm(const ParamSet& g, const GeometryKind& geom) {
  geom.check_against(g.shape());
  if (!geom.layerwise && geom.global == NormKind::Euclidean) return frobenius_norm(g);
  double s = 0.0;
  for (std::size_t i = 0; i < g.layer_count(); ++i) {
    switch (geom.kind_for_layer(i)) {
      case NormKind::Euclidean: s += g.layer(i).frobenius(); break;
      case NormKind::EntrywiseMax: s += detail::l1_norm(g.layer(i)); break;
      case NormKind::Spectral: s += detail::nuclear_norm(g.layer(i)); break;
    }
  }
  return s;
}

inline double primal_norm(const ParamSet& x, const GeometryKind& geom) {
  geom.check_against(x.shape());
  if (!geom.layerwise && geom.global == NormKind::Euclidean) return frobenius_norm(x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.layer_count(); ++i) {
    double v = 0.0;
    switch (geom.kind_for_layer(i)) {
      case NormKind::Euclidean: v = x.layer(i).frobenius(); break;
      case NormKind::EntrywiseMax: v = detail::linf_norm(x.layer(i)); break;
      case NormKind::Spectral: v = detail::spectral_norm(x.layer(i)); break;
    }
    s = std::max(s, v);
  }
  return s;
}

/// arg min over the unit ball of <g, q>: the steepest descent direction.
/// Satisfies <g, lmo(g)> = -dual_norm(g) with unit primal norm (deficient
/// only on zero entries / zero singular values).
inline ParamSet lmo(const ParamSet& g, const GeometryKind& geom, const LmoOptions& opt = {}) {
  geom.check_against(g.shape());
  const bool needs_nonzero =
      !geom.layerwise
          ? geom.global != NormKind::EntrywiseMax
          : std::any_of(geom.per_layer.begin(), geom.per_layer.end(),
                        [](NormKind k) { return k != NormKind::EntrywiseMax; });
  if (needs_nonzero && g.is_zero())
    throw DegenerateGradient("lmo: zero gradient under a normalizing geometry");

  if (!geom.layerwise && geom.global == NormKind::Euclidean)
    return scale(g, -1.0 / frobenius_norm(g));

  std::vector<Matrix> out;
  out.reserve(g.layer_count());
  for (std::size_t i = 0; i < g.layer_count(); ++i) {
    const Matrix& gl = g.layer(i);
    switch (geom.kind_for_layer(i)) {
      case NormKind::Euclidean: {
        const double n = gl.frobenius();
        out.push_back(n > 0.0 ? (-1.0 / n) * gl : Matrix(gl.rows(), gl.cols()));
        break;
      }
      case NormKind::EntrywiseMax: {
        Matrix q(gl.rows(), gl.cols());
        for (std::size_t k = 0; k < gl.size(); ++k) q[k] = -detail::sign0(gl[k]);
        out.push_back(std::move(q));
        break;
      }
      case NormKind::Spectral: {
        if (gl.frobenius() == 0.0) {
          out.push_back(Matrix(gl.rows(), gl.cols()));
        } else {
          out.push_back(-1.0 * detail::ortho_direction(gl, opt));
        }
        break;
      }
    }
  }
  return ParamSet(std::move(out));
}

/// Worst-case squared Frobenius norm over the unit ball: per-layer
/// contributions min(m, n) (spectral), m*n (entrywise max), 1 (Euclidean),
/// summed across layers.
inline double kappa(const ShapeSpec& shapes, const GeometryKind& geom) {
  geom.check_against(shapes);
  double k = 0.0;
  for (std::size_t i = 0; i < shapes.layer_count(); ++i) {
    const auto [m, n] = shapes.layers[i];
    switch (geom.kind_for_layer(i)) {
      case NormKind::Euclidean: k += 1.0; break;
      case NormKind::EntrywiseMax: k += static_cast<double>(m * n); break;
      case NormKind::Spectral: k += static_cast<double>(std::min(m, n)); break;
    }
  }
  return k;
}

/// Extremal point attaining the kappa supremum: primal_norm(u) = 1 and
/// ||u||_F^2 = kappa. All-ones signs for entrywise max, rectangular
/// identities for spectral, unit-Frobenius layers for Euclidean.
inline ParamSet kappa_witness(const ShapeSpec& shapes, const GeometryKind& geom) {
  geom.check_against(shapes);
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < shapes.layer_count(); ++i) {
    const auto [m, n] = shapes.layers[i];
    Matrix u(m, n);
    switch (geom.kind_for_layer(i)) {
      case NormKind::Euclidean: {
        const double v = 1.0 / std::sqrt(static_cast<double>(m * n));
        for (std::size_t k = 0; k < u.size(); ++k) u[k] = v;
        break;
      }
      case NormKind::EntrywiseMax:
        for (std::size_t k = 0; k < u.size(); ++k) u[k] = 1.0;
        break;
      case NormKind::Spectral:
        for (std::size_t d = 0; d < std::min(m, n); ++d) u(d, d) = 1.0;
        break;
    }
    out.push_back(std::move(u));
  }
  return ParamSet(std::move(out));
}

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::Euclidean: return "euclidean";
    case NormKind::EntrywiseMax: return "sign";
    case NormKind::Spectral: return "spectral";
  }
  return "?";
}

inline NormKind norm_kind_from_string(const std::string& s) {
  if (s == "euclidean") return NormKind::Euclidean;
  if (s == "sign") return NormKind::EntrywiseMax;
  if (s == "spectral") return NormKind::Spectral;
  throw ConfigError("unknown norm kind: " + s);
}

}  // namespace warmuplab
