#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "warmuplab/errors.hpp"
#include "warmuplab/matrix.hpp"
#include "warmuplab/rng.hpp"

namespace warmuplab {

/// Layer dimensions of a model: ordered (rows, cols) pairs.
struct ShapeSpec {
  std::vector<std::pair<std::size_t, std::size_t>> layers;

  ShapeSpec() = default;
  ShapeSpec(std::initializer_list<std::pair<std::size_t, std::size_t>> l) : layers(l) { validate(); }
  explicit ShapeSpec(std::vector<std::pair<std::size_t, std::size_t>> l) : layers(std::move(l)) {
    validate();
  }

  void validate() const {
    if (layers.empty()) throw ShapeMismatch("ShapeSpec: must have at least one layer");
    for (const auto& [r, c] : layers)
      if (r == 0 || c == 0) throw ShapeMismatch("ShapeSpec: dimensions must be >= 1");
  }

  std::size_t layer_count() const { return layers.size(); }

  bool operator==(const ShapeSpec& o) const { return layers == o.layers; }
};

/// Ordered collection of matrices conforming to a ShapeSpec.
/// Arithmetic never changes shapes; results are checked finite.
class ParamSet {
 public:
  ParamSet() = default;

  explicit ParamSet(const ShapeSpec& spec) {
    layers_.reserve(spec.layer_count());
    for (const auto& [r, c] : spec.layers) layers_.emplace_back(r, c);
  }

  explicit ParamSet(std::vector<Matrix> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeMismatch("ParamSet: must have at least one layer");
  }

  /// Single-layer convenience.
  explicit ParamSet(Matrix m) { layers_.push_back(std::move(m)); }

  std::size_t layer_count() const { return layers_.size(); }
  const Matrix& layer(std::size_t i) const { return layers_[i]; }
  Matrix& layer(std::size_t i) { return layers_[i]; }
  const std::vector<Matrix>& layers() const { return layers_; }

  ShapeSpec shape() const {
    std::vector<std::pair<std::size_t, std::size_t>> s;
    s.reserve(layers_.size());
    for (const auto& m : layers_) s.emplace_back(m.rows(), m.cols());
    return ShapeSpec(std::move(s));
  }

  bool same_shape(const ParamSet& o) const {
    if (layers_.size() != o.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (!layers_[i].same_shape(o.layers_[i])) return false;
    return true;
  }

  bool all_finite() const {
    for (const auto& m : layers_)
      if (!m.all_finite()) return false;
    return true;
  }

  bool is_zero() const {
    for (const auto& m : layers_)
      for (double v : m.data())
        if (v != 0.0) return false;
    return true;
  }

  static ParamSet zeros(const ShapeSpec& spec) { return ParamSet(spec); }

  static ParamSet random_normal(const ShapeSpec& spec, Rng& rng, double scale = 1.0) {
    ParamSet p(spec);
    for (auto& m : p.layers_)
      for (double& v : m.data()) v = scale * rng.normal();
    return p;
  }

 private:
  std::vector<Matrix> layers_;
};

/// Layer-wise a + alpha * b.
inline ParamSet add_scaled(const ParamSet& a, const ParamSet& b, double alpha) {
  if (!a.same_shape(b)) throw ShapeMismatch("add_scaled: shapes differ");
  std::vector<Matrix> out;
  out.reserve(a.layer_count());
  for (std::size_t i = 0; i < a.layer_count(); ++i) {
    Matrix m = a.layer(i);
    const Matrix& bm = b.layer(i);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += alpha * bm[k];
    out.push_back(std::move(m));
  }
  return ParamSet(std::move(out));
}

/// Trace inner product summed over layers.
inline double inner_product(const ParamSet& a, const ParamSet& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("inner_product: shapes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.layer_count(); ++i) {
    const Matrix& am = a.layer(i);
    const Matrix& bm = b.layer(i);
    for (std::size_t k = 0; k < am.size(); ++k) s += am[k] * bm[k];
  }
  return s;
}

inline double frobenius_norm(const ParamSet& a) {
  double s = 0.0;
  for (const auto& m : a.layers())
    for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

inline ParamSet scale(const ParamSet& a, double alpha) {
  std::vector<Matrix> out;
  out.reserve(a.layer_count());
  for (const auto& m : a.layers()) out.push_back(alpha * m);
  return ParamSet(std::move(out));
}

}  // namespace warmuplab
