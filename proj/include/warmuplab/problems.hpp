#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "warmuplab/param_set.hpp"
#include "warmuplab/rng.hpp"
#include "warmuplab/schedulers.hpp"

namespace warmuplab {

/// A differentiable objective with a known target value, and, when available,
/// a known minimizer and smoothness constants.
struct Objective {
  ShapeSpec shapes;
  std::function<double(const ParamSet&)> eval;
  std::function<ParamSet(const ParamSet&)> grad;
  double f_star = 0.0;
  std::optional<ParamSet> x_star;
  std::optional<TheoreticalParams> known_constants;
  std::optional<ParamSet> x0;  // problem-preferred starting point
};

/// One sampled batch: a small objective with its own infimum.
struct Batch {
  std::function<double(const ParamSet&)> eval;
  std::function<ParamSet(const ParamSet&)> grad;
  double f_star = 0.0;
};

/// f(x) = E[f_xi(x)] with per-batch access; interpolation holds by construction.
struct StochasticObjective {
  Objective full;
  std::function<Batch(std::uint64_t seed, std::uint64_t index)> sample;
};

/// Per-batch suboptimality and gradient at x.
inline std::pair<double, ParamSet> batch_delta(const StochasticObjective& sobj,
                                               const ParamSet& x, std::uint64_t seed,
                                               std::uint64_t index) {
  Batch b = sobj.sample(seed, index);
  return {b.eval(x) - b.f_star, b.grad(x)};
}

/// f(x) = 0.5 * ||x - x_star||_F^2. Exactly 1-smooth; f_star = 0.
inline Objective quadratic_make(const ShapeSpec& shapes, ParamSet x_star) {
  Objective obj;
  obj.shapes = shapes;
  obj.f_star = 0.0;
  obj.x_star = x_star;
  TheoreticalParams p;
  p.rho = 2.0;
  p.K0 = 1.0;
  obj.known_constants = p;
  obj.eval = [x_star](const ParamSet& x) {
    const double d = frobenius_norm(add_scaled(x, x_star, -1.0));
    return 0.5 * d * d;
  };
  obj.grad = [x_star](const ParamSet& x) { return add_scaled(x, x_star, -1.0); };
  return obj;
}

/// f(x) = sum_i (cosh(x_i) - 1) on a dim x 1 vector; f_star = 0 at x = 0.
/// Curvature grows with distance, so the smoothness constants must be fitted.
inline Objective coshsum_make(std::size_t dim) {
  Objective obj;
  obj.shapes = ShapeSpec{{dim, 1}};
  obj.f_star = 0.0;
  obj.x_star = ParamSet::zeros(obj.shapes);
  obj.eval = [](const ParamSet& x) {
    double s = 0.0;
    for (double v : x.layer(0).data()) s += std::cosh(v) - 1.0;
    return s;
  };
  obj.grad = [](const ParamSet& x) {
    ParamSet g = x;
    for (double& v : g.layer(0).data()) v = std::sinh(v);
    return g;
  };
  return obj;
}

/// Consistent linear system with planted solution: every batch
/// f_xi(x) = 0.5 * (a_xi^T x - b_xi)^2 attains 0 at x_star (interpolation).
inline StochasticObjective interp_least_squares_make(std::size_t n_samples, std::size_t dim,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  const ShapeSpec shapes{{dim, 1}};
  auto x_star = std::make_shared<ParamSet>(ParamSet::random_normal(shapes, rng));
  auto rows = std::make_shared<std::vector<std::vector<double>>>();
  auto rhs = std::make_shared<std::vector<double>>();
  rows->reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::vector<double> a(dim);
    double b = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      a[j] = rng.normal();
      b += a[j] * x_star->layer(0)(j, 0);
    }
    rows->push_back(std::move(a));
    rhs->push_back(b);
  }

  auto residual = [rows, rhs](const ParamSet& x, std::size_t i) {
    double r = -(*rhs)[i];
    const auto& a = (*rows)[i];
    for (std::size_t j = 0; j < a.size(); ++j) r += a[j] * x.layer(0)(j, 0);
    return r;
  };

  StochasticObjective sobj;
  sobj.full.shapes = shapes;
  sobj.full.f_star = 0.0;
  sobj.full.x_star = *x_star;
  sobj.full.eval = [rows, residual](const ParamSet& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows->size(); ++i) {
      const double r = residual(x, i);
      s += 0.5 * r * r;
    }
    return s / static_cast<double>(rows->size());
  };
  sobj.full.grad = [rows, residual, shapes](const ParamSet& x) {
    ParamSet g = ParamSet::zeros(shapes);
    for (std::size_t i = 0; i < rows->size(); ++i) {
      const double r = residual(x, i);
      const auto& a = (*rows)[i];
      for (std::size_t j = 0; j < a.size(); ++j) g.layer(0)(j, 0) += r * a[j];
    }
    const double inv = 1.0 / static_cast<double>(rows->size());
    for (double& v : g.layer(0).data()) v *= inv;
    return g;
  };
  sobj.sample = [rows, residual, shapes](std::uint64_t s, std::uint64_t index) {
    Rng pick(s * 0x9E3779B97F4A7C15ULL + index + 1);
    const std::size_t i = static_cast<std::size_t>(pick.integer(rows->size()));
    Batch batch;
    batch.f_star = 0.0;
    batch.eval = [residual, i](const ParamSet& x) {
      const double r = residual(x, i);
      return 0.5 * r * r;
    };
    batch.grad = [rows, residual, shapes, i](const ParamSet& x) {
      ParamSet g = ParamSet::zeros(shapes);
      const double r = residual(x, i);
      const auto& a = (*rows)[i];
      for (std::size_t j = 0; j < a.size(); ++j) g.layer(0)(j, 0) = r * a[j];
      return g;
    };
    return batch;
  };
  return sobj;
}

/// Two-layer tanh student/teacher network with squared loss. The teacher is
/// realizable, so the global minimum is 0 at the teacher weights; this value
/// doubles as the scheduler's target loss. Layers: W1 (hidden x in),
/// W2 (1 x hidden); x0 is a random student initialization.
inline Objective mlp_make(std::size_t hidden, std::size_t n_data, std::uint64_t seed,
                          std::size_t input_dim = 8) {
  Rng rng(seed);
  const ShapeSpec shapes{{hidden, input_dim}, {1, hidden}};
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));

  ParamSet teacher(shapes);
  for (double& v : teacher.layer(0).data()) v = s1 * rng.normal();
  for (double& v : teacher.layer(1).data()) v = s2 * rng.normal();

  auto inputs = std::make_shared<Matrix>(input_dim, n_data);
  for (double& v : inputs->data()) v = rng.normal();

  auto forward = [](const ParamSet& w, const Matrix& u) {
    Matrix z = w.layer(0) * u;  // hidden x N
    for (double& v : z.data()) v = std::tanh(v);
    return std::make_pair(z, w.layer(1) * z);  // (activations, outputs 1 x N)
  };

  auto targets = std::make_shared<Matrix>(forward(teacher, *inputs).second);

  Objective obj;
  obj.shapes = shapes;
  obj.f_star = 0.0;
  obj.x_star = teacher;
  obj.eval = [inputs, targets, forward](const ParamSet& w) {
    Matrix out = forward(w, *inputs).second;
    double s = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double r = out[k] - (*targets)[k];
      s += r * r;
    }
    return 0.5 * s / static_cast<double>(out.cols());
  };
  obj.grad = [inputs, targets, forward, shapes](const ParamSet& w) {
    const auto [z, out] = forward(w, *inputs);
    const double inv = 1.0 / static_cast<double>(out.cols());
    Matrix r = out - *targets;                       // 1 x N
    Matrix g2 = inv * (r * z.transposed());          // 1 x hidden
    Matrix back = w.layer(1).transposed() * r;       // hidden x N
    for (std::size_t k = 0; k < back.size(); ++k) back[k] *= (1.0 - z[k] * z[k]);
    Matrix g1 = inv * (back * inputs->transposed());  // hidden x in
    return ParamSet(std::vector<Matrix>{std::move(g1), std::move(g2)});
  };

  ParamSet student(shapes);
  for (double& v : student.layer(0).data()) v = s1 * rng.normal();
  for (double& v : student.layer(1).data()) v = s2 * rng.normal();
  obj.x0 = std::move(student);
  return obj;
}

}  // namespace warmuplab
