#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "warmuplab/errors.hpp"
#include "warmuplab/geometry.hpp"
#include "warmuplab/matrix.hpp"
#include "warmuplab/problems.hpp"
#include "warmuplab/schedulers.hpp"

namespace warmuplab {

/// One measurement of the empirical stability ratio at suboptimality delta.
struct SmoothnessSample {
  double delta = 0.0;
  double ratio = 0.0;
};

/// ||grad(x_t1) - grad(x_t)||_* / ||x_t1 - x_t|| under the given geometry.
/// For stochastic runs, pass gradient closures evaluated on the same batch.
inline double smoothness_ratio(const Objective& obj, const ParamSet& x_t, const ParamSet& x_t1,
                               const GeometryKind& geom) {
  const ParamSet dx = add_scaled(x_t1, x_t, -1.0);
  const double denom = primal_norm(dx, geom);
  if (denom == 0.0) throw DegenerateInput("smoothness_ratio: zero displacement");
  const ParamSet dg = add_scaled(obj.grad(x_t1), obj.grad(x_t), -1.0);
  return dual_norm(dg, geom) / denom;
}

struct QuadraticFit {
  double K0 = 0.0;
  double K1 = 0.0;
  double K2 = 0.0;
  double rms_residual = 0.0;
  std::size_t n_samples = 0;
  double delta_min = 0.0;
  double delta_max = 0.0;
};

/// Least squares of ratio ~ K0 + K1*delta + K2*delta^2 via column-scaled
/// normal equations. Requires >= 3 distinct deltas; rejects designs with
/// condition number above 1e12.
inline QuadraticFit fit_quadratic(const std::vector<SmoothnessSample>& samples) {
  std::set<double> distinct;
  for (const auto& s : samples) distinct.insert(s.delta);
  if (distinct.size() < 3) throw FitError("fit_quadratic: need >= 3 distinct deltas");

  Matrix design(samples.size(), 3);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = samples[i].delta;
    design(i, 2) = samples[i].delta * samples[i].delta;
  }
  std::array<double, 3> col_scale{};
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) s += design(i, j) * design(i, j);
    col_scale[j] = std::sqrt(s);
    if (col_scale[j] == 0.0) throw FitError("fit_quadratic: zero design column");
    for (std::size_t i = 0; i < samples.size(); ++i) design(i, j) /= col_scale[j];
  }

  const auto sv = singular_values(design);
  if (sv.back() == 0.0 || sv.front() / sv.back() > 1e12)
    throw FitError("fit_quadratic: design condition number exceeds 1e12");

  // normal equations on the scaled design
  Matrix ata(3, 3);
  std::array<double, 3> atb{};
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) ata(j, k) += design(i, j) * design(i, k);
      atb[j] += design(i, j) * samples[i].ratio;
    }

  // 3x3 Gaussian elimination with partial pivoting
  std::array<std::array<double, 4>, 3> aug{};
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 3; ++k) aug[j][k] = ata(j, k);
    aug[j][3] = atb[j];
  }
  for (std::size_t col = 0; col < 3; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < 3; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[piv][col])) piv = r;
    std::swap(aug[col], aug[piv]);
    if (aug[col][col] == 0.0) throw FitError("fit_quadratic: singular normal equations");
    for (std::size_t r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = aug[r][col] / aug[col][col];
      for (std::size_t k = col; k < 4; ++k) aug[r][k] -= f * aug[col][k];
    }
  }

  QuadraticFit fit;
  fit.K0 = aug[0][3] / aug[0][0] / col_scale[0];
  fit.K1 = aug[1][3] / aug[1][1] / col_scale[1];
  fit.K2 = aug[2][3] / aug[2][2] / col_scale[2];
  fit.n_samples = samples.size();
  fit.delta_min = *distinct.begin();
  fit.delta_max = *distinct.rbegin();
  double ss = 0.0;
  for (const auto& s : samples) {
    const double r = fit.K0 + fit.K1 * s.delta + fit.K2 * s.delta * s.delta - s.ratio;
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(samples.size()));
  return fit;
}

struct ConstraintReport {
  double residual_critical_point = 0.0;  // |K0 - K2*dp^2| / max(K0, K2*dp^2, 1)
  double residual_peak = 0.0;            // |eta(dp) - lr| / lr
  double residual_floor = 0.0;           // |eta(d0) - lr/div| * div / lr
  bool denominator_positive = true;
  bool pass = false;
  static constexpr double kTolerance = 1e-9;
};

/// Re-evaluates the three schedule constraints plus a 4096-point positivity scan.
inline ConstraintReport verify_constraints(const CoefficientSet& c) {
  ConstraintReport rep;
  const double a = c.K2 * c.delta_prime * c.delta_prime;
  rep.residual_critical_point = std::abs(c.K0 - a) / std::max({std::abs(c.K0), std::abs(a), 1.0});
  rep.denominator_positive = true;
  for (int i = 1; i <= 4096; ++i) {
    const double d = c.delta0 * static_cast<double>(i) / 4096.0;
    if (c.K0 + c.K1 * d + c.K2 * d * d <= 0.0) {
      rep.denominator_positive = false;
      break;
    }
  }
  if (rep.denominator_positive) {
    rep.residual_peak = std::abs(eta_practical(c.delta_prime, c) - c.lr) / c.lr;
    rep.residual_floor = std::abs(eta_practical(c.delta0, c) - c.lr / c.div) * c.div / c.lr;
  } else {
    rep.residual_peak = rep.residual_floor = std::numeric_limits<double>::infinity();
  }
  rep.pass = rep.denominator_positive &&
             rep.residual_critical_point <= ConstraintReport::kTolerance &&
             rep.residual_peak <= ConstraintReport::kTolerance &&
             rep.residual_floor <= ConstraintReport::kTolerance;
  return rep;
}

/// Max relative error between the analytic gradient and central differences
/// with h = 1e-5 * (1 + |x_i|) per coordinate.
inline double grad_check(const Objective& obj, const ParamSet& x) {
  const ParamSet g = obj.grad(x);
  double worst = 0.0;
  ParamSet probe = x;
  for (std::size_t l = 0; l < x.layer_count(); ++l) {
    for (std::size_t k = 0; k < x.layer(l).size(); ++k) {
      const double xi = x.layer(l)[k];
      const double h = 1e-5 * (1.0 + std::abs(xi));
      probe.layer(l)[k] = xi + h;
      const double fp = obj.eval(probe);
      probe.layer(l)[k] = xi - h;
      const double fm = obj.eval(probe);
      probe.layer(l)[k] = xi;
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::abs(fd - g.layer(l)[k]) / std::max(1.0, std::abs(g.layer(l)[k]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace warmuplab
