#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "warmuplab/errors.hpp"

namespace warmuplab {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Theoretical schedules
// ---------------------------------------------------------------------------

/// Constants of the suboptimality-dependent smoothness model
/// K(delta) = K0 + K1*delta + Krho*delta^rho, plus the scale parameters
/// D (distance to optimum) and lambda (weight decay) used by the schedules.
struct TheoreticalParams {
  double rho = 2.0;
  double K0 = 0.0;
  double K1 = 0.0;
  double Krho = 0.0;
  double D = 1.0;
  double lambda = 0.0;

  double curvature(double delta) const {
    return K0 + K1 * delta + Krho * std::pow(delta, rho);
  }
};

namespace detail {
inline void require_nondegenerate(const TheoreticalParams& p) {
  if (p.K0 <= 0.0 && p.K1 <= 0.0 && p.Krho <= 0.0)
    throw InvalidCoefficients("all smoothness constants are zero");
}
}  // namespace detail

/// eta = delta / (D * (K0 + K1*delta + Krho*delta^rho)).
inline double eta_thm1(double delta, const TheoreticalParams& p) {
  detail::require_nondegenerate(p);
  if (delta == 0.0) return 0.0;
  return delta / (p.D * p.curvature(delta));
}

/// Suboptimality at which eta_thm1 peaks: (K0 / (Krho*(rho-1)))^(1/rho).
/// Krho = 0 means pure warm-up; returns +inf.
inline double transition_point(double K0, double Krho, double rho) {
  if (Krho == 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(K0 / (Krho * (rho - 1.0)), 1.0 / rho);
}

/// eta = lambda * delta / (8 * K(delta)); the weight-decay schedule.
inline double eta_thm2(double delta, const TheoreticalParams& p) {
  detail::require_nondegenerate(p);
  if (delta == 0.0) return 0.0;
  return p.lambda * delta / (8.0 * p.curvature(delta));
}

/// Largest admissible weight decay:
/// [8 * (rho * (K0/(rho-1))^((rho-1)/rho) * Krho^(1/rho) + K1)]^(1/2).
inline double lambda_max(const TheoreticalParams& p) {
  if (p.rho <= 1.0) throw InvalidCoefficients("lambda_max requires rho > 1");
  if (p.Krho <= 0.0 && p.K1 <= 0.0)
    throw InvalidCoefficients("lambda_max requires Krho > 0 or K1 > 0");
  const double peak = p.rho * std::pow(p.K0 / (p.rho - 1.0), (p.rho - 1.0) / p.rho) *
                          std::pow(p.Krho, 1.0 / p.rho) +
                      p.K1;
  return std::sqrt(8.0 * peak);
}

/// Admissibility of lambda for the weight-decay schedule:
/// lambda <= 1 / max(||x0||, ||x_star||, 1/lambda_max).
inline bool lambda_admissible(double lambda, double x0_norm, double xstar_norm,
                              const TheoreticalParams& p) {
  const double cap = 1.0 / std::max({x0_norm, xstar_norm, 1.0 / lambda_max(p)});
  return lambda > 0.0 && lambda <= cap;
}

/// Stochastic schedule: same formula as eta_thm1 with the per-batch gap.
inline double eta_thm3(double delta_xi, double D, const TheoreticalParams& p) {
  TheoreticalParams q = p;
  q.D = D;
  return eta_thm1(delta_xi, q);
}

/// (rho, L0, Lrho)-smoothness with 0 < rho < 2 implies the suboptimality
/// model with exponent rho/(2-rho), K0 = 2*L0, K1 = 0,
/// Krho = Lrho * (4*Lrho)^(rho/(2-rho)).
inline TheoreticalParams convert_smoothness_constants(double rho, double L0, double Lrho) {
  if (rho <= 0.0 || rho >= 2.0)
    throw InvalidCoefficients("constant conversion requires 0 < rho < 2");
  TheoreticalParams p;
  p.rho = rho / (2.0 - rho);
  p.K0 = 2.0 * L0;
  p.K1 = 0.0;
  p.Krho = Lrho * std::pow(4.0 * Lrho, rho / (2.0 - rho));
  return p;
}

// ---------------------------------------------------------------------------
// Practical rational schedule (rho fixed to 2)
// ---------------------------------------------------------------------------

/// Fully specifies eta(delta) = delta / (K0 + K1*delta + K2*delta^2)
/// on [0, delta0] with peak lr at delta_prime and floor lr/div at delta0.
struct CoefficientSet {
  double K0 = 0.0;
  double K1 = 0.0;
  double K2 = 0.0;
  double delta_prime = 0.0;
  double delta0 = 0.0;
  double lr = 0.0;
  double div = 1.0;
};

/// True iff K0 + K1*d + K2*d^2 > 0 for all d in (0, delta0].
inline bool denominator_positive(const CoefficientSet& c) {
  const double a = c.K2, b = c.K1, k = c.K0;
  if (k < 0.0) return false;
  auto q = [&](double d) { return k + b * d + a * d * d; };
  if (q(c.delta0) <= 0.0) return false;
  if (a == 0.0) {
    // linear: positive at delta0 and k >= 0; negative only possible if b < 0,
    // in which case q is decreasing and q(delta0) already bounds the interval
    if (k == 0.0 && b <= 0.0) return false;
    return true;
  }
  const double disc = b * b - 4.0 * a * k;
  if (a > 0.0) {
    if (disc < 0.0) return true;
    const double s = std::sqrt(disc);
    const double r_lo = (-b - s) / (2.0 * a);
    const double r_hi = (-b + s) / (2.0 * a);
    // invalid if the non-positive region [r_lo, r_hi] intersects (0, delta0]
    return !(r_hi > 0.0 && r_lo <= c.delta0);
  }
  // a < 0: positive region is between the roots; endpoints already checked,
  // and the parabola is concave so positivity at 0+ and delta0 suffices
  return k > 0.0 || b > 0.0;
}

/// delta / (K0 + K1*delta + K2*delta^2); 0 at delta = 0.
inline double eta_practical(double delta, const CoefficientSet& c) {
  if (delta == 0.0) return 0.0;
  const double denom = c.K0 + c.K1 * delta + c.K2 * delta * delta;
  if (denom <= 0.0) throw InvalidCoefficients("schedule denominator is non-positive");
  return delta / denom;
}

/// Closed-form coefficients from the three schedule constraints:
///   eta'(delta_prime) = 0, eta(delta_prime) = lr, eta(delta0) = lr/div.
inline CoefficientSet solve_coefficients(double lr, double div, double delta0,
                                         double delta_prime) {
  if (lr <= 0.0) throw InvalidCoefficients("lr must be positive");
  if (div < 1.0) throw InvalidCoefficients("div must be >= 1");
  if (delta0 <= 0.0) throw InvalidCoefficients("delta0 must be positive");
  if (!(delta_prime > 0.0 && delta_prime < delta0))
    throw InvalidCoefficients("delta_prime must lie in (0, delta0)");

  const double gap = delta0 - delta_prime;
  CoefficientSet c;
  c.K2 = delta0 * (div - 1.0) / (lr * gap * gap);
  c.K0 = c.K2 * delta_prime * delta_prime;
  c.K1 = (delta0 * delta0 - 2.0 * delta0 * delta_prime * div + delta_prime * delta_prime) /
         (lr * gap * gap);
  c.delta_prime = delta_prime;
  c.delta0 = delta0;
  c.lr = lr;
  c.div = div;
  if (!denominator_positive(c))
    throw InvalidCoefficients("schedule denominator non-positive on (0, delta0]");
  return c;
}

/// Reference warm-up + decay curve in delta: linear ramp lr/div -> lr on
/// [delta_prime, delta0], cosine arc lr*(1 - cos(pi*delta/delta_prime))/2 below.
inline double target_schedule(double delta, double lr, double div, double delta0,
                              double delta_prime) {
  if (delta >= delta_prime) {
    const double floor = lr / div;
    return floor + (lr - floor) * (delta0 - delta) / (delta0 - delta_prime);
  }
  return 0.5 * lr * (1.0 - std::cos(kPi * delta / delta_prime));
}

/// Gaussian-weighted squared mismatch between the rational schedule for this
/// candidate and the target curve; trapezoid rule on a fixed 2048-point grid.
/// Invalid candidates get +inf so the grid search skips them.
inline double matching_objective(double delta_prime_candidate, double lr, double div,
                                 double delta0, double kappa, double sigma_F2,
                                 int grid_points = 2048) {
  CoefficientSet c;
  try {
    c = solve_coefficients(lr, div, delta0, delta_prime_candidate);
  } catch (const InvalidCoefficients&) {
    return std::numeric_limits<double>::infinity();
  }
  const double w = kappa / sigma_F2;
  const double h = delta0 / static_cast<double>(grid_points - 1);
  double acc = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double d = h * static_cast<double>(i);
    const double diff = eta_practical(d, c) - target_schedule(d, lr, div, delta0,
                                                              delta_prime_candidate);
    const double g = std::exp(-(d - delta_prime_candidate) * (d - delta_prime_candidate) * w);
    const double term = g * diff * diff;
    acc += (i == 0 || i == grid_points - 1) ? 0.5 * term : term;
  }
  return acc * h;
}

/// Grid search over (0, delta0): n candidates at (k + 1/2) * delta0 / n,
/// minimizer of the matching objective, ties toward smaller delta_prime.
inline double select_delta_prime(double lr, double div, double delta0, double kappa,
                                 double sigma_F2, int n_candidates = 1000) {
  if (n_candidates < 1) throw SchedulerInitError("need at least one candidate");
  double best = std::numeric_limits<double>::infinity();
  double best_dp = -1.0;
  for (int k = 0; k < n_candidates; ++k) {
    const double dp = (static_cast<double>(k) + 0.5) * delta0 / static_cast<double>(n_candidates);
    const double obj = matching_objective(dp, lr, div, delta0, kappa, sigma_F2);
    if (obj < best) {
      best = obj;
      best_dp = dp;
    }
  }
  if (!(best < std::numeric_limits<double>::infinity()))
    throw SchedulerInitError("no valid delta_prime candidate");
  return best_dp;
}

// ---------------------------------------------------------------------------
// Step-indexed building blocks
// ---------------------------------------------------------------------------

/// 0.5 * lr_start * (1 + cos(pi * step / T_decay)); lr_start at 0, 0 at T_decay.
inline double cosine_decay(long step, long t_decay, double lr_start) {
  if (t_decay <= 0) return 0.0;
  const double frac = static_cast<double>(step) / static_cast<double>(t_decay);
  return 0.5 * lr_start * (1.0 + std::cos(kPi * frac));
}

inline double linear_decay(long step, long t_decay, double lr_start) {
  if (t_decay <= 0) return 0.0;
  return lr_start * (1.0 - static_cast<double>(step) / static_cast<double>(t_decay));
}

/// Ramp lr/div -> lr over warmup_steps; lr immediately when warmup_steps = 0.
inline double linear_warmup(long step, long warmup_steps, double lr, double div) {
  if (warmup_steps <= 0) return lr;
  const double floor = lr / div;
  const double frac =
      std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
  return floor + (lr - floor) * frac;
}

enum class DecayKind { Cosine, Linear };

inline double decay_value(DecayKind kind, long step, long t_decay, double lr_start) {
  return kind == DecayKind::Cosine ? cosine_decay(step, t_decay, lr_start)
                                   : linear_decay(step, t_decay, lr_start);
}

/// Manual baseline: linear warm-up for warmup_steps, then decay over the rest.
inline double manual_lr(long step, long warmup_steps, long total_steps, double lr, double div,
                        DecayKind decay = DecayKind::Cosine) {
  if (step < warmup_steps) return linear_warmup(step, warmup_steps, lr, div);
  return decay_value(decay, step - warmup_steps, total_steps - warmup_steps, lr);
}

// ---------------------------------------------------------------------------
// Adaptive warm-up scheduler
// ---------------------------------------------------------------------------

struct AdaptiveConfig {
  double f_star = 0.0;
  double lr = 1e-3;
  double div = 100.0;
  double sigma_F2 = 1e3;
  double kappa = 1.0;
  long total_steps = 0;
  int n_candidates = 1000;
  DecayKind decay = DecayKind::Cosine;
  double loss_ema_beta = 0.0;  // 0 disables smoothing of the loss signal
};

/// Loss-driven state machine: rational warm-up while delta >= delta_prime,
/// then a permanent switch to a step-indexed decay over the remaining budget.
class AdaptiveScheduler {
 public:
  explicit AdaptiveScheduler(AdaptiveConfig cfg) : cfg_(cfg) {}

  /// Preset coefficients skip the delta_prime search at the first call.
  AdaptiveScheduler(AdaptiveConfig cfg, CoefficientSet coeffs)
      : cfg_(cfg), coeffs_(coeffs), is_init_(true) {}

  double get_lr(double loss) {
    if (cfg_.loss_ema_beta > 0.0) {
      smoothed_ = has_ema_ ? cfg_.loss_ema_beta * smoothed_ + (1.0 - cfg_.loss_ema_beta) * loss
                           : loss;
      has_ema_ = true;
      loss = smoothed_;
    }
    double delta = loss - cfg_.f_star;
    if (delta < 0.0) delta = 0.0;  // misestimated f_star: route to decay

    if (!is_init_) {
      if (delta <= 0.0)
        throw SchedulerInitError("target loss is at or above the initial loss");
      const double dp = select_delta_prime(cfg_.lr, cfg_.div, delta, cfg_.kappa, cfg_.sigma_F2,
                                           cfg_.n_candidates);
      coeffs_ = solve_coefficients(cfg_.lr, cfg_.div, delta, dp);
      is_init_ = true;
    }

    if (delta >= coeffs_.delta_prime && !is_decay_) {
      ++warmup_steps_;
      return eta_practical(std::min(delta, coeffs_.delta0), coeffs_);
    }
    if (!is_decay_) {
      is_decay_ = true;  // permanent
      t_decay_ = cfg_.total_steps - warmup_steps_;
      decay_step_ = 0;
    }
    const long s = std::min(decay_step_++, t_decay_);
    return decay_value(cfg_.decay, s, t_decay_, cfg_.lr);
  }

  bool initialized() const { return is_init_; }
  bool in_decay() const { return is_decay_; }
  long warmup_steps() const { return warmup_steps_; }
  long decay_horizon() const { return t_decay_; }
  const CoefficientSet& coefficients() const {
    if (!is_init_) throw SchedulerInitError("scheduler not initialized yet");
    return coeffs_;
  }

 private:
  AdaptiveConfig cfg_;
  CoefficientSet coeffs_{};
  bool is_init_ = false;
  bool is_decay_ = false;
  bool has_ema_ = false;
  double smoothed_ = 0.0;
  long warmup_steps_ = 0;
  long decay_step_ = 0;
  long t_decay_ = 0;
};

}  // namespace warmuplab
