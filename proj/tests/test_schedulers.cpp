#include <doctest.h>

#include <cmath>
#include <limits>

#include "warmuplab/diagnostics.hpp"
#include "warmuplab/schedulers.hpp"

using namespace warmuplab;

TEST_CASE("theoretical schedule formulas") {
  TheoreticalParams p;
  p.rho = 2.0;
  p.K0 = 1.0;
  p.K1 = 2.0;
  p.Krho = 3.0;
  p.D = 4.0;

  // eta = delta / (D * (K0 + K1 d + K2 d^2)); d = 1 -> 1 / (4 * 6)
  CHECK(eta_thm1(1.0, p) == doctest::Approx(1.0 / 24.0).epsilon(1e-15));
  CHECK(eta_thm1(0.0, p) == 0.0);

  // transition point for the shape-criterion parameters
  CHECK(transition_point(1e-4, 1e3, 2.0) == doctest::Approx(3.16228e-4).epsilon(1e-5));
  CHECK(transition_point(1.0, 0.0, 2.0) == std::numeric_limits<double>::infinity());

  // weight-decay schedule: lambda * delta / (8 K(delta))
  p.lambda = 0.5;
  CHECK(eta_thm2(1.0, p) == doctest::Approx(0.5 / 48.0).epsilon(1e-15));

  // lambda_max at rho = 2: sqrt(8 * (2 sqrt(K0 K2) + K1))
  CHECK(lambda_max(p) ==
        doctest::Approx(std::sqrt(8.0 * (2.0 * std::sqrt(3.0) + 2.0))).epsilon(1e-12));

  // admissibility cap: 1 / max(x0, xstar, 1/lambda_max)
  CHECK(lambda_admissible(0.1, 2.0, 1.0, p));
  CHECK(!lambda_admissible(0.51, 2.0, 1.0, p));
  CHECK(!lambda_admissible(0.0, 2.0, 1.0, p));

  TheoreticalParams zero;
  CHECK_THROWS_AS(eta_thm1(1.0, zero), InvalidCoefficients);
}

TEST_CASE("smoothness constant conversion") {
  // rho = 1, L0 = 1, Lrho = 1 -> exponent 1, K0 = 2, Krho = 4
  TheoreticalParams a = convert_smoothness_constants(1.0, 1.0, 1.0);
  CHECK(a.rho == doctest::Approx(1.0));
  CHECK(a.K0 == doctest::Approx(2.0));
  CHECK(a.K1 == 0.0);
  CHECK(a.Krho == doctest::Approx(4.0));

  // rho = 4/3, Lrho = 1 -> exponent 2, Krho = 4^2 = 16
  TheoreticalParams b = convert_smoothness_constants(4.0 / 3.0, 1.0, 1.0);
  CHECK(b.rho == doctest::Approx(2.0));
  CHECK(b.K0 == doctest::Approx(2.0));
  CHECK(b.Krho == doctest::Approx(16.0).epsilon(1e-12));

  CHECK_THROWS_AS(convert_smoothness_constants(2.0, 1.0, 1.0), InvalidCoefficients);
  CHECK_THROWS_AS(convert_smoothness_constants(0.0, 1.0, 1.0), InvalidCoefficients);
}

TEST_CASE("closed-form coefficients: worked case") {
  const CoefficientSet c = solve_coefficients(1e-3, 100.0, 8.0, 2.0);
  CHECK(c.K0 == doctest::Approx(88000.0).epsilon(1e-12));
  CHECK(c.K1 == doctest::Approx(-87000.0).epsilon(1e-12));
  CHECK(c.K2 == doctest::Approx(22000.0).epsilon(1e-12));
  CHECK(eta_practical(2.0, c) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(eta_practical(8.0, c) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(verify_constraints(c).pass);

  // derivative sign: increasing below delta_prime, decreasing above
  CHECK(eta_practical(1.9, c) < eta_practical(2.0, c));
  CHECK(eta_practical(2.1, c) < eta_practical(2.0, c));
}

TEST_CASE("coefficient solver input validation") {
  CHECK_THROWS_AS(solve_coefficients(0.0, 100.0, 8.0, 2.0), InvalidCoefficients);
  CHECK_THROWS_AS(solve_coefficients(1e-3, 0.5, 8.0, 2.0), InvalidCoefficients);
  CHECK_THROWS_AS(solve_coefficients(1e-3, 100.0, -1.0, 2.0), InvalidCoefficients);
  CHECK_THROWS_AS(solve_coefficients(1e-3, 100.0, 8.0, 8.0), InvalidCoefficients);
  CHECK_THROWS_AS(solve_coefficients(1e-3, 100.0, 8.0, 0.0), InvalidCoefficients);
}

TEST_CASE("div = 1 degeneracy yields a constant schedule") {
  const CoefficientSet c = solve_coefficients(5e-3, 1.0, 3.0, 1.0);
  for (int i = 1; i <= 64; ++i) {
    const double d = 3.0 * i / 64.0;
    CHECK(std::abs(eta_practical(d, c) - 5e-3) <= 1e-12);
  }
}

TEST_CASE("target schedule endpoints and continuity") {
  const double lr = 1e-2, div = 50.0, d0 = 6.0, dp = 2.0;
  CHECK(target_schedule(d0, lr, div, d0, dp) == doctest::Approx(lr / div));
  CHECK(target_schedule(dp, lr, div, d0, dp) == doctest::Approx(lr));
  CHECK(target_schedule(0.0, lr, div, d0, dp) == doctest::Approx(0.0));
  // continuity across the junction
  CHECK(target_schedule(dp - 1e-9, lr, div, d0, dp) ==
        doctest::Approx(target_schedule(dp + 1e-9, lr, div, d0, dp)).epsilon(1e-6));
  // cosine midpoint: half of lr
  CHECK(target_schedule(dp / 2.0, lr, div, d0, dp) == doctest::Approx(0.5 * lr));
}

TEST_CASE("matching objective and candidate selection") {
  const double lr = 1e-3, div = 100.0, d0 = 8.0, kap = 10.0, s2 = 1e3;
  const double valid = matching_objective(2.0, lr, div, d0, kap, s2);
  CHECK(std::isfinite(valid));
  CHECK(valid >= 0.0);
  CHECK(matching_objective(2.0 * d0, lr, div, d0, kap, s2) ==
        std::numeric_limits<double>::infinity());

  const double dp = select_delta_prime(lr, div, d0, kap, s2, 1000);
  CHECK(dp > 0.0);
  CHECK(dp < d0);
  // local optimality against neighboring candidates
  const double step = d0 / 1000.0;
  CHECK(matching_objective(dp, lr, div, d0, kap, s2) <=
        matching_objective(dp - step, lr, div, d0, kap, s2));
  CHECK(matching_objective(dp, lr, div, d0, kap, s2) <=
        matching_objective(dp + step, lr, div, d0, kap, s2));

  // single candidate sits at the interval midpoint
  CHECK(select_delta_prime(lr, div, d0, kap, s2, 1) == doctest::Approx(d0 / 2.0));
  CHECK_THROWS_AS(select_delta_prime(lr, div, d0, kap, s2, 0), SchedulerInitError);
}

TEST_CASE("step-indexed decay and warm-up primitives") {
  CHECK(cosine_decay(0, 100, 1e-3) == doctest::Approx(1e-3));
  CHECK(cosine_decay(100, 100, 1e-3) == doctest::Approx(0.0));
  CHECK(cosine_decay(50, 100, 1e-3) == doctest::Approx(5e-4));
  CHECK(linear_decay(25, 100, 1.0) == doctest::Approx(0.75));
  CHECK(cosine_decay(3, 0, 1e-3) == 0.0);

  CHECK(linear_warmup(0, 10, 1.0, 100.0) == doctest::Approx(0.01));
  CHECK(linear_warmup(10, 10, 1.0, 100.0) == doctest::Approx(1.0));
  CHECK(linear_warmup(5, 0, 1.0, 100.0) == doctest::Approx(1.0));

  // manual: warm-up then cosine; warmup_steps = 0 reduces to pure cosine
  CHECK(manual_lr(0, 0, 100, 1e-3, 100.0) == doctest::Approx(cosine_decay(0, 100, 1e-3)));
  CHECK(manual_lr(40, 0, 100, 1e-3, 100.0) == doctest::Approx(cosine_decay(40, 100, 1e-3)));
  CHECK(manual_lr(5, 10, 100, 1e-3, 100.0) == doctest::Approx(linear_warmup(5, 10, 1e-3, 100.0)));
  CHECK(manual_lr(10, 10, 100, 1e-3, 100.0) == doctest::Approx(1e-3));
}

TEST_CASE("adaptive scheduler state machine") {
  const double lr = 1e-3, div = 100.0;
  const CoefficientSet coeffs = solve_coefficients(lr, div, 8.0, 2.0);
  AdaptiveConfig cfg;
  cfg.f_star = 3.2;
  cfg.lr = lr;
  cfg.div = div;
  cfg.total_steps = 10;
  AdaptiveScheduler s(cfg, coeffs);

  CHECK(s.get_lr(11.2) == doctest::Approx(lr / div).epsilon(1e-12));  // delta = delta0
  CHECK(s.warmup_steps() == 1);
  CHECK(!s.in_decay());

  // boundary delta = delta_prime stays in warm-up and returns the peak lr
  CHECK(s.get_lr(5.2) == doctest::Approx(lr).epsilon(1e-12));
  CHECK(s.warmup_steps() == 2);
  CHECK(!s.in_decay());

  // crossing below delta_prime: decay starts exactly at lr
  CHECK(s.get_lr(4.2) == doctest::Approx(lr).epsilon(1e-12));
  CHECK(s.in_decay());
  CHECK(s.decay_horizon() == 8);

  // latch is permanent even if the loss rises above delta_prime again
  CHECK(s.get_lr(20.0) == doctest::Approx(cosine_decay(1, 8, lr)).epsilon(1e-12));
  CHECK(s.in_decay());
  CHECK(s.warmup_steps() == 2);

  // a gap above delta0 during warm-up evaluates at delta0 (clamped)
  AdaptiveScheduler s2(cfg, coeffs);
  CHECK(s2.get_lr(3.2 + 100.0) == doctest::Approx(lr / div).epsilon(1e-12));
}

TEST_CASE("adaptive scheduler initialization from the first loss") {
  AdaptiveConfig cfg;
  cfg.f_star = 1.0;
  cfg.lr = 1e-3;
  cfg.div = 100.0;
  cfg.kappa = 4.0;
  cfg.total_steps = 100;
  AdaptiveScheduler s(cfg);
  CHECK(!s.initialized());
  CHECK_THROWS_AS(s.coefficients(), SchedulerInitError);

  const double first = s.get_lr(9.0);  // delta0 = 8
  CHECK(s.initialized());
  CHECK(s.coefficients().delta0 == doctest::Approx(8.0));
  CHECK(first == doctest::Approx(eta_practical(8.0, s.coefficients())).epsilon(1e-12));

  // loss below f_star on the first call is degenerate
  AdaptiveScheduler bad(cfg);
  CHECK_THROWS_AS(bad.get_lr(0.5), SchedulerInitError);
}

TEST_CASE("adaptive scheduler loss smoothing") {
  AdaptiveConfig cfg;
  cfg.f_star = 0.0;
  cfg.lr = 1e-3;
  cfg.div = 10.0;
  cfg.total_steps = 50;
  cfg.loss_ema_beta = 0.5;
  AdaptiveScheduler s(cfg, solve_coefficients(cfg.lr, cfg.div, 8.0, 2.0));
  s.get_lr(8.0);  // ema seeds at the raw loss
  // next loss 0: smoothed = 0.5*8 + 0.5*0 = 4 >= delta_prime, still in warm-up
  const double second = s.get_lr(0.0);
  CHECK(!s.in_decay());
  CHECK(s.warmup_steps() == 2);
  CHECK(second == doctest::Approx(eta_practical(4.0, s.coefficients())).epsilon(1e-12));
}
