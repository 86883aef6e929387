#include <doctest.h>

#include <cmath>

#include "warmuplab/diagnostics.hpp"
#include "warmuplab/problems.hpp"
#include "warmuplab/rng.hpp"

using namespace warmuplab;

TEST_CASE("smoothness ratio of the quadratic is exactly its curvature") {
  const ShapeSpec shapes{{5, 1}};
  Rng rng(3);
  const Objective obj = quadratic_make(shapes, ParamSet::random_normal(shapes, rng));
  const ParamSet a = ParamSet::random_normal(shapes, rng);
  const ParamSet b = ParamSet::random_normal(shapes, rng);
  CHECK(smoothness_ratio(obj, a, b, GeometryKind::euclidean()) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(smoothness_ratio(obj, a, a, GeometryKind::euclidean()), DegenerateInput);
}

TEST_CASE("quadratic fit recovers exact polynomials to machine precision") {
  std::vector<SmoothnessSample> samples;
  for (int i = 0; i < 40; ++i) {
    const double d = 0.05 + 0.2 * i;
    samples.push_back({d, 7.0 + 3.0 * d + 0.5 * d * d});
  }
  const QuadraticFit fit = fit_quadratic(samples);
  CHECK(fit.K0 == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(fit.K1 == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit.K2 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fit.rms_residual <= 1e-9);
  CHECK(fit.n_samples == 40);
  CHECK(fit.delta_min == doctest::Approx(0.05));
  CHECK(fit.delta_max == doctest::Approx(0.05 + 0.2 * 39));
}

TEST_CASE("quadratic fit input validation") {
  std::vector<SmoothnessSample> two = {{1.0, 2.0}, {2.0, 3.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(fit_quadratic(two), FitError);  // only 2 distinct deltas

  // wildly ill-conditioned design: deltas clustered at machine-epsilon spacing
  std::vector<SmoothnessSample> tight;
  for (int i = 0; i < 10; ++i) tight.push_back({1.0 + 1e-14 * i, 2.0});
  CHECK_THROWS_AS(fit_quadratic(tight), FitError);
}

TEST_CASE("fit recovery under one percent noise") {
  Rng rng(11);
  std::vector<SmoothnessSample> samples;
  for (int i = 0; i < 500; ++i) {
    // log-spaced deltas condition the small coefficients against the
    // magnitude-proportional noise of the large ones
    const double d = 0.01 * std::pow(100.0, i / 499.0);
    const double clean = 5.0 + 2.0 * d + 30.0 * d * d;
    samples.push_back({d, clean * (1.0 + 0.01 * rng.normal())});
  }
  const QuadraticFit fit = fit_quadratic(samples);
  CHECK(std::abs(fit.K0 - 5.0) / 5.0 <= 0.05);
  CHECK(std::abs(fit.K1 - 2.0) / 2.0 <= 0.05);
  CHECK(std::abs(fit.K2 - 30.0) / 30.0 <= 0.05);
}

TEST_CASE("constraint verification accepts solved coefficients and catches corruption") {
  const CoefficientSet good = solve_coefficients(2e-3, 50.0, 5.0, 1.5);
  CHECK(verify_constraints(good).pass);

  // mutation smoke test: flipping the sign of K1 must break the constraints
  CoefficientSet bad = good;
  bad.K1 = -bad.K1;
  CHECK(!verify_constraints(bad).pass);

  // perturbing K0 breaks the critical-point identity
  CoefficientSet off = good;
  off.K0 *= 1.001;
  CHECK(!verify_constraints(off).pass);
}

TEST_CASE("grad_check flags an incorrect gradient") {
  const ShapeSpec shapes{{3, 1}};
  Rng rng(1);
  Objective obj = quadratic_make(shapes, ParamSet::random_normal(shapes, rng));
  const ParamSet x = ParamSet::random_normal(shapes, rng);
  CHECK(grad_check(obj, x) <= 1e-6);

  Objective wrong = obj;
  wrong.grad = [g = obj.grad](const ParamSet& p) { return scale(g(p), 1.5); };
  CHECK(grad_check(wrong, x) > 1e-2);
}
