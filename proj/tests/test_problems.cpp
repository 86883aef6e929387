#include <doctest.h>

#include <cmath>

#include "warmuplab/diagnostics.hpp"
#include "warmuplab/problems.hpp"
#include "warmuplab/rng.hpp"

using namespace warmuplab;

TEST_CASE("quadratic objective") {
  const ShapeSpec shapes{{3, 1}};
  Rng rng(2);
  const ParamSet xs = ParamSet::random_normal(shapes, rng);
  const Objective obj = quadratic_make(shapes, xs);

  CHECK(obj.eval(xs) == doctest::Approx(0.0));
  CHECK(obj.grad(xs).is_zero());
  CHECK(obj.known_constants->K0 == 1.0);

  const ParamSet x = ParamSet::random_normal(shapes, rng);
  const double d = frobenius_norm(add_scaled(x, xs, -1.0));
  CHECK(obj.eval(x) == doctest::Approx(0.5 * d * d).epsilon(1e-12));
  CHECK(grad_check(obj, x) <= 1e-6);
}

TEST_CASE("coshsum objective") {
  const Objective obj = coshsum_make(4);
  CHECK(obj.eval(ParamSet::zeros(obj.shapes)) == doctest::Approx(0.0));
  CHECK(obj.f_star == 0.0);

  ParamSet x = ParamSet::zeros(obj.shapes);
  x.layer(0)(0, 0) = 1.0;
  x.layer(0)(2, 0) = -2.0;
  CHECK(obj.eval(x) == doctest::Approx((std::cosh(1.0) - 1.0) + (std::cosh(2.0) - 1.0)));
  CHECK(obj.grad(x).layer(0)(0, 0) == doctest::Approx(std::sinh(1.0)));
  CHECK(obj.grad(x).layer(0)(2, 0) == doctest::Approx(-std::sinh(2.0)));
  CHECK(grad_check(obj, x) <= 1e-6);
}

TEST_CASE("interpolated least squares: every batch vanishes at the planted solution") {
  const StochasticObjective sobj = interp_least_squares_make(10, 20, 42);
  const ParamSet& xs = *sobj.full.x_star;
  CHECK(sobj.full.eval(xs) <= 1e-20);
  for (std::uint64_t i = 0; i < 30; ++i) {
    const Batch b = sobj.sample(7, i);
    CHECK(b.f_star == 0.0);
    CHECK(b.eval(xs) <= 1e-18);
    CHECK(frobenius_norm(b.grad(xs)) <= 1e-9);
  }

  // full objective gradient agrees with finite differences
  Rng rng(3);
  const ParamSet x = ParamSet::random_normal(sobj.full.shapes, rng);
  CHECK(grad_check(sobj.full, x) <= 1e-5);

  // batch sampling is deterministic in (seed, index)
  const Batch a1 = sobj.sample(11, 5);
  const Batch a2 = sobj.sample(11, 5);
  CHECK(a1.eval(x) == a2.eval(x));
  CHECK(frobenius_norm(add_scaled(a1.grad(x), a2.grad(x), -1.0)) == 0.0);

  // batch_delta returns the per-sample gap
  const auto [dxi, g] = batch_delta(sobj, x, 11, 5);
  CHECK(dxi == doctest::Approx(a1.eval(x)));
  CHECK(dxi >= 0.0);
}

TEST_CASE("mlp objective: realizable teacher, analytic gradients") {
  const Objective obj = mlp_make(6, 32, 9, 5);
  REQUIRE(obj.x0.has_value());
  REQUIRE(obj.x_star.has_value());
  CHECK(obj.shapes.layers[0] == std::pair<std::size_t, std::size_t>{6, 5});
  CHECK(obj.shapes.layers[1] == std::pair<std::size_t, std::size_t>{1, 6});

  CHECK(obj.eval(*obj.x_star) <= 1e-24);  // teacher attains the declared f_star = 0
  CHECK(obj.f_star == 0.0);
  CHECK(obj.eval(*obj.x0) > 0.0);

  CHECK(grad_check(obj, *obj.x0) <= 1e-5);

  // construction is deterministic in the seed
  const Objective again = mlp_make(6, 32, 9, 5);
  CHECK(again.eval(*obj.x0) == obj.eval(*obj.x0));
}
