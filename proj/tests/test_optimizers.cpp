#include <doctest.h>

#include <cmath>

#include "warmuplab/optimizers.hpp"
#include "warmuplab/rng.hpp"

using namespace warmuplab;

namespace {
const ShapeSpec kShapes{{4, 3}, {2, 5}};
}

TEST_CASE("lmo step moves exactly eta in the step norm") {
  Rng rng(8);
  const ParamSet x = ParamSet::random_normal(kShapes, rng);
  const ParamSet g = ParamSet::random_normal(kShapes, rng);
  const double eta = 0.37;

  for (const auto& geom : {GeometryKind::euclidean(), GeometryKind::entrywise_max(),
                           GeometryKind::spectral()}) {
    const ParamSet next = step_lmo(x, g, eta, geom);
    const ParamSet dx = add_scaled(next, x, -1.0);
    CHECK(primal_norm(dx, geom) == doctest::Approx(eta).epsilon(1e-9));
    // descent direction: first-order decrease equals eta * dual norm
    CHECK(inner_product(g, dx) == doctest::Approx(-eta * dual_norm(g, geom)).epsilon(1e-9));
  }

  CHECK_THROWS_AS(step_lmo(x, g, -0.1, GeometryKind::euclidean()), InvalidStep);
  // eta = 0 is a no-op even for a zero gradient
  CHECK(frobenius_norm(add_scaled(step_lmo(x, ParamSet::zeros(kShapes), 0.0,
                                           GeometryKind::euclidean()),
                                  x, -1.0)) == 0.0);
}

TEST_CASE("normalized sgd reduces to the Euclidean lmo step") {
  Rng rng(4);
  const ParamSet x = ParamSet::random_normal(kShapes, rng);
  const ParamSet g = ParamSet::random_normal(kShapes, rng);
  const ParamSet a = step_normalized_sgd(x, g, 0.2);
  const ParamSet b = step_lmo(x, g, 0.2, GeometryKind::euclidean());
  CHECK(frobenius_norm(add_scaled(a, b, -1.0)) == 0.0);
  CHECK(frobenius_norm(add_scaled(a, x, -1.0)) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("weight-decay step shrinks then moves") {
  Rng rng(6);
  const ParamSet x = ParamSet::random_normal(kShapes, rng);
  const ParamSet g = ParamSet::random_normal(kShapes, rng);
  const double eta = 0.1, lambda = 2.0;

  const ParamSet next = step_lmo_wd(x, g, eta, lambda, GeometryKind::euclidean());
  const ParamSet manual =
      add_scaled(scale(x, 1.0 - lambda * eta), lmo(g, GeometryKind::euclidean()), eta);
  CHECK(frobenius_norm(add_scaled(next, manual, -1.0)) == 0.0);

  CHECK_THROWS_AS(step_lmo_wd(x, g, 0.6, 2.0, GeometryKind::euclidean()), InvalidStep);

  // iterate stays in the lambda-ball: ||x_next|| <= max(||x||, 1/lambda)
  for (int trial = 0; trial < 20; ++trial) {
    const ParamSet xt = ParamSet::random_normal(kShapes, rng, 2.0);
    const ParamSet gt = ParamSet::random_normal(kShapes, rng);
    const ParamSet nt = step_lmo_wd(xt, gt, 0.05, 1.5, GeometryKind::euclidean());
    CHECK(frobenius_norm(nt) <=
          std::max(frobenius_norm(xt), 1.0 / 1.5) * (1.0 + 1e-12) + 0.05);
  }
}

TEST_CASE("momentum and lion direction") {
  Rng rng(13);
  const ParamSet m = ParamSet::random_normal(kShapes, rng);
  const ParamSet g = ParamSet::random_normal(kShapes, rng);
  const ParamSet blend = momentum_update(m, g, 0.25);
  for (std::size_t l = 0; l < blend.layer_count(); ++l)
    for (std::size_t k = 0; k < blend.layer(l).size(); ++k)
      CHECK(blend.layer(l)[k] ==
            doctest::Approx(0.25 * m.layer(l)[k] + 0.75 * g.layer(l)[k]).epsilon(1e-15));

  const ParamSet dir = lion_direction(m, g, 0.25);
  for (std::size_t l = 0; l < dir.layer_count(); ++l)
    for (std::size_t k = 0; k < dir.layer(l).size(); ++k) {
      const double b = 0.25 * m.layer(l)[k] + 0.75 * g.layer(l)[k];
      CHECK(dir.layer(l)[k] == (b > 0.0 ? 1.0 : (b < 0.0 ? -1.0 : 0.0)));
    }

  CHECK_THROWS_AS(momentum_update(m, g, 1.0), InvalidStep);
  CHECK_THROWS_AS(momentum_update(m, g, -0.1), InvalidStep);
}

TEST_CASE("optimizer_step dispatch") {
  Rng rng(19);
  const ParamSet x = ParamSet::random_normal(kShapes, rng);
  const ParamSet g = ParamSet::random_normal(kShapes, rng);
  const double eta = 0.01;

  SUBCASE("normSGD with zero momentum equals a plain normalized step") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::NormSgd;
    auto [next, st] = optimizer_step(cfg, OptimizerState::init(kShapes), x, g, eta);
    const ParamSet ref = step_normalized_sgd(x, g, eta);
    CHECK(frobenius_norm(add_scaled(next, ref, -1.0)) <= 1e-15);
    CHECK(st.step_count == 1);
  }

  SUBCASE("signSGD direction is the sign of the gradient") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::SignSgd;
    auto [next, st] = optimizer_step(cfg, OptimizerState::init(kShapes), x, g, eta);
    const ParamSet dx = add_scaled(next, x, -1.0);
    for (std::size_t l = 0; l < dx.layer_count(); ++l)
      for (std::size_t k = 0; k < dx.layer(l).size(); ++k)
        CHECK(dx.layer(l)[k] == doctest::Approx(-eta * (g.layer(l)[k] > 0 ? 1.0 : -1.0)));
  }

  SUBCASE("Muon direction is layer-wise semi-orthogonal") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::Muon;
    auto [next, st] = optimizer_step(cfg, OptimizerState::init(kShapes), x, g, eta);
    const ParamSet dx = add_scaled(next, x, -1.0);
    for (std::size_t l = 0; l < dx.layer_count(); ++l) {
      const auto sv = singular_values(dx.layer(l));
      for (double s : sv) CHECK(s == doctest::Approx(eta).epsilon(1e-9));
    }
  }

  SUBCASE("Lion uses the beta1 blend for the step and beta2 for the memory") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::Lion;
    cfg.beta1 = 0.9;
    cfg.beta2 = 0.99;
    OptimizerState st0 = OptimizerState::init(kShapes);
    st0.momentum = ParamSet::random_normal(kShapes, rng);
    const ParamSet expected_dir = lion_direction(st0.momentum, g, cfg.beta1);
    const ParamSet expected_mom = momentum_update(st0.momentum, g, cfg.beta2);
    auto [next, st] = optimizer_step(cfg, st0, x, g, eta);
    const ParamSet dx = add_scaled(next, x, -1.0);
    CHECK(frobenius_norm(add_scaled(dx, scale(expected_dir, -eta), -1.0)) <= 1e-12);
    CHECK(frobenius_norm(add_scaled(st.momentum, expected_mom, -1.0)) <= 1e-12);
  }

  SUBCASE("zero gradient with zero momentum skips the update") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::NormSgd;
    auto [next, st] = optimizer_step(cfg, OptimizerState::init(kShapes), x,
                                     ParamSet::zeros(kShapes), eta);
    CHECK(frobenius_norm(add_scaled(next, x, -1.0)) == 0.0);
    CHECK(st.step_count == 1);
  }

  SUBCASE("clipping caps the gradient norm before momentum") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::NormSgd;
    cfg.clip = 0.5;
    auto [next, st] = optimizer_step(cfg, OptimizerState::init(kShapes), x, g, eta);
    CHECK(frobenius_norm(st.momentum) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("layerwise mixes geometries per layer") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::Layerwise;
    cfg.geometry = GeometryKind::layerwise_max({NormKind::Spectral, NormKind::EntrywiseMax});
    auto [next, st] = optimizer_step(cfg, OptimizerState::init(kShapes), x, g, eta);
    const ParamSet dx = add_scaled(next, x, -1.0);
    // layer 0: spectral (all singular values eta); layer 1: sign (entries +-eta)
    for (double s : singular_values(dx.layer(0))) CHECK(s == doctest::Approx(eta).epsilon(1e-9));
    for (double v : dx.layer(1).data()) CHECK(std::abs(v) == doctest::Approx(eta));
  }
}

TEST_CASE("optimizer kind strings") {
  for (OptimizerKind k : {OptimizerKind::NormSgd, OptimizerKind::SignSgd, OptimizerKind::Lion,
                          OptimizerKind::Muon, OptimizerKind::Layerwise})
    CHECK(optimizer_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(optimizer_kind_from_string("adam"), ConfigError);
}
