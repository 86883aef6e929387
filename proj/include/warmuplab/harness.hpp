#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "warmuplab/config.hpp"
#include "warmuplab/diagnostics.hpp"
#include "warmuplab/optimizers.hpp"
#include "warmuplab/problems.hpp"
#include "warmuplab/schedulers.hpp"
#include "warmuplab/trace.hpp"

namespace warmuplab {

inline constexpr double kDivergenceThreshold = 1e6;

struct BuiltProblem {
  Objective obj;
  std::optional<StochasticObjective> sobj;
};

inline BuiltProblem build_problem(const ProblemConfig& p) {
  switch (p.kind) {
    case ProblemKind::Quadratic: {
      const ShapeSpec shapes{{p.dim, 1}};
      Rng rng(p.seed);
      return {quadratic_make(shapes, ParamSet::random_normal(shapes, rng)), std::nullopt};
    }
    case ProblemKind::Coshsum:
      return {coshsum_make(p.dim), std::nullopt};
    case ProblemKind::InterpLs: {
      StochasticObjective s = interp_least_squares_make(p.n_samples, p.dim, p.seed);
      Objective full = s.full;
      return {std::move(full), std::move(s)};
    }
    case ProblemKind::Mlp:
      return {mlp_make(p.hidden, p.n_data, p.seed, p.input_dim), std::nullopt};
  }
  throw ConfigError("unhandled problem kind");
}

/// Probe run for problems without known constants: normalized steepest
/// descent under `geom` at a small constant lr, recording the stability
/// ratio at every step, then a quadratic fit.
inline QuadraticFit fit_smoothness_constants(const Objective& obj, const GeometryKind& geom,
                                             const ParamSet& x0, long steps, double probe_lr) {
  std::vector<SmoothnessSample> samples;
  ParamSet x = x0;
  const double f_star = obj.f_star;
  for (long t = 0; t < steps; ++t) {
    const double delta = obj.eval(x) - f_star;
    const ParamSet g = obj.grad(x);
    if (g.is_zero()) break;
    ParamSet x_next = step_lmo(x, g, probe_lr, geom);
    samples.push_back({delta, smoothness_ratio(obj, x, x_next, geom)});
    x = std::move(x_next);
  }
  return fit_quadratic(samples);
}

namespace detail {

struct SchedulerDriver {
  const RunConfig& cfg;
  double f_star_eff;
  double D = 1.0;
  TheoreticalParams params{};
  double frozen_curvature = -1.0;
  std::optional<AdaptiveScheduler> adaptive;

  SchedulerDriver(const RunConfig& c, const BuiltProblem& prob, const ParamSet& x0,
                  const GeometryKind& geom, double kap)
      : cfg(c) {
    const auto& s = c.scheduler;
    f_star_eff = s.f_star_set ? s.f_star : prob.obj.f_star;

    params.rho = s.rho;
    params.K0 = s.K0;
    params.K1 = s.K1;
    params.Krho = s.Krho;
    params.lambda = c.optimizer.weight_decay;
    if (prob.obj.known_constants && s.K0 == 0.0 && s.K1 == 0.0 && s.Krho == 0.0) {
      const auto& kc = *prob.obj.known_constants;
      params.rho = kc.rho;
      params.K0 = kc.K0;
      params.K1 = kc.K1;
      params.Krho = kc.Krho;
    }
    if (s.kind == SchedulerKind::Thm2 && s.fit_constants) {
      QuadraticFit fit = fit_smoothness_constants(prob.obj, geom, x0, 200, 1e-2);
      params.rho = 2.0;
      params.K0 = std::max(fit.K0, 0.0);
      params.K1 = std::max(fit.K1, 0.0);
      params.Krho = std::max(fit.K2, 1e-12);
    }

    if (s.D > 0.0) {
      D = s.D;
    } else if (prob.obj.x_star) {
      D = primal_norm(add_scaled(x0, *prob.obj.x_star, -1.0), geom);
    }
    params.D = D;

    if (s.kind == SchedulerKind::Thm2) {
      const double x0n = primal_norm(x0, geom);
      const double xsn = prob.obj.x_star ? primal_norm(*prob.obj.x_star, geom) : 0.0;
      if (!lambda_admissible(params.lambda, x0n, xsn, params))
        throw ConfigError("thm2: weight decay exceeds the admissible bound");
    }
    if (s.kind == SchedulerKind::Adaptive) {
      AdaptiveConfig ac;
      ac.f_star = f_star_eff;
      ac.lr = s.lr;
      ac.div = s.div;
      ac.sigma_F2 = s.sigma_F2;
      ac.kappa = kap;
      ac.total_steps = s.total_steps;
      ac.n_candidates = s.n_candidates;
      ac.decay = s.decay;
      ac.loss_ema_beta = s.ema_beta;
      adaptive.emplace(ac);
    }
  }

  /// lr for this step. `loss` drives the adaptive path; `delta` is the
  /// (already per-batch, already clamped) gap the theoretical paths use.
  double lr(long step, double loss, double delta) {
    const auto& s = cfg.scheduler;
    switch (s.kind) {
      case SchedulerKind::Constant: return s.lr;
      case SchedulerKind::Manual:
        return manual_lr(step, s.warmup_steps, s.total_steps, s.lr, s.div, s.decay);
      case SchedulerKind::Adaptive: return adaptive->get_lr(loss);
      case SchedulerKind::Thm1: return eta_thm1(delta, params);
      case SchedulerKind::Thm1Frozen:
        if (frozen_curvature < 0.0) frozen_curvature = params.curvature(delta);
        return delta == 0.0 ? 0.0 : delta / (D * frozen_curvature);
      case SchedulerKind::Thm2: return eta_thm2(delta, params);
      case SchedulerKind::Thm3: return eta_thm3(delta, D, params);
    }
    throw ConfigError("unhandled scheduler kind");
  }

  std::string phase(long step, double delta) const {
    const auto& s = cfg.scheduler;
    switch (s.kind) {
      case SchedulerKind::Adaptive: return adaptive->in_decay() ? "decay" : "warmup";
      case SchedulerKind::Manual: return step < s.warmup_steps ? "warmup" : "decay";
      case SchedulerKind::Thm1:
      case SchedulerKind::Thm2:
        return delta >= transition_point(params.K0, params.Krho, params.rho) ? "warmup" : "decay";
      case SchedulerKind::Thm1Frozen: return "decay";
      default: return "warmup";
    }
  }
};

}  // namespace detail

inline RunTrace run_training(const RunConfig& cfg) {
  RunTrace trace;
  trace.config_hash = config_hash(cfg.raw);
  trace.seed = cfg.run.seed;

  BuiltProblem prob = build_problem(cfg.problem);
  const GeometryKind geom = cfg.optimizer.effective_geometry();
  geom.check_against(prob.obj.shapes);
  trace.kappa = kappa(prob.obj.shapes, geom);

  Rng init_rng(cfg.run.seed);
  ParamSet x = prob.obj.x0 ? *prob.obj.x0 : ParamSet::random_normal(prob.obj.shapes, init_rng);
  OptimizerState state = OptimizerState::init(prob.obj.shapes);

  detail::SchedulerDriver sched(cfg, prob, x, geom, trace.kappa);

  for (long t = 0; t < cfg.run.steps; ++t) {
    const double full_loss = prob.obj.eval(x);
    if (!std::isfinite(full_loss) || full_loss > kDivergenceThreshold) {
      trace.diverged = true;
      break;
    }

    double driving_loss = full_loss;
    ParamSet g = ParamSet::zeros(prob.obj.shapes);
    double delta_record = 0.0;
    if (prob.sobj && (cfg.scheduler.kind == SchedulerKind::Thm3 ||
                      cfg.scheduler.kind == SchedulerKind::Adaptive)) {
      auto [dxi, gxi] = batch_delta(*prob.sobj, x, cfg.run.seed, static_cast<std::uint64_t>(t));
      g = std::move(gxi);
      delta_record = dxi;
      driving_loss = dxi;  // per-batch loss; batch infima are 0 by construction
    } else if (prob.sobj) {
      auto [dxi, gxi] = batch_delta(*prob.sobj, x, cfg.run.seed, static_cast<std::uint64_t>(t));
      g = std::move(gxi);
      delta_record = std::max(0.0, full_loss - sched.f_star_eff);
    } else {
      g = prob.obj.grad(x);
      delta_record = std::max(0.0, full_loss - sched.f_star_eff);
    }

    TraceRow row;
    row.step = t;
    row.loss = full_loss;
    row.delta = delta_record;
    row.dual_grad_norm = dual_norm(g, geom);
    if (prob.obj.x_star)
      row.dist_to_opt = frobenius_norm(add_scaled(x, *prob.obj.x_star, -1.0));

    try {
      row.lr = sched.lr(t, driving_loss, delta_record);
      row.phase = sched.phase(t, delta_record);
      auto [next, st] = optimizer_step(cfg.optimizer, std::move(state), x, g, row.lr);
      x = std::move(next);
      state = std::move(st);
    } catch (const std::exception& e) {
      trace.error = e.what();
      trace.error_step = t;
      trace.rows.push_back(std::move(row));
      break;
    }
    trace.rows.push_back(std::move(row));
  }

  trace.final_loss = trace.error.empty() ? prob.obj.eval(x)
                                         : std::numeric_limits<double>::infinity();
  if (trace.diverged) trace.final_loss = std::numeric_limits<double>::infinity();
  if (sched.adaptive && sched.adaptive->initialized()) {
    trace.coefficients = sched.adaptive->coefficients();
    trace.warmup_steps = sched.adaptive->warmup_steps();
  }
  return trace;
}

/// Schedule preview without training: the configured scheduler is driven by a
/// synthetic suboptimality path that shrinks linearly from the problem's
/// initial gap to zero over run.steps. Step-indexed schedules (manual,
/// constant) ignore the path; delta-driven ones show their shape against it.
inline RunTrace preview_schedule(const RunConfig& cfg) {
  RunTrace trace;
  trace.config_hash = config_hash(cfg.raw);
  trace.seed = cfg.run.seed;

  BuiltProblem prob = build_problem(cfg.problem);
  const GeometryKind geom = cfg.optimizer.effective_geometry();
  trace.kappa = kappa(prob.obj.shapes, geom);

  Rng init_rng(cfg.run.seed);
  const ParamSet x0 =
      prob.obj.x0 ? *prob.obj.x0 : ParamSet::random_normal(prob.obj.shapes, init_rng);
  detail::SchedulerDriver sched(cfg, prob, x0, geom, trace.kappa);

  const double delta0 = std::max(0.0, prob.obj.eval(x0) - sched.f_star_eff);
  const long n = cfg.run.steps;
  for (long t = 0; t < n; ++t) {
    const double frac = n > 1 ? static_cast<double>(t) / static_cast<double>(n - 1) : 1.0;
    const double delta = delta0 * (1.0 - frac);
    TraceRow row;
    row.step = t;
    row.delta = delta;
    row.lr = sched.lr(t, delta + sched.f_star_eff, delta);
    row.phase = sched.phase(t, delta);
    trace.rows.push_back(std::move(row));
  }
  if (sched.adaptive && sched.adaptive->initialized()) {
    trace.coefficients = sched.adaptive->coefficients();
    trace.warmup_steps = sched.adaptive->warmup_steps();
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Sweeps and ablations
// ---------------------------------------------------------------------------

struct SweepRow {
  std::string label;       // warm-up length or "adaptive"
  long warmup_steps = 0;   // configured (manual) or consumed (adaptive)
  double final_loss = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string error;
};

namespace detail {

inline unsigned sweep_thread_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WARMUPLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

template <typename Fn>
inline void run_parallel(std::size_t jobs, Fn&& fn) {
  const unsigned threads = sweep_thread_count(jobs);
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline SweepRow row_from_trace(std::string label, long warmup, const RunTrace& t) {
  SweepRow r;
  r.label = std::move(label);
  r.warmup_steps = t.warmup_steps >= 0 ? t.warmup_steps : warmup;
  r.diverged = t.diverged || !t.error.empty();
  r.error = t.error;
  r.final_loss = r.diverged ? std::numeric_limits<double>::infinity() : t.final_loss;
  return r;
}

}  // namespace detail

/// One manual run per warm-up length plus one adaptive run; failures are
/// recorded as diverged rows (loss = +inf) without aborting the sweep.
inline std::vector<SweepRow> run_sweep(const RunConfig& base,
                                       const std::vector<long>& warmup_lengths) {
  std::vector<SweepRow> rows(warmup_lengths.size() + 1);
  detail::run_parallel(rows.size(), [&](std::size_t i) {
    RunConfig cfg = base;
    std::string label;
    long warmup = 0;
    if (i < warmup_lengths.size()) {
      cfg.scheduler.kind = SchedulerKind::Manual;
      cfg.scheduler.warmup_steps = warmup_lengths[i];
      label = std::to_string(warmup_lengths[i]);
      warmup = warmup_lengths[i];
    } else {
      cfg.scheduler.kind = SchedulerKind::Adaptive;
      label = "adaptive";
    }
    try {
      rows[i] = detail::row_from_trace(label, warmup, run_training(cfg));
    } catch (const std::exception& e) {
      rows[i].label = label;
      rows[i].diverged = true;
      rows[i].error = e.what();
    }
  });
  return rows;
}

struct AblationRow {
  double f_star = 0.0;
  double final_loss = std::numeric_limits<double>::infinity();
  long warmup_steps = -1;
  std::string error;
};

/// One adaptive run per target-loss value. A value at or above the initial
/// loss records the scheduler error for that row instead of crashing.
inline std::vector<AblationRow> run_fstar_ablation(const RunConfig& base,
                                                   const std::vector<double>& fstar_values) {
  std::vector<AblationRow> rows(fstar_values.size());
  detail::run_parallel(rows.size(), [&](std::size_t i) {
    RunConfig cfg = base;
    cfg.scheduler.kind = SchedulerKind::Adaptive;
    cfg.scheduler.f_star = fstar_values[i];
    cfg.scheduler.f_star_set = true;
    rows[i].f_star = fstar_values[i];
    try {
      RunTrace t = run_training(cfg);
      rows[i].warmup_steps = t.warmup_steps;
      if (!t.error.empty()) {
        rows[i].error = t.error;
      } else if (t.diverged) {
        rows[i].error = "diverged";
      } else {
        rows[i].final_loss = t.final_loss;
      }
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Diagnostic runs
// ---------------------------------------------------------------------------

struct DiagnosticRecord {
  long step = 0;
  SmoothnessSample sample;
};

struct DiagnosticResult {
  std::vector<DiagnosticRecord> records;
  QuadraticFit fit;
  std::string geometry_name;
};

/// Training run that re-evaluates the gradient at x^{t+1} on the same batch
/// every recorded step and collects (delta, ratio) pairs, then fits the
/// quadratic curvature model.
inline DiagnosticResult run_diagnose(const RunConfig& cfg) {
  BuiltProblem prob = build_problem(cfg.problem);
  const GeometryKind geom = cfg.optimizer.effective_geometry();
  const double kap = kappa(prob.obj.shapes, geom);

  Rng init_rng(cfg.run.seed);
  ParamSet x = prob.obj.x0 ? *prob.obj.x0 : ParamSet::random_normal(prob.obj.shapes, init_rng);
  OptimizerState state = OptimizerState::init(prob.obj.shapes);
  detail::SchedulerDriver sched(cfg, prob, x, geom, kap);

  DiagnosticResult out;
  out.geometry_name = geom.layerwise ? std::string("layerwise") : to_string(geom.global);

  for (long t = 0; t < cfg.run.steps; ++t) {
    // the per-step objective: full for deterministic problems, this step's
    // batch for stochastic ones, so both gradients use the same data
    Objective step_obj = prob.obj;
    if (prob.sobj) {
      Batch b = prob.sobj->sample(cfg.run.seed, static_cast<std::uint64_t>(t));
      step_obj.eval = b.eval;
      step_obj.grad = b.grad;
      step_obj.f_star = b.f_star;
    }
    const double loss = step_obj.eval(x);
    if (!std::isfinite(loss) || loss > kDivergenceThreshold) break;
    const double delta = loss - (prob.sobj ? step_obj.f_star : sched.f_star_eff);
    const ParamSet g = step_obj.grad(x);
    if (g.is_zero()) break;

    const double lr = sched.lr(t, loss, std::max(0.0, delta));
    auto [next, st] = optimizer_step(cfg.optimizer, std::move(state), x, g, lr);
    state = std::move(st);

    if (t % cfg.run.eval_every == 0) {
      const ParamSet dx = add_scaled(next, x, -1.0);
      if (frobenius_norm(dx) > 0.0)
        out.records.push_back({t, {delta, smoothness_ratio(step_obj, x, next, geom)}});
    }
    x = std::move(next);
  }

  std::vector<SmoothnessSample> samples;
  samples.reserve(out.records.size());
  for (const auto& r : out.records) samples.push_back(r.sample);
  out.fit = fit_quadratic(samples);
  return out;
}

}  // namespace warmuplab
