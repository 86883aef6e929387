#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "warmuplab/errors.hpp"
#include "warmuplab/geometry.hpp"
#include "warmuplab/optimizers.hpp"
#include "warmuplab/schedulers.hpp"

namespace warmuplab {

enum class ProblemKind { Quadratic, Coshsum, InterpLs, Mlp };

enum class SchedulerKind { Adaptive, Manual, Thm1, Thm1Frozen, Thm2, Thm3, Constant };

struct ProblemConfig {
  ProblemKind kind = ProblemKind::Quadratic;
  std::size_t dim = 16;
  std::size_t hidden = 32;
  std::size_t n_data = 256;
  std::size_t n_samples = 10;
  std::size_t input_dim = 8;
  std::uint64_t seed = 1;
};

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::Constant;
  double f_star = 0.0;
  bool f_star_set = false;  // default: problem's own f_star
  double lr = 1e-3;
  double div = 100.0;
  double sigma_F2 = 1e3;
  long total_steps = 0;  // 0: same as run.steps
  long warmup_steps = 0;  // manual only
  int n_candidates = 1000;
  DecayKind decay = DecayKind::Cosine;
  double ema_beta = 0.0;
  // theoretical paths
  double rho = 2.0;
  double K0 = 0.0;
  double K1 = 0.0;
  double Krho = 0.0;
  double D = 0.0;  // 0: auto = ||x0 - x_star||
  bool fit_constants = false;  // thm2: fit K0,K1,K2 from a probe run
};

struct RunSection {
  long steps = 1;
  long eval_every = 1;
  std::uint64_t seed = 7;
  std::string batch_indexing = "sequential";  // batch index = step number
};

struct RunConfig {
  ProblemConfig problem;
  OptimizerConfig optimizer;
  SchedulerConfig scheduler;
  RunSection run;
  nlohmann::json raw;  // canonical document, hashed into the trace header
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                           const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in section '" + section + "'");
}

inline GeometryKind parse_geometry(const nlohmann::json& j) {
  if (j.is_string()) return GeometryKind{false, norm_kind_from_string(j.get<std::string>()), {}};
  if (j.is_array()) {
    std::vector<NormKind> kinds;
    for (const auto& e : j) kinds.push_back(norm_kind_from_string(e.get<std::string>()));
    return GeometryKind::layerwise_max(std::move(kinds));
  }
  throw ConfigError("optimizer.geometry must be a string or a list of strings");
}

}  // namespace detail

inline ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "quadratic") return ProblemKind::Quadratic;
  if (s == "coshsum") return ProblemKind::Coshsum;
  if (s == "interp_ls") return ProblemKind::InterpLs;
  if (s == "mlp") return ProblemKind::Mlp;
  throw ConfigError("unknown problem kind: " + s);
}

inline SchedulerKind scheduler_kind_from_string(const std::string& s) {
  if (s == "adaptive") return SchedulerKind::Adaptive;
  if (s == "manual") return SchedulerKind::Manual;
  if (s == "thm1") return SchedulerKind::Thm1;
  if (s == "thm1_frozen") return SchedulerKind::Thm1Frozen;
  if (s == "thm2") return SchedulerKind::Thm2;
  if (s == "thm3") return SchedulerKind::Thm3;
  if (s == "constant") return SchedulerKind::Constant;
  throw ConfigError("unknown scheduler kind: " + s);
}

inline RunConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown(j, {"problem", "optimizer", "scheduler", "run"}, "<root>");
  RunConfig cfg;
  cfg.raw = j;

  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    detail::reject_unknown(
        p, {"kind", "dim", "hidden", "n_data", "n_samples", "input_dim", "seed"}, "problem");
    if (p.contains("kind")) cfg.problem.kind = problem_kind_from_string(p.at("kind"));
    if (p.contains("dim")) cfg.problem.dim = p.at("dim").get<std::size_t>();
    if (p.contains("hidden")) cfg.problem.hidden = p.at("hidden").get<std::size_t>();
    if (p.contains("n_data")) cfg.problem.n_data = p.at("n_data").get<std::size_t>();
    if (p.contains("n_samples")) cfg.problem.n_samples = p.at("n_samples").get<std::size_t>();
    if (p.contains("input_dim")) cfg.problem.input_dim = p.at("input_dim").get<std::size_t>();
    if (p.contains("seed")) cfg.problem.seed = p.at("seed").get<std::uint64_t>();
  }

  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    detail::reject_unknown(
        o, {"kind", "beta1", "beta2", "weight_decay", "clip", "geometry", "ns_steps"},
        "optimizer");
    if (o.contains("kind")) cfg.optimizer.kind = optimizer_kind_from_string(o.at("kind"));
    if (o.contains("beta1")) cfg.optimizer.beta1 = o.at("beta1").get<double>();
    if (o.contains("beta2")) cfg.optimizer.beta2 = o.at("beta2").get<double>();
    if (o.contains("weight_decay")) cfg.optimizer.weight_decay = o.at("weight_decay").get<double>();
    if (o.contains("clip")) cfg.optimizer.clip = o.at("clip").get<double>();
    if (o.contains("geometry")) cfg.optimizer.geometry = detail::parse_geometry(o.at("geometry"));
    if (o.contains("ns_steps")) cfg.optimizer.lmo_options.ns_steps = o.at("ns_steps").get<int>();
  }

  if (j.contains("scheduler")) {
    const auto& s = j.at("scheduler");
    detail::reject_unknown(s,
                           {"kind", "f_star", "lr", "div", "sigma_F2", "total_steps",
                            "warmup_steps", "n_candidates", "decay", "ema_beta", "rho", "K0",
                            "K1", "Krho", "D", "fit_constants"},
                           "scheduler");
    if (s.contains("kind")) cfg.scheduler.kind = scheduler_kind_from_string(s.at("kind"));
    if (s.contains("f_star")) {
      cfg.scheduler.f_star = s.at("f_star").get<double>();
      cfg.scheduler.f_star_set = true;
    }
    if (s.contains("lr")) cfg.scheduler.lr = s.at("lr").get<double>();
    if (s.contains("div")) cfg.scheduler.div = s.at("div").get<double>();
    if (s.contains("sigma_F2")) cfg.scheduler.sigma_F2 = s.at("sigma_F2").get<double>();
    if (s.contains("total_steps")) cfg.scheduler.total_steps = s.at("total_steps").get<long>();
    if (s.contains("warmup_steps")) cfg.scheduler.warmup_steps = s.at("warmup_steps").get<long>();
    if (s.contains("n_candidates")) cfg.scheduler.n_candidates = s.at("n_candidates").get<int>();
    if (s.contains("decay")) {
      const std::string d = s.at("decay").get<std::string>();
      if (d == "cosine") cfg.scheduler.decay = DecayKind::Cosine;
      else if (d == "linear") cfg.scheduler.decay = DecayKind::Linear;
      else throw ConfigError("scheduler.decay must be 'cosine' or 'linear'");
    }
    if (s.contains("ema_beta")) cfg.scheduler.ema_beta = s.at("ema_beta").get<double>();
    if (s.contains("rho")) cfg.scheduler.rho = s.at("rho").get<double>();
    if (s.contains("K0")) cfg.scheduler.K0 = s.at("K0").get<double>();
    if (s.contains("K1")) cfg.scheduler.K1 = s.at("K1").get<double>();
    if (s.contains("Krho")) cfg.scheduler.Krho = s.at("Krho").get<double>();
    if (s.contains("D")) cfg.scheduler.D = s.at("D").get<double>();
    if (s.contains("fit_constants")) cfg.scheduler.fit_constants = s.at("fit_constants").get<bool>();
  }

  if (j.contains("run")) {
    const auto& r = j.at("run");
    detail::reject_unknown(r, {"steps", "eval_every", "seed", "batch_indexing"}, "run");
    if (r.contains("steps")) cfg.run.steps = r.at("steps").get<long>();
    if (r.contains("eval_every")) cfg.run.eval_every = r.at("eval_every").get<long>();
    if (r.contains("seed")) cfg.run.seed = r.at("seed").get<std::uint64_t>();
    if (r.contains("batch_indexing")) {
      cfg.run.batch_indexing = r.at("batch_indexing").get<std::string>();
      if (cfg.run.batch_indexing != "sequential")
        throw ConfigError("run.batch_indexing: only 'sequential' is supported");
    }
  }

  if (cfg.run.steps < 1) throw ConfigError("run.steps must be >= 1");
  if (cfg.scheduler.total_steps == 0) cfg.scheduler.total_steps = cfg.run.steps;
  if (cfg.scheduler.kind == SchedulerKind::Thm2 && cfg.optimizer.weight_decay <= 0.0)
    throw ConfigError("scheduler.kind = thm2 requires optimizer.weight_decay > 0");
  if (cfg.scheduler.kind == SchedulerKind::Thm3 && cfg.problem.kind != ProblemKind::InterpLs)
    throw ConfigError("scheduler.kind = thm3 requires a stochastic problem (interp_ls)");
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  return parse_config(nlohmann::json::parse(text));
}

/// FNV-1a over the canonical JSON dump; identifies the config in trace headers.
inline std::string config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace warmuplab
