#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "warmuplab/schedulers.hpp"

namespace warmuplab {

/// Shortest round-trip decimal formatting ('.' decimal, full double precision).
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct TraceRow {
  long step = 0;
  double loss = 0.0;
  double delta = 0.0;
  double lr = 0.0;
  double dual_grad_norm = 0.0;
  std::optional<double> dist_to_opt;
  std::string phase;  // "warmup" | "decay"
};

/// Per-step record of a training run plus the header metadata the
/// diagnostics and acceptance checks consume.
struct RunTrace {
  std::vector<TraceRow> rows;
  std::string config_hash;
  std::uint64_t seed = 0;
  double kappa = 0.0;
  std::optional<CoefficientSet> coefficients;
  long warmup_steps = -1;  // adaptive runs only
  double final_loss = 0.0;
  bool diverged = false;
  std::string error;  // non-empty when the run aborted
  long error_step = -1;
};

inline void write_trace_csv(std::ostream& os, const RunTrace& t) {
  os << "# config_hash=" << t.config_hash << " seed=" << t.seed
     << " kappa=" << format_double(t.kappa) << "\n";
  if (t.coefficients) {
    const auto& c = *t.coefficients;
    os << "# K0=" << format_double(c.K0) << " K1=" << format_double(c.K1)
       << " K2=" << format_double(c.K2) << " delta_prime=" << format_double(c.delta_prime)
       << " delta0=" << format_double(c.delta0) << " lr=" << format_double(c.lr)
       << " div=" << format_double(c.div) << "\n";
  }
  if (t.warmup_steps >= 0) os << "# warmup_steps=" << t.warmup_steps << "\n";
  if (t.diverged) os << "# diverged=1\n";
  if (!t.error.empty()) os << "# error=" << t.error << " error_step=" << t.error_step << "\n";
  os << "step,loss,delta,lr,dual_grad_norm,dist_to_opt,phase\n";
  for (const auto& r : t.rows) {
    os << r.step << ',' << format_double(r.loss) << ',' << format_double(r.delta) << ','
       << format_double(r.lr) << ',' << format_double(r.dual_grad_norm) << ',';
    if (r.dist_to_opt) os << format_double(*r.dist_to_opt);
    os << ',' << r.phase << "\n";
  }
}

/// `schedule preview` contract: step, delta, lr, phase.
inline void write_schedule_csv(std::ostream& os, const RunTrace& t) {
  os << "step,delta,lr,phase\n";
  for (const auto& r : t.rows)
    os << r.step << ',' << format_double(r.delta) << ',' << format_double(r.lr) << ','
       << r.phase << "\n";
}

}  // namespace warmuplab
