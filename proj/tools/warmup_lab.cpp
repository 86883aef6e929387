// warmup-lab: config-driven runner for the LMO optimizers, loss-driven
// learning-rate schedules, sweeps, diagnostics, and the verification suite.

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "warmuplab/harness.hpp"
#include "warmuplab/verification.hpp"

namespace {

warmuplab::RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw warmuplab::ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return warmuplab::parse_config(j);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw warmuplab::ConfigError("cannot open output file: " + path);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& csv) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, long>)
      out.push_back(std::stol(item));
    else
      out.push_back(std::stod(item));
  }
  if (out.empty()) throw warmuplab::ConfigError("empty value list: '" + csv + "'");
  return out;
}

int cmd_schedule_preview(const std::string& config, const std::string& out_path) {
  const warmuplab::RunTrace t = warmuplab::preview_schedule(load_config(config));
  auto out = open_out(out_path);
  warmuplab::write_schedule_csv(out, t);
  return 0;
}

int cmd_train(const std::string& config, const std::string& out_path) {
  const warmuplab::RunTrace t = warmuplab::run_training(load_config(config));
  auto out = open_out(out_path);
  warmuplab::write_trace_csv(out, t);
  if (!t.error.empty()) {
    std::cerr << "run aborted at step " << t.error_step << ": " << t.error << "\n";
    return 1;
  }
  if (t.diverged) {
    std::cerr << "run diverged (loss exceeded " << warmuplab::kDivergenceThreshold << ")\n";
    return 1;
  }
  std::cout << "final_loss=" << warmuplab::format_double(t.final_loss) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& warmups,
              const std::string& out_path) {
  const auto rows = warmuplab::run_sweep(load_config(config), parse_list<long>(warmups));
  auto out = open_out(out_path);
  out << "label,warmup_steps,final_loss,diverged,error\n";
  for (const auto& r : rows)
    out << r.label << ',' << r.warmup_steps << ',' << warmuplab::format_double(r.final_loss)
        << ',' << (r.diverged ? 1 : 0) << ',' << r.error << "\n";
  return 0;
}

int cmd_ablate_fstar(const std::string& config, const std::string& values,
                     const std::string& out_path) {
  const auto rows =
      warmuplab::run_fstar_ablation(load_config(config), parse_list<double>(values));
  auto out = open_out(out_path);
  out << "f_star,final_loss,warmup_steps,error\n";
  for (const auto& r : rows)
    out << warmuplab::format_double(r.f_star) << ',' << warmuplab::format_double(r.final_loss)
        << ',' << r.warmup_steps << ',' << r.error << "\n";
  return 0;
}

int cmd_diagnose(const std::string& config, const std::string& out_path) {
  const warmuplab::DiagnosticResult res = warmuplab::run_diagnose(load_config(config));
  auto out = open_out(out_path);
  out << "step,delta,ratio,geometry\n";
  for (const auto& r : res.records)
    out << r.step << ',' << warmuplab::format_double(r.sample.delta) << ','
        << warmuplab::format_double(r.sample.ratio) << ',' << res.geometry_name << "\n";
  nlohmann::json fit{{"K0", res.fit.K0},
                     {"K1", res.fit.K1},
                     {"K2", res.fit.K2},
                     {"n_samples", res.fit.n_samples},
                     {"rms_residual", res.fit.rms_residual}};
  std::cout << fit.dump(2) << "\n";
  return 0;
}

int cmd_verify(const std::string& json_path) {
  const auto results = warmuplab::verification::run_all();
  bool all_pass = true;
  nlohmann::json report = nlohmann::json::array();
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name
              << "  [tolerance: " << r.tolerance << "; measured: " << r.measured << "]\n";
    report.push_back({{"name", r.name},
                      {"tolerance", r.tolerance},
                      {"measured", r.measured},
                      {"pass", r.pass}});
  }
  if (!json_path.empty()) {
    auto out = open_out(json_path);
    out << report.dump(2) << "\n";
  }
  std::cout << (all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LMO optimizers with loss-driven warm-up/decay schedules"};
  app.require_subcommand(1);

  std::string config, out_path, warmups, values, json_path;

  auto* schedule = app.add_subcommand("schedule", "schedule utilities");
  schedule->require_subcommand(1);
  auto* preview = schedule->add_subcommand("preview", "write the schedule as CSV");
  preview->add_option("--config", config, "JSON config")->required();
  preview->add_option("--out", out_path, "output CSV")->required();

  auto* train = app.add_subcommand("train", "run one training loop");
  train->add_option("--config", config, "JSON config")->required();
  train->add_option("--out", out_path, "output trace CSV")->required();

  auto* sweep = app.add_subcommand("sweep", "manual warm-up sweep plus one adaptive run");
  sweep->add_option("--config", config, "JSON config")->required();
  sweep->add_option("--warmups", warmups, "comma-separated warm-up lengths")->required();
  sweep->add_option("--out", out_path, "output CSV")->required();

  auto* ablate = app.add_subcommand("ablate-fstar", "adaptive runs over target-loss values");
  ablate->add_option("--config", config, "JSON config")->required();
  ablate->add_option("--values", values, "comma-separated target-loss values")->required();
  ablate->add_option("--out", out_path, "output CSV")->required();

  auto* diagnose = app.add_subcommand("diagnose", "record stability ratios and fit them");
  diagnose->add_option("--config", config, "JSON config")->required();
  diagnose->add_option("--out", out_path, "output CSV")->required();

  auto* verify = app.add_subcommand("verify", "run the built-in verification suite");
  verify->add_option("--json", json_path, "also write a JSON report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (preview->parsed()) return cmd_schedule_preview(config, out_path);
    if (train->parsed()) return cmd_train(config, out_path);
    if (sweep->parsed()) return cmd_sweep(config, warmups, out_path);
    if (ablate->parsed()) return cmd_ablate_fstar(config, values, out_path);
    if (diagnose->parsed()) return cmd_diagnose(config, out_path);
    if (verify->parsed()) return cmd_verify(json_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
