#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "sgdlab/experiment.hpp"
#include "sgdlab/objectives.hpp"
#include "sgdlab/oracle.hpp"

namespace {

void warn_inadmissible(const sgdlab::ExperimentReport& rep) {
  if (rep.cfg.kind == sgdlab::ExperimentKind::chung) return;
  if (!rep.schedule_admissible)
    std::fprintf(stderr,
                 "warning: schedule is not admissible for the declared noise moment "
                 "(q = %s); running anyway\n",
                 sgdlab::format_double(rep.noise_q).c_str());
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            int threads) {
  sgdlab::ExperimentConfig cfg =
      sgdlab::ExperimentConfig::from_config(sgdlab::load_config_file(config_path));
  if (!out_override.empty()) cfg.out_dir = out_override;

  sgdlab::ExperimentReport report = sgdlab::run_experiment(cfg, threads);
  warn_inadmissible(report);

  emit_report(report, sgdlab::ReportFormat::json, cfg.out_dir);
  emit_report(report, sgdlab::ReportFormat::csv, cfg.out_dir);
  emit_report(report, sgdlab::ReportFormat::human, cfg.out_dir);

  std::fputs(sgdlab::report_human(report).c_str(), stdout);
  std::printf("wrote summary.json, curve.csv, runs.csv, report.txt, config.echo -> %s\n",
              cfg.out_dir.c_str());
  return 0;
}

int cmd_validate(const std::string& config_path) {
  sgdlab::ExperimentConfig cfg =
      sgdlab::ExperimentConfig::from_config(sgdlab::load_config_file(config_path));
  if (cfg.kind != sgdlab::ExperimentKind::chung) {
    sgdlab::Objective obj = sgdlab::make_objective(cfg.objective_name, cfg.objective_params);
    sgdlab::NoiseModel noise =
        sgdlab::make_noise(cfg.noise_name, obj.dim, cfg.noise_params);
    if (!sgdlab::admissible(cfg.schedule, noise.moment_order_q))
      std::fprintf(stderr,
                   "warning: schedule is not admissible for the declared noise moment "
                   "(q = %s)\n",
                   sgdlab::format_double(noise.moment_order_q).c_str());
    std::printf("ok: %s experiment, objective %s (dim %d), noise %s, %ld runs x %ld steps\n",
                sgdlab::to_string(cfg.kind).c_str(), obj.name.c_str(), obj.dim,
                noise.name.c_str(), cfg.n_runs, cfg.n_iters);
  } else {
    std::printf("ok: chung recursion, n_max %ld\n", cfg.chung_n_max);
  }
  return 0;
}

int cmd_catalog() {
  std::printf("objectives:\n");
  for (const auto& name : sgdlab::objective_catalog()) {
    sgdlab::Objective obj = sgdlab::make_objective(name);
    std::printf("  %-18s dim %d, %zu critical feature(s)\n", name.c_str(), obj.dim,
                obj.critical_set.size());
  }
  std::printf("noise models:\n");
  for (const auto& name : sgdlab::noise_catalog()) {
    sgdlab::NoiseModel m = sgdlab::make_noise(name, 2);
    std::printf("  %-18s q = %s, sigma = %s%s\n", name.c_str(),
                sgdlab::format_double(m.moment_order_q).c_str(),
                sgdlab::format_double(m.moment_bound_sigma).c_str(),
                m.excitation_c ? ", uniformly exciting" : "");
  }
  std::printf("schedules:\n");
  std::printf("  power_law          gamma / (n + m)^p\n");
  std::printf("  constant           gamma\n");
  std::printf("  cooldown           gamma, then gamma_post / (n - switch + 1)\n");
  std::printf("experiment kinds:\n");
  std::printf("  rate avoidance apt boundedness cooldown chung\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic approximation laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  int threads = 1;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "path to the experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_override, "output directory (overrides the config)");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "parse and resolve a config file");
  validate->add_option("config", validate_path, "path to the experiment config")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* catalog =
      app.add_subcommand("catalog", "list objectives, noise models, and schedules");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_override, threads);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (catalog->parsed()) return cmd_catalog();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
