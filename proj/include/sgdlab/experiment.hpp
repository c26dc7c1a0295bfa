#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/analysis.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/dynamics.hpp"
#include "sgdlab/flow.hpp"
#include "sgdlab/objectives.hpp"
#include "sgdlab/oracle.hpp"
#include "sgdlab/schedule.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

// rate:        ensemble distance curve + log-log rate fit near a minimizer
// avoidance:   saddle-convergence frequency from on-manifold starts
// apt:         window deviation between interpolated iterates and the flow
// boundedness: sup-norm distribution and divergence bookkeeping
// cooldown:    constant-step plateau vs decayed-step tail comparison
// chung:       scalar comparison recursion, no SGD involved
enum class ExperimentKind { rate, avoidance, apt, boundedness, cooldown, chung };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct X0Spec {
  enum class Mode { point, stable_manifold, ball };
  Mode mode = Mode::point;
  std::vector<double> point;   // mode point: explicit coordinates
  long feature = 0;            // mode stable_manifold: critical-set index
  double radius = 1.0;         // mode ball: uniform draw per run
  std::vector<double> center;  // mode ball: defaults to the origin
};

std::string to_string(X0Spec::Mode m);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::rate;

  std::string objective_name;
  ParamMap objective_params;
  std::string noise_name;
  ParamMap noise_params;
  StepSchedule schedule;
  X0Spec x0;

  long n_iters = 1000;
  long n_runs = 1;
  std::uint64_t base_seed = 0;
  std::string out_dir = "out";
  RecordPolicy record = RecordPolicy::thinned;
  ClassifyTolerances tolerances;

  double r_max = 1e8;
  long target_feature = -1;
  double u_radius = 1.0;
  double r_enter = 0.1;
  double r_escape = 1.0;

  // rate: fit window on the iterate index; 0 means n_iters/100 resp. n_iters
  double fit_n_lo = 0.0;
  double fit_n_hi = 0.0;

  // apt
  std::vector<double> apt_t0;  // window starts, strictly increasing
  double apt_window = 1.0;
  int apt_probes = 33;
  // Synthetic probe path x0 + t e_1 (remaining coordinates frozen) instead of
  // SGD iterates; isolates the deviation metric from sampling noise.
  bool apt_analytic = false;

  // cooldown: plateau window [lo, hi] on the iterate index; the tail value is
  // read at the final iterate. Defaults: [switch/2, switch-1].
  long plateau_lo = 0;
  long plateau_hi = 0;

  // chung
  double chung_P = 1.0, chung_R = 1.0, chung_p = 1.0, chung_r = 1.0;
  double chung_m = 0.0, chung_a0 = 1.0;
  long chung_n_max = 1000000;

  // Throws std::invalid_argument on missing/malformed/unknown keys.
  static ExperimentConfig from_config(const Config& raw);
  // Canonical form: defaults materialized, keys sorted, numbers in shortest
  // round-trip notation. from_config(to_config()) is the identity.
  Config to_config() const;
};

struct AvoidanceReport {
  long n_runs = 0;
  long n_entered = 0;  // runs whose target distance dropped below r_enter
  long n_converged_to_saddle = 0;
  double wilson_ci_upper = 1.0;  // on the saddle fraction over all runs
};

struct BoundednessReport {
  long n_runs = 0;
  long n_diverged = 0;
  double sup_norm_max = 0.0;
  double sup_norm_median = 0.0;
  bool bounded_sublevels_declared = false;
  // Divergence occurred and the objective declares unbounded sublevel sets:
  // the negative control failed for the declared reason.
  bool violation_flagged = false;
};

struct CooldownReport {
  double plateau = 0.0;  // ensemble mean-square target distance over the window
  double tail = 0.0;     // ensemble mean-square target distance at the last iterate
  double ratio = 0.0;    // tail / plateau
  long switch_iter = 0;
  long tail_step = 0;
};

struct AptReport {
  long n_runs = 0;
  long n_decreasing = 0;  // runs whose deviation profile strictly decreases in t0
  double window = 0.0;
  std::vector<AptPoint> mean_profile;  // deviation averaged over runs, per t0
};

struct ExperimentReport {
  ExperimentConfig cfg;
  bool schedule_admissible = false;
  double noise_q = 0.0;
  double noise_sigma = 0.0;

  std::vector<RunSummary> runs;  // run_index order; distance series stripped
  std::optional<EnsembleStats> stats;

  std::optional<RateFit> rate;
  std::optional<AvoidanceReport> avoidance;
  std::optional<AptReport> apt;
  std::optional<BoundednessReport> boundedness;
  std::optional<CooldownReport> cooldown;
  std::optional<ChungResult> chung;
};

// Runs the ensemble with per-run seeds derive_seed(base_seed, i). Results are
// merged in run_index order, so the report is bitwise independent of
// n_threads. Throws on unresolvable names, on dimension mismatches, and when
// a kind that needs convergent runs sees every run diverge.
ExperimentReport run_experiment(const ExperimentConfig& cfg, int n_threads = 1);

enum class ReportFormat { json, csv, human };

// json  -> summary.json + config.echo
// csv   -> curve.csv + runs.csv
// human -> report.txt (plain-text table)
// Returns the paths written. File contents are a pure function of the report.
// Throws std::runtime_error("no runs") when an ensemble kind has no runs.
std::vector<std::string> emit_report(const ExperimentReport& rep, ReportFormat fmt,
                                     const std::string& out_dir);

std::string report_human(const ExperimentReport& rep);

}  // namespace sgdlab
