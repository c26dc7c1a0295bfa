#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sgdlab/dynamics.hpp"
#include "sgdlab/flow.hpp"
#include "sgdlab/objectives.hpp"
#include "sgdlab/oracle.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

enum class LimitClass : int {
  converged_to_minimizer = 0,
  converged_to_saddle = 1,
  diverged = 2,
  undecided = 3
};

std::string to_string(LimitClass c);

struct ClassifyTolerances {
  double g_tol = 1e-4;     // gradient norm threshold for "converged"
  double d_tol_rel = 1e-2; // distance threshold, scaled by the feature's length scale
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  LimitClass limit_class = LimitClass::undecided;
  int feature_id = -1;         // matched (or nearest) critical feature
  double final_distance = 0.0; // to the nearest critical feature; inf when none
  double final_grad_norm = 0.0;
  long escape_time = -1; // -1 encodes "never escaped"
  bool entered = false;  // target distance dropped below r_enter at some step
  double sup_norm = 0.0;
  bool stayed_in_u = true;
  bool diverged = false;
  long last_step = 0;
  // (step, squared target-feature distance) at the stored steps.
  std::vector<std::pair<long, double>> distance_series;
};

// Pure function of the trajectory and tolerances. converged_to_* requires
// both the gradient test and proximity to a matching feature.
RunSummary classify_run(const Trajectory& traj, const Objective& obj,
                        const ClassifyTolerances& tol = {});

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

// 95% by default (z = Phi^{-1}(0.975)).
WilsonInterval wilson_interval(long successes, long trials, double z = 1.959963984540054);

struct CurvePoint {
  long n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  long count = 0;
};

struct EnsembleStats {
  long n_runs = 0;
  std::array<long, 4> class_counts{}; // indexed by LimitClass
  std::array<WilsonInterval, 4> class_ci{};
  long n_stayed = 0;
  WilsonInterval stay_ci{};
  long n_conditioned = 0;
  std::vector<CurvePoint> curve_conditioned; // runs with stayed_in_u and no divergence
  std::vector<CurvePoint> curve_all;
};

// Streaming mean/variance accumulation over a shared step grid, so ensembles
// never hold more than one distance series at a time. Feed runs in ascending
// run_index order to keep merged statistics reproducible.
class EnsembleAccumulator {
 public:
  void add(const RunSummary& run);
  EnsembleStats finalize() const;

 private:
  struct Grid {
    std::vector<long> steps;
    std::vector<double> sum, sumsq;
    std::vector<long> count;
    void add_series(const std::vector<std::pair<long, double>>& series);
    std::vector<CurvePoint> curve() const;
  };
  Grid all_, conditioned_;
  EnsembleStats partial_;
  std::uint64_t last_index_ = 0;
  bool any_ = false;
};

struct RateFit {
  double exponent = 0.0;    // least-squares slope of log mean vs log n
  double coefficient = 0.0; // exp(intercept): mean ~ coefficient * n^exponent
  double exponent_stderr = 0.0;
  long n_points = 0;
};

// Fits over grid points with n in [n_lo, n_hi] and positive mean. Needs at
// least three usable points.
RateFit fit_rate(const std::vector<CurvePoint>& curve, double n_lo, double n_hi);

struct StayProbability {
  long n_runs = 0;
  long n_stayed = 0;
  double fraction = 0.0;
  WilsonInterval ci{};
};

StayProbability stay_probability(const std::vector<RunSummary>& runs);

struct EscapeStats {
  long n_runs = 0;
  long n_entered = 0;
  long n_converged_to_saddle = 0;
  long n_escaped = 0;
  double saddle_fraction = 0.0; // among entered runs
  WilsonInterval saddle_ci{};
  // quantiles of escape time among runs that escaped; empty when none did
  std::array<long, 3> escape_quartiles{-1, -1, -1};
};

// Throws std::runtime_error when fewer than 30 runs entered the feature
// neighborhood: the fraction would be statistically meaningless.
EscapeStats escape_statistics(const std::vector<RunSummary>& runs);

// Comparison recursion a_{n+1} = (1 - P/(n+m)^p) a_n + R/(n+m)^{p+r} with the
// bracket clamped at zero while P/(n+m)^p > 1. Limits: a_n n^r -> R/P for
// p < 1, and -> R/(P - r) for p = 1 (which requires P > r).
struct ChungResult {
  long n_max = 0;
  double a_final = 0.0;
  double normalized = 0.0; // a_n * n^r at n_max
  double limit = 0.0;      // theoretical limit of the normalized sequence
  double cauchy_gap = 0.0; // |norm(n_max) - norm(n_max/2)| / max(norm(n_max), eps)
  std::vector<std::array<double, 3>> checkpoints; // (n, a_n, a_n n^r) at decades
};

ChungResult chung_oracle(double P, double R, double p, double r, double m, double a0,
                         long n_max);

// ---- Energy diagnostics around saddle features ----------------------------

struct EnergyOptions {
  double tau = 1.0; // quadrature horizon
  int n_quad = 256; // Simpson intervals, even
  FlowOptions flow;
};

// Lambda(x) = integral_0^tau of (unstable-manifold distance along the orbit
// through x), by composite Simpson quadrature. Requires the objective to
// declare unstable_distance; throws std::domain_error otherwise.
double energy_value(const Objective& obj, const Vec& x, const EnergyOptions& opt = {});

struct EnergyFlowGrowth {
  double beta_fit = 0.0; // slope of log Lambda(Phi_t x) vs t
  double beta_stderr = 0.0;
  // max over nodes of <grad Lambda, grad f> + beta_ref * Lambda; <= 0 up to
  // finite-difference error when the energy grows at rate beta_ref
  double max_grad_violation = 0.0;
  std::vector<std::pair<double, double>> lambda_along_flow; // (t, Lambda)
};

EnergyFlowGrowth energy_flow_growth(const Objective& obj, const Vec& x0, double t_max,
                                    int n_nodes, double beta_ref,
                                    const EnergyOptions& opt = {});

struct EnergyDriftCheck {
  double gamma = 0.0;
  double lambda_x = 0.0;
  double mean_delta = 0.0;  // E[Lambda(x - gamma V) - Lambda(x)]
  double first_order = 0.0; // beta * gamma * Lambda(x)
  double stderr_ = 0.0;
  bool holds = false; // mean_delta >= first_order - c2 gamma^2 - 2 stderr
};

EnergyDriftCheck energy_sgd_drift(const Objective& obj, const NoiseModel& noise,
                                  const Vec& x, double gamma, int n_samples,
                                  double beta, double c2, Rng& rng,
                                  const EnergyOptions& opt = {});

}  // namespace sgdlab
