#pragma once

#include <cstdint>
#include <vector>

#include "sgdlab/objectives.hpp"
#include "sgdlab/oracle.hpp"
#include "sgdlab/schedule.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

enum class RecordPolicy { full, thinned, diagnostics_only };

// Thinning predicate: keep every step up to 1000, then every ceil(n/1000)-th,
// which stores O(log) density per decade.
inline bool is_stored_step(long n) {
  if (n <= 1000) return true;
  long stride = (n + 999) / 1000;
  return n % stride == 0;
}

struct SgdOptions {
  RecordPolicy record = RecordPolicy::thinned;
  double r_max = 1e8;      // divergence guard on |x_n|
  int target_feature = -1; // critical_set index; -1 picks the first minimizer
  double u_radius = 1.0;   // stay event: target distance <= u_radius at every step
  double r_enter = 0.1;    // entry radius for the escape-time clock
  double r_escape = 1.0;   // escape radius
  // Optional cache with gamma_table[n-1] == step_size(schedule, n); callers
  // running ensembles share one table to avoid recomputing powers per step.
  const std::vector<double>* gamma_table = nullptr;
};

// Iterates are indexed from 1 (x_1 is the initial point); step n uses
// gamma_n = step_size(schedule, n) and proper time tau_n = sum_{k<=n} gamma_k.
struct Trajectory {
  StepSchedule schedule;
  std::uint64_t seed = 0;
  long n_iters = 0;   // update steps requested
  long last_step = 0; // index of the last valid iterate (n_iters + 1 unless truncated)
  int target_feature = -1;

  std::vector<long> stored_steps; // ascending iterate indices; includes 1 and last_step
  std::vector<Vec> iterates;      // empty under diagnostics_only except first/last
  std::vector<double> proper_times;
  std::vector<Vec> signals;       // full record only: the V_n driving step n -> n+1
  std::vector<double> f_values;
  std::vector<double> grad_norms;
  std::vector<double> target_dist2; // squared target-feature distance at stored steps

  double sup_norm = 0.0;
  bool diverged = false;
  bool stayed_in_u = true;
  long first_enter = -1;  // first n with target distance < r_enter, -1 if never
  long first_escape = -1; // first later n with target distance > r_escape, -1 if never
};

// Deterministic given (seed, inputs). Divergence (non-finite values or
// |x| > r_max) truncates the trajectory and sets the flag instead of throwing.
Trajectory run_sgd(const Objective& obj, const NoiseModel& noise,
                   const StepSchedule& schedule, const Vec& x0, long n_iters,
                   std::uint64_t seed, const SgdOptions& options = {});

}  // namespace sgdlab
