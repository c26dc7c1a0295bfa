#include "sgdlab/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace sgdlab {

namespace {

int resolve_target(const Objective& obj, int requested) {
  if (requested >= 0) {
    if (requested >= static_cast<int>(obj.critical_set.size()))
      throw std::invalid_argument("target_feature index out of range");
    return requested;
  }
  for (std::size_t i = 0; i < obj.critical_set.size(); ++i)
    if (obj.critical_set[i].kind == FeatureKind::hurwicz_minimizer)
      return static_cast<int>(i);
  return obj.critical_set.empty() ? -1 : 0;
}

}  // namespace

Trajectory run_sgd(const Objective& obj, const NoiseModel& noise,
                   const StepSchedule& schedule, const Vec& x0, long n_iters,
                   std::uint64_t seed, const SgdOptions& options) {
  if (x0.size() != obj.dim)
    throw std::invalid_argument("initial point dimension mismatch");
  if (noise.dim != obj.dim)
    throw std::invalid_argument("noise dimension mismatch");
  if (n_iters < 0) throw std::invalid_argument("n_iters must be >= 0");
  if (!x0.allFinite()) throw std::invalid_argument("initial point must be finite");

  Trajectory traj;
  traj.schedule = schedule;
  traj.seed = seed;
  traj.n_iters = n_iters;
  traj.target_feature = resolve_target(obj, options.target_feature);

  const CriticalFeature* target =
      traj.target_feature >= 0 ? &obj.critical_set[traj.target_feature] : nullptr;

  Rng rng(seed);
  Vec x = x0;
  Vec g(obj.dim), xi(obj.dim), v(obj.dim);
  const long n_last = n_iters + 1;
  double tau = 0.0;
  bool entered = false;

  auto record = [&](long n, double tau_n, bool force_iterate) {
    traj.stored_steps.push_back(n);
    traj.proper_times.push_back(tau_n);
    if (options.record != RecordPolicy::diagnostics_only || force_iterate)
      traj.iterates.push_back(x);
    obj.grad_into(x, g);
    traj.f_values.push_back(obj.eval(x));
    traj.grad_norms.push_back(g.norm());
    if (target) {
      double dist = target->distance(x);
      traj.target_dist2.push_back(dist * dist);
    }
  };

  const std::vector<double>* table = options.gamma_table;
  if (table && static_cast<long>(table->size()) < n_last)
    throw std::invalid_argument("gamma_table shorter than the run");

  for (long n = 1; n <= n_last; ++n) {
    double norm = x.norm();
    traj.sup_norm = std::max(traj.sup_norm, norm);
    if (target) {
      double dist = target->distance(x);
      if (dist > options.u_radius) traj.stayed_in_u = false;
      if (!entered && dist < options.r_enter) {
        entered = true;
        traj.first_enter = n;
      } else if (entered && traj.first_escape < 0 && dist > options.r_escape) {
        traj.first_escape = n;
      }
    }

    double gamma_n = table ? (*table)[n - 1] : step_size(schedule, n);
    tau += gamma_n;
    bool keep = options.record == RecordPolicy::full || is_stored_step(n) || n == n_last;
    if (keep) record(n, tau, /*force_iterate=*/n == 1 || n == n_last);
    traj.last_step = n;
    if (n == n_last) break;

    obj.grad_into(x, g);
    if (!g.allFinite()) {
      traj.diverged = true;
      if (!keep) record(n, tau, true);
      break;
    }
    noise.sample_into(x, rng, xi);
    v = g + xi;
    if (options.record == RecordPolicy::full) traj.signals.push_back(v);

    Vec x_next = x - gamma_n * v;
    if (!x_next.allFinite() || x_next.norm() > options.r_max) {
      traj.diverged = true;
      if (options.record == RecordPolicy::full) traj.signals.pop_back();
      if (!keep) record(n, tau, true);
      break;
    }
    x = x_next;
  }
  return traj;
}

}  // namespace sgdlab
