#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "sgdlab/dynamics.hpp"
#include "sgdlab/objectives.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

struct FlowOptions {
  double h0 = 0.01;             // step ceiling
  double tol = 1e-12;           // error budget per unit time, floored at roundoff scale
  double curvature_guard = 0.1; // step <= guard / (local Hessian norm)
  double r_max = 1e10;          // finite-time escape guard
  double h_min = 1e-13;         // below this the step control gives up
};

// Finite-time escape or unrecoverable step collapse; carries the last valid
// state so callers can report where integration stopped.
struct FlowBlowup : std::runtime_error {
  FlowBlowup(const std::string& msg, Vec state, double time)
      : std::runtime_error(msg), last_state(std::move(state)), last_time(time) {}
  Vec last_state;
  double last_time;
};

// Time-t map of the objective's continuous-time field (negative gradient
// unless the catalog entry declares otherwise). Classical fourth-order
// Runge-Kutta; each step is checked against its two-half-steps refinement
// and halved until the estimated local error fits the budget.
class FlowMap {
 public:
  explicit FlowMap(const Objective& obj, FlowOptions opt = {})
      : obj_(&obj), opt_(opt) {}

  const Objective& objective() const { return *obj_; }
  const FlowOptions& options() const { return opt_; }

  // Signed time: negative t integrates the time-reversed field.
  Vec advance(const Vec& x, double t) const;

  // Orbit samples at spacing dt over [0, t], endpoints included; t >= 0.
  std::vector<std::pair<double, Vec>> orbit(const Vec& x, double t, double dt) const;

 private:
  const Objective* obj_;
  FlowOptions opt_;
};

// Forward flow map; requires t >= 0.
Vec integrate_flow(const FlowMap& fm, const Vec& x0, double t);

// Piecewise-affine interpolation through (time, point) knots. Constant left
// of the first knot; querying past the last knot throws std::out_of_range.
class InterpolatedPath {
 public:
  InterpolatedPath(std::vector<double> times, std::vector<Vec> points);

  // Requires a fully recorded trajectory (contiguous stored steps) so that
  // consecutive knots are consecutive iterates.
  static InterpolatedPath from_trajectory(const Trajectory& traj);

  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }

  // Exact at knots: at(times()[i]) returns the stored point untouched.
  Vec at(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Vec> points_;
};

struct AptDeviation {
  double value = 0.0;         // max over probes, an approximate sup from below
  double argmax_offset = 0.0; // offset h attaining the max
  double grid_step = 0.0;     // resolution of the uniform probe grid
  int n_probes = 0;
};

// Window deviation between the path and the flow, probed at n_probe uniform
// offsets in [0, T] plus every interpolation knot inside the window. Each
// probe point is pulled back along the flow to the window start, so the
// deviation at offset h is |A(t0) - Phi_{-h}(A(t0 + h))|.
AptDeviation apt_deviation(const InterpolatedPath& path, const FlowMap& fm, double t0,
                           double T, int n_probe = 33);

struct AptPoint {
  double t0 = 0.0;
  double deviation = 0.0;
};

std::vector<AptPoint> apt_profile(const InterpolatedPath& path, const FlowMap& fm,
                                  const std::vector<double>& t0_list, double T,
                                  int n_probe = 33);

struct LyapunovReport {
  double max_increase = 0.0;      // worst f(next) - f(prev) over node pairs, >0 is a violation
  double max_rate_residual = 0.0; // worst |df/dt + |grad f|^2| (gradient flows only)
  Vec terminal_point;
  double terminal_f = 0.0;
  double terminal_grad_norm = 0.0;
  double terminal_feature_distance = 0.0; // min over critical features; inf if none
};

// Integrates the orbit from x0 and checks descent node-to-node at spacing dt.
// The rate residual uses a trapezoid estimate of |grad f|^2, so its natural
// scale is O(dt^2) times the third derivative along the orbit.
LyapunovReport lyapunov_check(const FlowMap& fm, const Vec& x0, double t_max, double dt);

}  // namespace sgdlab
