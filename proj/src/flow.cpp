#include "sgdlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgdlab {

namespace {

// One classical RK4 step of the signed field.
void rk4_step(const Objective& obj, double sgn, const Vec& x, double h, Vec& out,
              Vec& k1, Vec& k2, Vec& k3, Vec& k4, Vec& tmp) {
  obj.flow_field(x, k1);
  tmp = x + (sgn * h / 2.0) * k1;
  obj.flow_field(tmp, k2);
  tmp = x + (sgn * h / 2.0) * k2;
  obj.flow_field(tmp, k3);
  tmp = x + (sgn * h) * k3;
  obj.flow_field(tmp, k4);
  out = x + (sgn * h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Vec FlowMap::advance(const Vec& x0, double t) const {
  if (x0.size() != obj_->dim) throw std::invalid_argument("flow: dimension mismatch");
  if (!x0.allFinite()) throw std::invalid_argument("flow: non-finite initial point");
  if (t == 0.0) return x0;

  const double sgn = t > 0.0 ? 1.0 : -1.0;
  double remaining = std::abs(t);
  double done = 0.0;

  const int d = obj_->dim;
  Vec x = x0, full(d), mid(d), half(d);
  Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
  Mat H(d, d);

  // Below this leftover the two-half-steps error estimate is pure roundoff
  // and the acceptance test can never pass; one plain RK4 step closes the leg
  // with truncation error far below tol.
  const double tail =
      std::max(opt_.h_min, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(t));

  double h = opt_.h0;
  while (remaining > 0.0) {
    if (remaining <= tail) {
      rk4_step(*obj_, sgn, x, remaining, full, k1, k2, k3, k4, tmp);
      if (!full.allFinite())
        throw FlowBlowup("flow produced a non-finite state", x, sgn * done);
      x = full;
      done += remaining;
      break;
    }
    // Curvature cap: the Hessian norm bounds the field's stiffness for
    // gradient flows and is a usable heuristic otherwise.
    obj_->hess_into(x, H);
    double L = H.cwiseAbs().rowwise().sum().maxCoeff();
    double cap = std::min(opt_.h0, opt_.curvature_guard / std::max(L, 1e-12));
    h = std::min({h, cap, remaining});

    rk4_step(*obj_, sgn, x, h, full, k1, k2, k3, k4, tmp);
    rk4_step(*obj_, sgn, x, h / 2.0, mid, k1, k2, k3, k4, tmp);
    rk4_step(*obj_, sgn, mid, h / 2.0, half, k1, k2, k3, k4, tmp);

    bool finite = full.allFinite() && half.allFinite();
    double err = finite ? (full - half).norm() / 15.0
                        : std::numeric_limits<double>::infinity();
    // The difference of the two refinements cannot resolve below roundoff at
    // the state's scale; without this floor stiff legs whose tol * h budget
    // sinks under machine epsilon would halve h forever.
    double budget = std::max(opt_.tol * h, 32.0 * std::numeric_limits<double>::epsilon() *
                                               (1.0 + x.norm()));
    if (err <= budget) {
      x = half;
      done += h;
      remaining -= h;
      if (x.norm() > opt_.r_max)
        throw FlowBlowup("flow escaped the finite-radius guard", x, sgn * done);
      if (err < budget / 64.0) h *= 2.0;
    } else {
      h /= 2.0;
      if (h < opt_.h_min)
        throw FlowBlowup("flow step collapsed below h_min", x, sgn * done);
    }
  }
  return x;
}

std::vector<std::pair<double, Vec>> FlowMap::orbit(const Vec& x, double t,
                                                   double dt) const {
  if (t < 0.0) throw std::invalid_argument("orbit: t must be >= 0");
  if (dt <= 0.0) throw std::invalid_argument("orbit: dt must be > 0");
  std::vector<std::pair<double, Vec>> nodes;
  nodes.emplace_back(0.0, x);
  Vec state = x;
  double now = 0.0;
  while (now < t) {
    double leg = std::min(dt, t - now);
    state = advance(state, leg);
    now += leg;
    nodes.emplace_back(now, state);
  }
  return nodes;
}

Vec integrate_flow(const FlowMap& fm, const Vec& x0, double t) {
  if (t < 0.0) throw std::invalid_argument("integrate_flow: t must be >= 0");
  return fm.advance(x0, t);
}

InterpolatedPath::InterpolatedPath(std::vector<double> times, std::vector<Vec> points)
    : times_(std::move(times)), points_(std::move(points)) {
  if (times_.empty() || times_.size() != points_.size())
    throw std::invalid_argument("path: times and points must be nonempty and aligned");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw std::invalid_argument("path: times must be strictly increasing");
}

InterpolatedPath InterpolatedPath::from_trajectory(const Trajectory& traj) {
  if (traj.iterates.size() != traj.stored_steps.size())
    throw std::invalid_argument("path requires a fully recorded trajectory");
  for (std::size_t i = 1; i < traj.stored_steps.size(); ++i)
    if (traj.stored_steps[i] != traj.stored_steps[i - 1] + 1)
      throw std::invalid_argument("path requires consecutive stored steps");
  return InterpolatedPath(traj.proper_times, traj.iterates);
}

Vec InterpolatedPath::at(double t) const {
  if (t <= times_.front()) return points_.front();
  double slack = 1e-9 * std::max(1.0, std::abs(times_.back()));
  if (t > times_.back()) {
    if (t <= times_.back() + slack) return points_.back();
    throw std::out_of_range("path queried beyond its final knot");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
  if (times_[i] == t) return points_[i];
  double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return points_[i] + w * (points_[i + 1] - points_[i]);
}

AptDeviation apt_deviation(const InterpolatedPath& path, const FlowMap& fm, double t0,
                           double T, int n_probe) {
  if (n_probe < 16) throw std::invalid_argument("apt_deviation: n_probe must be >= 16");
  if (!(T > 0.0)) throw std::invalid_argument("apt_deviation: window must be positive");
  double slack = 1e-9 * std::max(1.0, std::abs(path.t_end()));
  if (t0 < 0.0 || t0 + T > path.t_end() + slack)
    throw std::out_of_range("apt_deviation: window exceeds the path domain");

  std::vector<double> offsets;
  offsets.reserve(n_probe + 16);
  for (int i = 0; i < n_probe; ++i)
    offsets.push_back(T * static_cast<double>(i) / (n_probe - 1));
  for (double knot : path.times())
    if (knot > t0 && knot < t0 + T) offsets.push_back(knot - t0);
  std::sort(offsets.begin(), offsets.end());
  offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());

  Vec anchor = path.at(t0);
  AptDeviation result;
  result.grid_step = T / (n_probe - 1);
  result.n_probes = static_cast<int>(offsets.size());
  for (double h : offsets) {
    Vec pulled = h == 0.0 ? path.at(t0) : fm.advance(path.at(t0 + h), -h);
    double dev = (anchor - pulled).norm();
    if (dev > result.value) {
      result.value = dev;
      result.argmax_offset = h;
    }
  }
  return result;
}

std::vector<AptPoint> apt_profile(const InterpolatedPath& path, const FlowMap& fm,
                                  const std::vector<double>& t0_list, double T,
                                  int n_probe) {
  std::vector<AptPoint> profile;
  profile.reserve(t0_list.size());
  for (double t0 : t0_list)
    profile.push_back({t0, apt_deviation(path, fm, t0, T, n_probe).value});
  return profile;
}

LyapunovReport lyapunov_check(const FlowMap& fm, const Vec& x0, double t_max, double dt) {
  const Objective& obj = fm.objective();
  auto nodes = fm.orbit(x0, t_max, dt);

  LyapunovReport rep;
  double f_prev = 0.0, g2_prev = 0.0, t_prev = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double f = obj.eval(nodes[i].second);
    double g2 = obj.grad(nodes[i].second).squaredNorm();
    if (i > 0) {
      rep.max_increase = std::max(rep.max_increase, f - f_prev);
      if (obj.gradient_flow) {
        double h = nodes[i].first - t_prev;
        double residual = std::abs((f - f_prev) / h + 0.5 * (g2 + g2_prev));
        rep.max_rate_residual = std::max(rep.max_rate_residual, residual);
      }
    }
    f_prev = f;
    g2_prev = g2;
    t_prev = nodes[i].first;
  }

  rep.terminal_point = nodes.back().second;
  rep.terminal_f = f_prev;
  rep.terminal_grad_norm = std::sqrt(g2_prev);
  rep.terminal_feature_distance = std::numeric_limits<double>::infinity();
  for (const auto& feat : obj.critical_set)
    rep.terminal_feature_distance =
        std::min(rep.terminal_feature_distance, feat.distance(rep.terminal_point));
  return rep;
}

}  // namespace sgdlab
