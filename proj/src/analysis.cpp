#include "sgdlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgdlab {

std::string to_string(LimitClass c) {
  switch (c) {
    case LimitClass::converged_to_minimizer: return "converged_to_minimizer";
    case LimitClass::converged_to_saddle: return "converged_to_saddle";
    case LimitClass::diverged: return "diverged";
    case LimitClass::undecided: return "undecided";
  }
  return "unknown";
}

RunSummary classify_run(const Trajectory& traj, const Objective& obj,
                        const ClassifyTolerances& tol) {
  if (traj.iterates.empty() || traj.grad_norms.empty())
    throw std::invalid_argument("classify_run: trajectory has no recorded iterate");

  RunSummary s;
  s.seed = traj.seed;
  s.sup_norm = traj.sup_norm;
  s.stayed_in_u = traj.stayed_in_u;
  s.diverged = traj.diverged;
  s.last_step = traj.last_step;
  s.entered = traj.first_enter >= 0;
  s.escape_time = traj.first_escape;
  s.final_grad_norm = traj.grad_norms.back();

  if (!traj.target_dist2.empty()) {
    s.distance_series.reserve(traj.target_dist2.size());
    for (std::size_t i = 0; i < traj.target_dist2.size(); ++i)
      s.distance_series.emplace_back(traj.stored_steps[i], traj.target_dist2[i]);
  }

  const Vec& x_final = traj.iterates.back();
  s.final_distance = std::numeric_limits<double>::infinity();
  int nearest = -1;
  for (std::size_t i = 0; i < obj.critical_set.size(); ++i) {
    double d = obj.critical_set[i].distance(x_final);
    if (d < s.final_distance) {
      s.final_distance = d;
      nearest = static_cast<int>(i);
    }
  }
  s.feature_id = nearest;

  if (traj.diverged) {
    s.limit_class = LimitClass::diverged;
    return s;
  }
  if (nearest >= 0 && s.final_grad_norm <= tol.g_tol) {
    const CriticalFeature& f = obj.critical_set[nearest];
    if (s.final_distance <= tol.d_tol_rel * f.scale) {
      s.limit_class = f.kind == FeatureKind::hurwicz_minimizer
                          ? LimitClass::converged_to_minimizer
                          : LimitClass::converged_to_saddle;
      return s;
    }
  }
  s.limit_class = LimitClass::undecided;
  return s;
}

WilsonInterval wilson_interval(long successes, long trials, double z) {
  if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be > 0");
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

void EnsembleAccumulator::Grid::add_series(
    const std::vector<std::pair<long, double>>& series) {
  if (steps.empty()) {
    steps.reserve(series.size());
    for (const auto& [n, v] : series) steps.push_back(n);
    sum.assign(series.size(), 0.0);
    sumsq.assign(series.size(), 0.0);
    count.assign(series.size(), 0);
  }
  // Thinning is deterministic, so series from equal-length runs share the
  // grid; truncated runs contribute a prefix.
  std::size_t k = std::min(series.size(), steps.size());
  for (std::size_t i = 0; i < k; ++i) {
    if (series[i].first != steps[i])
      throw std::invalid_argument("ensemble: distance series grids disagree");
    sum[i] += series[i].second;
    sumsq[i] += series[i].second * series[i].second;
    count[i] += 1;
  }
}

std::vector<CurvePoint> EnsembleAccumulator::Grid::curve() const {
  std::vector<CurvePoint> out;
  out.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (count[i] == 0) continue;
    CurvePoint p;
    p.n = steps[i];
    p.count = count[i];
    p.mean = sum[i] / count[i];
    if (count[i] > 1) {
      double var = std::max(0.0, sumsq[i] / count[i] - p.mean * p.mean);
      p.stderr_ = std::sqrt(var / (count[i] - 1));
    }
    out.push_back(p);
  }
  return out;
}

void EnsembleAccumulator::add(const RunSummary& run) {
  if (any_ && run.run_index <= last_index_)
    throw std::invalid_argument("ensemble: feed runs in ascending run_index order");
  any_ = true;
  last_index_ = run.run_index;

  partial_.n_runs += 1;
  partial_.class_counts[static_cast<int>(run.limit_class)] += 1;
  if (run.stayed_in_u) partial_.n_stayed += 1;

  all_.add_series(run.distance_series);
  if (run.stayed_in_u && !run.diverged) {
    partial_.n_conditioned += 1;
    conditioned_.add_series(run.distance_series);
  }
}

EnsembleStats EnsembleAccumulator::finalize() const {
  EnsembleStats s = partial_;
  if (s.n_runs == 0) throw std::runtime_error("no runs");
  for (int c = 0; c < 4; ++c) s.class_ci[c] = wilson_interval(s.class_counts[c], s.n_runs);
  s.stay_ci = wilson_interval(s.n_stayed, s.n_runs);
  s.curve_all = all_.curve();
  s.curve_conditioned = conditioned_.curve();
  return s;
}

RateFit fit_rate(const std::vector<CurvePoint>& curve, double n_lo, double n_hi) {
  std::vector<double> xs, ys;
  for (const auto& p : curve) {
    if (p.n < n_lo || p.n > n_hi || !(p.mean > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(p.n)));
    ys.push_back(std::log(p.mean));
  }
  if (xs.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 positive points in the window");

  const std::size_t k = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: degenerate abscissa");

  RateFit fit;
  fit.n_points = static_cast<long>(k);
  fit.exponent = sxy / sxx;
  double intercept = my - fit.exponent * mx;
  fit.coefficient = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double r = ys[i] - intercept - fit.exponent * xs[i];
    rss += r * r;
  }
  if (k > 2) fit.exponent_stderr = std::sqrt(rss / (k - 2) / sxx);
  return fit;
}

StayProbability stay_probability(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw std::runtime_error("no runs");
  StayProbability sp;
  sp.n_runs = static_cast<long>(runs.size());
  for (const auto& r : runs)
    if (r.stayed_in_u) sp.n_stayed += 1;
  sp.fraction = static_cast<double>(sp.n_stayed) / sp.n_runs;
  sp.ci = wilson_interval(sp.n_stayed, sp.n_runs);
  return sp;
}

EscapeStats escape_statistics(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw std::runtime_error("no runs");
  EscapeStats es;
  es.n_runs = static_cast<long>(runs.size());
  std::vector<long> escape_times;
  for (const auto& r : runs) {
    if (!r.entered) continue;
    es.n_entered += 1;
    if (r.limit_class == LimitClass::converged_to_saddle) es.n_converged_to_saddle += 1;
    if (r.escape_time >= 0) {
      es.n_escaped += 1;
      escape_times.push_back(r.escape_time);
    }
  }
  if (es.n_entered < 30)
    throw std::runtime_error("escape_statistics: fewer than 30 runs entered");
  es.saddle_fraction = static_cast<double>(es.n_converged_to_saddle) / es.n_entered;
  es.saddle_ci = wilson_interval(es.n_converged_to_saddle, es.n_entered);
  if (!escape_times.empty()) {
    std::sort(escape_times.begin(), escape_times.end());
    auto q = [&](double f) {
      std::size_t i = static_cast<std::size_t>(f * (escape_times.size() - 1));
      return escape_times[i];
    };
    es.escape_quartiles = {q(0.25), q(0.5), q(0.75)};
  }
  return es;
}

ChungResult chung_oracle(double P, double R, double p, double r, double m, double a0,
                         long n_max) {
  if (!(P > 0.0)) throw std::invalid_argument("chung_oracle: P must be > 0");
  if (!(R >= 0.0)) throw std::invalid_argument("chung_oracle: R must be >= 0");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("chung_oracle: p must be in (0, 1]");
  if (!(r > 0.0)) throw std::invalid_argument("chung_oracle: r must be > 0");
  if (p == 1.0 && !(P > r))
    throw std::invalid_argument("chung_oracle: p = 1 requires P > r");
  if (!(a0 >= 0.0)) throw std::invalid_argument("chung_oracle: a0 must be >= 0");
  if (n_max < 10) throw std::invalid_argument("chung_oracle: n_max must be >= 10");

  ChungResult res;
  res.n_max = n_max;
  res.limit = p < 1.0 ? R / P : R / (P - r);

  double a = a0;
  double a_half = a0;
  long half_n = n_max / 2;
  long next_checkpoint = 10;
  for (long n = 1; n <= n_max; ++n) {
    if (n == half_n) a_half = a;
    if (n == next_checkpoint) {
      res.checkpoints.push_back(
          {static_cast<double>(n), a, a * std::pow(static_cast<double>(n), r)});
      next_checkpoint *= 10;
    }
    double bracket = 1.0 - P / std::pow(static_cast<double>(n) + m, p);
    if (bracket < 0.0) bracket = 0.0;
    a = bracket * a + R / std::pow(static_cast<double>(n) + m, p + r);
  }
  res.a_final = a;
  res.normalized = a * std::pow(static_cast<double>(n_max), r);
  res.checkpoints.push_back({static_cast<double>(n_max), a, res.normalized});

  double norm_half = a_half * std::pow(static_cast<double>(half_n), r);
  res.cauchy_gap = std::abs(res.normalized - norm_half) /
                   std::max(std::abs(res.normalized), 1e-300);
  return res;
}

// ---- Energy diagnostics ----------------------------------------------------

double energy_value(const Objective& obj, const Vec& x, const EnergyOptions& opt) {
  if (!obj.unstable_distance)
    throw std::domain_error("energy_value: objective lacks center-stable manifold data");
  if (opt.n_quad < 2 || opt.n_quad % 2 != 0)
    throw std::invalid_argument("energy_value: n_quad must be even and >= 2");

  FlowMap fm(obj, opt.flow);
  const double h = opt.tau / opt.n_quad;
  Vec state = x;
  double acc = obj.unstable_distance(state); // weight 1 at t = 0
  for (int i = 1; i <= opt.n_quad; ++i) {
    state = fm.advance(state, h);
    double w = (i == opt.n_quad) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * obj.unstable_distance(state);
  }
  return acc * h / 3.0;
}

EnergyFlowGrowth energy_flow_growth(const Objective& obj, const Vec& x0, double t_max,
                                    int n_nodes, double beta_ref,
                                    const EnergyOptions& opt) {
  if (n_nodes < 3) throw std::invalid_argument("energy_flow_growth: need >= 3 nodes");
  FlowMap fm(obj, opt.flow);

  EnergyFlowGrowth out;
  std::vector<double> ts, logs;
  Vec state = x0;
  double dt = t_max / (n_nodes - 1);
  for (int j = 0; j < n_nodes; ++j) {
    if (j > 0) state = fm.advance(state, dt);
    double t = j * dt;
    double lam = energy_value(obj, state, opt);
    out.lambda_along_flow.emplace_back(t, lam);
    if (lam > 0.0) {
      ts.push_back(t);
      logs.push_back(std::log(lam));
    }

    // Finite-difference gradient of the energy at this node.
    double fd_h = 1e-5;
    Vec grad_lambda(obj.dim);
    for (int i = 0; i < obj.dim; ++i) {
      Vec xp = state, xm = state;
      xp[i] += fd_h;
      xm[i] -= fd_h;
      grad_lambda[i] =
          (energy_value(obj, xp, opt) - energy_value(obj, xm, opt)) / (2.0 * fd_h);
    }
    double viol = grad_lambda.dot(obj.grad(state)) + beta_ref * lam;
    out.max_grad_violation = std::max(out.max_grad_violation, viol);
  }

  if (ts.size() < 3)
    throw std::runtime_error("energy_flow_growth: energy vanished along the orbit");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mx += ts[i];
    my += logs[i];
  }
  mx /= ts.size();
  my /= ts.size();
  double sxx = 0.0, sxy = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxx += (ts[i] - mx) * (ts[i] - mx);
    sxy += (ts[i] - mx) * (logs[i] - my);
  }
  out.beta_fit = sxy / sxx;
  double intercept = my - out.beta_fit * mx;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double r = logs[i] - intercept - out.beta_fit * ts[i];
    rss += r * r;
  }
  if (ts.size() > 2) out.beta_stderr = std::sqrt(rss / (ts.size() - 2) / sxx);
  return out;
}

EnergyDriftCheck energy_sgd_drift(const Objective& obj, const NoiseModel& noise,
                                  const Vec& x, double gamma, int n_samples,
                                  double beta, double c2, Rng& rng,
                                  const EnergyOptions& opt) {
  if (n_samples < 2) throw std::invalid_argument("energy_sgd_drift: need >= 2 samples");
  EnergyDriftCheck out;
  out.gamma = gamma;
  out.lambda_x = energy_value(obj, x, opt);
  out.first_order = beta * gamma * out.lambda_x;

  Vec g = obj.grad(x), xi(obj.dim);
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    noise.sample_into(x, rng, xi);
    Vec next = x - gamma * (g + xi);
    double delta = energy_value(obj, next, opt) - out.lambda_x;
    mean += delta;
    sq += delta * delta;
  }
  mean /= n_samples;
  double var = std::max(0.0, sq / n_samples - mean * mean);
  out.mean_delta = mean;
  out.stderr_ = std::sqrt(var / n_samples);
  out.holds = mean >= out.first_order - c2 * gamma * gamma - 2.0 * out.stderr_;
  return out;
}

}  // namespace sgdlab
