#include "sgdlab/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sgdlab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string join_vector(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

ParamMap read_params(const std::map<std::string, std::string>& group) {
  ParamMap params;
  for (const auto& [k, v] : group) {
    if (k == "name") continue;
    std::vector<double> vals;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        std::size_t pos = 0;
        vals.push_back(std::stod(item, &pos));
      } catch (const std::exception&) {
        throw std::invalid_argument("config: parameter `" + k + "` is not numeric: `" +
                                    item + "`");
      }
    }
    if (vals.empty())
      throw std::invalid_argument("config: parameter `" + k + "` is empty");
    params[k] = std::move(vals);
  }
  return params;
}

RecordPolicy record_from_string(const std::string& s) {
  if (s == "full") return RecordPolicy::full;
  if (s == "thinned") return RecordPolicy::thinned;
  if (s == "diagnostics_only") return RecordPolicy::diagnostics_only;
  throw std::invalid_argument("unknown record policy: " + s);
}

std::string record_to_string(RecordPolicy r) {
  switch (r) {
    case RecordPolicy::full: return "full";
    case RecordPolicy::thinned: return "thinned";
    case RecordPolicy::diagnostics_only: return "diagnostics_only";
  }
  return "unknown";
}

bool kind_runs_sgd(ExperimentKind k) { return k != ExperimentKind::chung; }

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::rate: return "rate";
    case ExperimentKind::avoidance: return "avoidance";
    case ExperimentKind::apt: return "apt";
    case ExperimentKind::boundedness: return "boundedness";
    case ExperimentKind::cooldown: return "cooldown";
    case ExperimentKind::chung: return "chung";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "rate") return ExperimentKind::rate;
  if (s == "avoidance") return ExperimentKind::avoidance;
  if (s == "apt") return ExperimentKind::apt;
  if (s == "boundedness") return ExperimentKind::boundedness;
  if (s == "cooldown") return ExperimentKind::cooldown;
  if (s == "chung") return ExperimentKind::chung;
  throw std::invalid_argument("unknown experiment kind: " + s);
}

std::string to_string(X0Spec::Mode m) {
  switch (m) {
    case X0Spec::Mode::point: return "point";
    case X0Spec::Mode::stable_manifold: return "stable_manifold";
    case X0Spec::Mode::ball: return "ball";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::from_config(const Config& raw) {
  ConfigReader r(raw);
  ExperimentConfig cfg;
  cfg.kind = experiment_kind_from_string(r.get_string("kind"));
  cfg.out_dir = r.get_string("out", "out");
  cfg.base_seed = static_cast<std::uint64_t>(r.get_long("seed", 0));

  if (cfg.kind == ExperimentKind::chung) {
    cfg.chung_P = r.get_double("chung.P");
    cfg.chung_R = r.get_double("chung.R");
    cfg.chung_p = r.get_double("chung.p");
    cfg.chung_r = r.get_double("chung.r");
    cfg.chung_m = r.get_double("chung.m", 0.0);
    cfg.chung_a0 = r.get_double("chung.a0", 1.0);
    cfg.chung_n_max = r.get_long("chung.n_max", 1000000);
  } else {
    auto obj_group = r.group("objective");
    auto it = obj_group.find("name");
    if (it == obj_group.end())
      throw std::invalid_argument("config: missing key `objective.name`");
    cfg.objective_name = it->second;
    cfg.objective_params = read_params(obj_group);

    bool noise_optional = cfg.kind == ExperimentKind::apt && r.get_bool("apt.analytic", false);
    auto noise_group = r.group("noise");
    auto nit = noise_group.find("name");
    if (nit == noise_group.end()) {
      if (!noise_optional) throw std::invalid_argument("config: missing key `noise.name`");
      cfg.noise_name = "zero";
    } else {
      cfg.noise_name = nit->second;
    }
    cfg.noise_params = read_params(noise_group);

    cfg.schedule.kind = schedule_kind_from_string(r.get_string("schedule.kind", "power_law"));
    cfg.schedule.gamma = r.get_double("schedule.gamma", 1.0);
    if (!(cfg.schedule.gamma > 0.0))
      throw std::invalid_argument("config: schedule.gamma must be > 0");
    if (cfg.schedule.kind == ScheduleKind::power_law) {
      cfg.schedule.offset_m = r.get_double("schedule.m", 0.0);
      cfg.schedule.exponent_p = r.get_double("schedule.p", 1.0);
      if (cfg.schedule.offset_m < 0.0 || !(cfg.schedule.exponent_p > 0.0))
        throw std::invalid_argument("config: power_law needs m >= 0 and p > 0");
    } else if (cfg.schedule.kind == ScheduleKind::cooldown) {
      cfg.schedule.switch_iter = r.get_long("schedule.switch");
      cfg.schedule.gamma_post = r.get_double("schedule.gamma_post", 1.0);
      if (cfg.schedule.switch_iter < 2 || !(cfg.schedule.gamma_post > 0.0))
        throw std::invalid_argument("config: cooldown needs switch >= 2 and gamma_post > 0");
    }

    std::string mode = r.get_string("x0.mode", "point");
    if (mode == "point") {
      cfg.x0.mode = X0Spec::Mode::point;
      cfg.x0.point = r.get_vector("x0.point");
    } else if (mode == "stable_manifold") {
      cfg.x0.mode = X0Spec::Mode::stable_manifold;
      cfg.x0.feature = r.get_long("x0.feature", 0);
    } else if (mode == "ball") {
      cfg.x0.mode = X0Spec::Mode::ball;
      cfg.x0.radius = r.get_double("x0.radius", 1.0);
      if (!(cfg.x0.radius > 0.0))
        throw std::invalid_argument("config: x0.radius must be > 0");
      if (r.has("x0.center")) cfg.x0.center = r.get_vector("x0.center");
    } else {
      throw std::invalid_argument("config: unknown x0.mode `" + mode + "`");
    }

    long default_iters = 1000;
    if (cfg.kind == ExperimentKind::cooldown)
      default_iters = cfg.schedule.switch_iter - 1 + 1000;
    cfg.n_iters = r.get_long("n_iters", default_iters);
    cfg.n_runs = r.get_long("n_runs", 1);
    if (cfg.n_iters < 1) throw std::invalid_argument("config: n_iters must be >= 1");
    if (cfg.n_runs < 1) throw std::invalid_argument("config: n_runs must be >= 1");

    cfg.record = record_from_string(r.get_string("record", "thinned"));
    cfg.r_max = r.get_double("r_max", 1e8);
    cfg.tolerances.g_tol = r.get_double("classify.g_tol", 1e-4);
    cfg.tolerances.d_tol_rel = r.get_double("classify.d_tol", 1e-2);
    cfg.target_feature = r.get_long("monitor.target", -1);
    cfg.u_radius = r.get_double("monitor.u_radius", 1.0);
    cfg.r_enter = r.get_double("monitor.r_enter", 0.1);
    cfg.r_escape = r.get_double("monitor.r_escape", 1.0);

    if (cfg.kind == ExperimentKind::rate) {
      cfg.fit_n_lo = r.get_double("fit.n_lo", std::max(10.0, cfg.n_iters / 100.0));
      cfg.fit_n_hi = r.get_double("fit.n_hi", static_cast<double>(cfg.n_iters));
      if (!(cfg.fit_n_lo < cfg.fit_n_hi))
        throw std::invalid_argument("config: fit window must satisfy n_lo < n_hi");
    }

    if (cfg.kind == ExperimentKind::apt) {
      cfg.apt_t0 = r.get_vector("apt.t0");
      for (std::size_t i = 1; i < cfg.apt_t0.size(); ++i)
        if (!(cfg.apt_t0[i] > cfg.apt_t0[i - 1]))
          throw std::invalid_argument("config: apt.t0 must be strictly increasing");
      if (cfg.apt_t0.front() < 0.0)
        throw std::invalid_argument("config: apt.t0 entries must be >= 0");
      cfg.apt_window = r.get_double("apt.window", 1.0);
      if (!(cfg.apt_window > 0.0))
        throw std::invalid_argument("config: apt.window must be > 0");
      cfg.apt_probes = static_cast<int>(r.get_long("apt.probes", 33));
      cfg.apt_analytic = r.get_bool("apt.analytic", false);
      // Interpolating the iterate path needs every iterate.
      if (!cfg.apt_analytic) cfg.record = RecordPolicy::full;
    }

    if (cfg.kind == ExperimentKind::cooldown) {
      if (cfg.schedule.kind != ScheduleKind::cooldown)
        throw std::invalid_argument("config: cooldown experiments need schedule.kind = cooldown");
      long sw = cfg.schedule.switch_iter;
      cfg.plateau_lo = r.get_long("cooldown.plateau_lo", sw / 2);
      cfg.plateau_hi = r.get_long("cooldown.plateau_hi", sw - 1);
      if (cfg.plateau_lo < 1 || cfg.plateau_lo > cfg.plateau_hi || cfg.plateau_hi >= sw)
        throw std::invalid_argument("config: plateau window must lie in [1, switch)");
      if (cfg.n_iters + 1 <= sw)
        throw std::invalid_argument("config: cooldown needs n_iters + 1 > schedule.switch");
    }
  }

  auto unused = r.unused_keys();
  if (!unused.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& k : unused) msg += " `" + k + "`";
    throw std::invalid_argument(msg);
  }
  return cfg;
}

Config ExperimentConfig::to_config() const {
  Config c;
  c["kind"] = to_string(kind);
  c["out"] = out_dir;
  c["seed"] = std::to_string(base_seed);

  if (kind == ExperimentKind::chung) {
    c["chung.P"] = format_double(chung_P);
    c["chung.R"] = format_double(chung_R);
    c["chung.p"] = format_double(chung_p);
    c["chung.r"] = format_double(chung_r);
    c["chung.m"] = format_double(chung_m);
    c["chung.a0"] = format_double(chung_a0);
    c["chung.n_max"] = std::to_string(chung_n_max);
    return c;
  }

  c["objective.name"] = objective_name;
  for (const auto& [k, v] : objective_params) c["objective." + k] = join_vector(v);
  c["noise.name"] = noise_name;
  for (const auto& [k, v] : noise_params) c["noise." + k] = join_vector(v);

  c["schedule.kind"] = to_string(schedule.kind);
  c["schedule.gamma"] = format_double(schedule.gamma);
  if (schedule.kind == ScheduleKind::power_law) {
    c["schedule.m"] = format_double(schedule.offset_m);
    c["schedule.p"] = format_double(schedule.exponent_p);
  } else if (schedule.kind == ScheduleKind::cooldown) {
    c["schedule.switch"] = std::to_string(schedule.switch_iter);
    c["schedule.gamma_post"] = format_double(schedule.gamma_post);
  }

  c["x0.mode"] = to_string(x0.mode);
  if (x0.mode == X0Spec::Mode::point) {
    c["x0.point"] = join_vector(x0.point);
  } else if (x0.mode == X0Spec::Mode::stable_manifold) {
    c["x0.feature"] = std::to_string(x0.feature);
  } else {
    c["x0.radius"] = format_double(x0.radius);
    if (!x0.center.empty()) c["x0.center"] = join_vector(x0.center);
  }

  c["n_iters"] = std::to_string(n_iters);
  c["n_runs"] = std::to_string(n_runs);
  c["record"] = record_to_string(record);
  c["r_max"] = format_double(r_max);
  c["classify.g_tol"] = format_double(tolerances.g_tol);
  c["classify.d_tol"] = format_double(tolerances.d_tol_rel);
  c["monitor.target"] = std::to_string(target_feature);
  c["monitor.u_radius"] = format_double(u_radius);
  c["monitor.r_enter"] = format_double(r_enter);
  c["monitor.r_escape"] = format_double(r_escape);

  if (kind == ExperimentKind::rate) {
    c["fit.n_lo"] = format_double(fit_n_lo);
    c["fit.n_hi"] = format_double(fit_n_hi);
  }
  if (kind == ExperimentKind::apt) {
    c["apt.t0"] = join_vector(apt_t0);
    c["apt.window"] = format_double(apt_window);
    c["apt.probes"] = std::to_string(apt_probes);
    c["apt.analytic"] = apt_analytic ? "true" : "false";
  }
  if (kind == ExperimentKind::cooldown) {
    c["cooldown.plateau_lo"] = std::to_string(plateau_lo);
    c["cooldown.plateau_hi"] = std::to_string(plateau_hi);
  }
  return c;
}

namespace {

Vec fixed_x0(const ExperimentConfig& cfg, const Objective& obj) {
  if (cfg.x0.mode == X0Spec::Mode::point) {
    if (static_cast<int>(cfg.x0.point.size()) != obj.dim)
      throw std::invalid_argument("x0.point dimension does not match the objective");
    Vec x(obj.dim);
    for (int i = 0; i < obj.dim; ++i) x[i] = cfg.x0.point[i];
    return x;
  }
  if (cfg.x0.mode == X0Spec::Mode::stable_manifold) {
    if (!obj.stable_point)
      throw std::invalid_argument("objective `" + obj.name +
                                  "` has no stable-manifold chart");
    if (cfg.x0.feature < 0 ||
        static_cast<std::size_t>(cfg.x0.feature) >= obj.critical_set.size())
      throw std::invalid_argument("x0.feature is out of range");
    return obj.stable_point(static_cast<std::size_t>(cfg.x0.feature));
  }
  return Vec();  // ball mode draws per run
}

Vec ball_x0(const X0Spec& spec, int dim, std::uint64_t run_seed) {
  // Separate stream from the SGD noise: same run seed, different salt.
  Rng rng(derive_seed(run_seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec u(dim);
  for (int i = 0; i < dim; ++i) u[i] = normal(rng);
  double nn = u.norm();
  if (nn == 0.0) {
    u.setZero();
    u[0] = 1.0;
  } else {
    u /= nn;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double rad = spec.radius * std::pow(unif(rng), 1.0 / dim);
  Vec c = Vec::Zero(dim);
  if (!spec.center.empty()) {
    if (static_cast<int>(spec.center.size()) != dim)
      throw std::invalid_argument("x0.center dimension does not match the objective");
    for (int i = 0; i < dim; ++i) c[i] = spec.center[i];
  }
  return c + rad * u;
}

struct RunResult {
  RunSummary summary;
  std::vector<AptPoint> profile;  // apt kind only
  double plateau_mean = 0.0;      // cooldown kind only
  double tail = 0.0;
  long tail_step = 0;
};

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, int n_threads) {
  ExperimentReport report;
  report.cfg = cfg;

  if (cfg.kind == ExperimentKind::chung) {
    report.chung = chung_oracle(cfg.chung_P, cfg.chung_R, cfg.chung_p, cfg.chung_r,
                                cfg.chung_m, cfg.chung_a0, cfg.chung_n_max);
    return report;
  }

  Objective obj = make_objective(cfg.objective_name, cfg.objective_params);
  NoiseModel noise = make_noise(cfg.noise_name, obj.dim, cfg.noise_params);
  report.noise_q = noise.moment_order_q;
  report.noise_sigma = noise.moment_bound_sigma;
  report.schedule_admissible = admissible(cfg.schedule, noise.moment_order_q);

  if (cfg.kind == ExperimentKind::apt && cfg.apt_analytic) {
    // Straight probe path x0 + t e_1 with the other coordinates frozen; the
    // flow-deviation profile of this path is analytically tractable.
    Vec x0 = fixed_x0(cfg, obj);
    if (x0.size() == 0)
      throw std::invalid_argument("apt.analytic needs a deterministic x0");
    double t_end = cfg.apt_t0.back() + cfg.apt_window;
    Vec x1 = x0;
    x1[0] += t_end;
    InterpolatedPath path({0.0, t_end}, {x0, x1});
    FlowMap fm(obj);
    AptReport ar;
    ar.n_runs = 0;
    ar.window = cfg.apt_window;
    ar.mean_profile = apt_profile(path, fm, cfg.apt_t0, cfg.apt_window, cfg.apt_probes);
    report.apt = ar;
    return report;
  }

  Vec x0_base = fixed_x0(cfg, obj);

  // One entry past n_iters: the final iterate still logs its proper time.
  std::vector<double> gamma_table(static_cast<std::size_t>(cfg.n_iters + 1));
  for (long n = 1; n <= cfg.n_iters + 1; ++n)
    gamma_table[static_cast<std::size_t>(n - 1)] = step_size(cfg.schedule, n);

  SgdOptions opts;
  opts.record = cfg.record;
  opts.r_max = cfg.r_max;
  opts.target_feature = static_cast<int>(cfg.target_feature);
  opts.u_radius = cfg.u_radius;
  opts.r_enter = cfg.r_enter;
  opts.r_escape = cfg.r_escape;
  opts.gamma_table = &gamma_table;

  FlowMap fm(obj);
  const bool want_profile = cfg.kind == ExperimentKind::apt;
  const double t0_max =
      want_profile ? cfg.apt_t0.back() + cfg.apt_window : 0.0;

  auto do_run = [&](long i) {
    std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(i));
    Vec x0 = cfg.x0.mode == X0Spec::Mode::ball ? ball_x0(cfg.x0, obj.dim, seed) : x0_base;
    Trajectory traj = run_sgd(obj, noise, cfg.schedule, x0, cfg.n_iters, seed, opts);

    RunResult r;
    r.summary = classify_run(traj, obj, cfg.tolerances);
    r.summary.run_index = static_cast<std::uint64_t>(i);

    if (want_profile) {
      InterpolatedPath path = InterpolatedPath::from_trajectory(traj);
      if (path.t_end() < t0_max)
        throw std::invalid_argument(
            "apt: n_iters too small, proper time never reaches the last window");
      r.profile = apt_profile(path, fm, cfg.apt_t0, cfg.apt_window, cfg.apt_probes);
    }
    if (cfg.kind == ExperimentKind::cooldown && !traj.diverged) {
      double acc = 0.0;
      long cnt = 0;
      for (std::size_t j = 0; j < traj.stored_steps.size(); ++j) {
        long n = traj.stored_steps[j];
        if (n >= cfg.plateau_lo && n <= cfg.plateau_hi) {
          acc += traj.target_dist2[j];
          ++cnt;
        }
      }
      if (cnt == 0)
        throw std::invalid_argument("cooldown: plateau window contains no stored steps");
      r.plateau_mean = acc / cnt;
      r.tail = traj.target_dist2.back();
      r.tail_step = traj.last_step;
    }
    return r;
  };

  // Ordered fold: statistics are accumulated strictly in run_index order, so
  // the report does not depend on the thread count.
  EnsembleAccumulator acc;
  const bool use_acc = cfg.kind != ExperimentKind::apt;
  std::vector<double> profile_sum(cfg.apt_t0.size(), 0.0);
  long profile_runs = 0, profile_decreasing = 0;
  double plateau_sum = 0.0, tail_sum = 0.0;
  long cooldown_runs = 0, tail_step = 0;

  auto fold = [&](RunResult&& r) {
    if (use_acc) acc.add(r.summary);
    if (want_profile) {
      ++profile_runs;
      bool decreasing = true;
      for (std::size_t j = 0; j < r.profile.size(); ++j) {
        profile_sum[j] += r.profile[j].deviation;
        if (j > 0 && !(r.profile[j].deviation < r.profile[j - 1].deviation))
          decreasing = false;
      }
      if (decreasing) ++profile_decreasing;
    }
    if (cfg.kind == ExperimentKind::cooldown && !r.summary.diverged) {
      plateau_sum += r.plateau_mean;
      tail_sum += r.tail;
      tail_step = r.tail_step;
      ++cooldown_runs;
    }
    r.summary.distance_series.clear();
    r.summary.distance_series.shrink_to_fit();
    report.runs.push_back(std::move(r.summary));
  };

  const long n = cfg.n_runs;
  const int k = std::max(1, n_threads);
  std::atomic<long> next{0};
  std::atomic<bool> stop{false};
  std::map<long, RunResult> ready;
  std::mutex mu;
  std::condition_variable cv;
  std::exception_ptr first_error;

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) {
    pool.emplace_back([&] {
      while (!stop.load()) {
        long i = next.fetch_add(1);
        if (i >= n) return;
        try {
          RunResult r = do_run(i);
          std::lock_guard<std::mutex> lk(mu);
          ready.emplace(i, std::move(r));
          cv.notify_all();
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!first_error) first_error = std::current_exception();
          stop.store(true);
          cv.notify_all();
          return;
        }
      }
    });
  }

  long folded = 0;
  {
    std::unique_lock<std::mutex> lk(mu);
    while (folded < n) {
      cv.wait(lk, [&] { return first_error || ready.count(folded) > 0; });
      if (first_error) break;
      RunResult r = std::move(ready.at(folded));
      ready.erase(folded);
      lk.unlock();
      fold(std::move(r));
      ++folded;
      lk.lock();
    }
  }
  stop.store(true);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  if (use_acc) report.stats = acc.finalize();

  const long n_div =
      report.stats ? report.stats->class_counts[static_cast<int>(LimitClass::diverged)] : 0;

  switch (cfg.kind) {
    case ExperimentKind::rate: {
      if (n_div == n) throw std::runtime_error("rate: all runs diverged");
      report.rate = fit_rate(report.stats->curve_conditioned, cfg.fit_n_lo, cfg.fit_n_hi);
      break;
    }
    case ExperimentKind::avoidance: {
      AvoidanceReport ar;
      ar.n_runs = n;
      for (const auto& run : report.runs) {
        if (run.entered) ++ar.n_entered;
        if (run.limit_class == LimitClass::converged_to_saddle)
          ++ar.n_converged_to_saddle;
      }
      ar.wilson_ci_upper = wilson_interval(ar.n_converged_to_saddle, n).hi;
      report.avoidance = ar;
      break;
    }
    case ExperimentKind::apt: {
      AptReport ar;
      ar.n_runs = profile_runs;
      ar.n_decreasing = profile_decreasing;
      ar.window = cfg.apt_window;
      ar.mean_profile.resize(cfg.apt_t0.size());
      for (std::size_t j = 0; j < cfg.apt_t0.size(); ++j)
        ar.mean_profile[j] = {cfg.apt_t0[j], profile_sum[j] / profile_runs};
      report.apt = ar;
      break;
    }
    case ExperimentKind::boundedness: {
      BoundednessReport br;
      br.n_runs = n;
      std::vector<double> sups;
      sups.reserve(static_cast<std::size_t>(n));
      for (const auto& run : report.runs) {
        if (run.diverged) ++br.n_diverged;
        sups.push_back(run.sup_norm);
      }
      std::sort(sups.begin(), sups.end());
      br.sup_norm_max = sups.back();
      br.sup_norm_median = 0.5 * (sups[(sups.size() - 1) / 2] + sups[sups.size() / 2]);
      br.bounded_sublevels_declared = obj.assumptions.bounded_sublevels;
      br.violation_flagged = br.n_diverged > 0 && !obj.assumptions.bounded_sublevels;
      report.boundedness = br;
      break;
    }
    case ExperimentKind::cooldown: {
      if (cooldown_runs == 0) throw std::runtime_error("cooldown: all runs diverged");
      CooldownReport cr;
      cr.plateau = plateau_sum / cooldown_runs;
      cr.tail = tail_sum / cooldown_runs;
      cr.ratio = cr.plateau > 0.0 ? cr.tail / cr.plateau
                                  : std::numeric_limits<double>::infinity();
      cr.switch_iter = cfg.schedule.switch_iter;
      cr.tail_step = tail_step;
      report.cooldown = cr;
      break;
    }
    case ExperimentKind::chung:
      break;
  }
  return report;
}

// ---- Report writers --------------------------------------------------------

namespace {

ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);  // "inf" / "-inf" / "nan" as strings
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string summary_json(const ExperimentReport& rep) {
  ordered_json j;
  j["kind"] = to_string(rep.cfg.kind);
  if (kind_runs_sgd(rep.cfg.kind)) {
    j["objective"] = rep.cfg.objective_name;
    j["noise"] = rep.cfg.noise_name;
    j["noise_q"] = json_number(rep.noise_q);
    j["noise_sigma"] = json_number(rep.noise_sigma);
    j["schedule"] = to_string(rep.cfg.schedule.kind);
    j["admissible"] = rep.schedule_admissible;
  }
  if (rep.stats) {
    const EnsembleStats& s = *rep.stats;
    ordered_json e;
    e["n_runs"] = s.n_runs;
    ordered_json classes;
    for (int c = 0; c < 4; ++c)
      classes[to_string(static_cast<LimitClass>(c))] = s.class_counts[c];
    e["classes"] = classes;
    e["n_stayed"] = s.n_stayed;
    e["stay_ci"] = {json_number(s.stay_ci.lo), json_number(s.stay_ci.hi)};
    e["n_conditioned"] = s.n_conditioned;
    j["ensemble"] = e;
  }
  if (rep.rate) {
    j["rate"] = {{"exponent", json_number(rep.rate->exponent)},
                 {"coefficient", json_number(rep.rate->coefficient)},
                 {"stderr", json_number(rep.rate->exponent_stderr)},
                 {"p_declared", json_number(rep.cfg.schedule.exponent_p)}};
  }
  if (rep.avoidance) {
    j["avoidance"] = {{"n_entered", rep.avoidance->n_entered},
                      {"n_converged_to_saddle", rep.avoidance->n_converged_to_saddle},
                      {"wilson_ci_upper", json_number(rep.avoidance->wilson_ci_upper)},
                      {"n_runs", rep.avoidance->n_runs}};
  }
  if (rep.apt) {
    ordered_json profile = ordered_json::array();
    for (const auto& p : rep.apt->mean_profile)
      profile.push_back({{"t0", json_number(p.t0)}, {"deviation", json_number(p.deviation)}});
    j["apt"] = {{"n_runs", rep.apt->n_runs},
                {"n_decreasing", rep.apt->n_decreasing},
                {"window", json_number(rep.apt->window)},
                {"profile", profile}};
  }
  if (rep.boundedness) {
    j["boundedness"] = {
        {"n_runs", rep.boundedness->n_runs},
        {"n_diverged", rep.boundedness->n_diverged},
        {"sup_norm_max", json_number(rep.boundedness->sup_norm_max)},
        {"sup_norm_median", json_number(rep.boundedness->sup_norm_median)},
        {"bounded_sublevels_declared", rep.boundedness->bounded_sublevels_declared},
        {"violation_flagged", rep.boundedness->violation_flagged}};
  }
  if (rep.cooldown) {
    j["cooldown"] = {{"plateau", json_number(rep.cooldown->plateau)},
                     {"tail", json_number(rep.cooldown->tail)},
                     {"ratio", json_number(rep.cooldown->ratio)},
                     {"switch_iter", rep.cooldown->switch_iter},
                     {"tail_step", rep.cooldown->tail_step}};
  }
  if (rep.chung) {
    j["chung"] = {{"n_max", rep.chung->n_max},
                  {"a_final", json_number(rep.chung->a_final)},
                  {"normalized", json_number(rep.chung->normalized)},
                  {"limit", json_number(rep.chung->limit)},
                  {"cauchy_gap", json_number(rep.chung->cauchy_gap)}};
  }
  j["config"] = rep.cfg.to_config();
  return j.dump(2) + "\n";
}

std::string curve_csv(const ExperimentReport& rep) {
  std::string out;
  if (rep.cfg.kind == ExperimentKind::chung) {
    out = "n,a_n,normalized\n";
    for (const auto& row : rep.chung->checkpoints) {
      out += format_double(row[0]);
      out += ',';
      out += format_double(row[1]);
      out += ',';
      out += format_double(row[2]);
      out += '\n';
    }
    return out;
  }
  if (rep.cfg.kind == ExperimentKind::apt) {
    out = "t0,T,deviation\n";
    for (const auto& p : rep.apt->mean_profile) {
      out += format_double(p.t0);
      out += ',';
      out += format_double(rep.apt->window);
      out += ',';
      out += format_double(p.deviation);
      out += '\n';
    }
    return out;
  }
  out = "n,mean_sq_dist,stderr,n_conditioned\n";
  const std::vector<CurvePoint>& curve = rep.cfg.kind == ExperimentKind::rate
                                             ? rep.stats->curve_conditioned
                                             : rep.stats->curve_all;
  for (const auto& p : curve) {
    out += std::to_string(p.n);
    out += ',';
    out += format_double(p.mean);
    out += ',';
    out += format_double(p.stderr_);
    out += ',';
    out += std::to_string(p.count);
    out += '\n';
  }
  return out;
}

std::string runs_csv(const ExperimentReport& rep) {
  std::string out =
      "run_index,seed,class,feature_id,final_distance,final_grad_norm,"
      "entered,escape_step,stayed_in_u,diverged,sup_norm,last_step\n";
  for (const auto& r : rep.runs) {
    out += std::to_string(r.run_index);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += to_string(r.limit_class);
    out += ',';
    out += std::to_string(r.feature_id);
    out += ',';
    out += format_double(r.final_distance);
    out += ',';
    out += format_double(r.final_grad_norm);
    out += ',';
    out += r.entered ? '1' : '0';
    out += ',';
    out += std::to_string(r.escape_time);
    out += ',';
    out += r.stayed_in_u ? '1' : '0';
    out += ',';
    out += r.diverged ? '1' : '0';
    out += ',';
    out += format_double(r.sup_norm);
    out += ',';
    out += std::to_string(r.last_step);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string report_human(const ExperimentReport& rep) {
  std::ostringstream out;
  auto row = [&](const std::string& k, const std::string& v) {
    out << "  " << k;
    for (std::size_t i = k.size(); i < 22; ++i) out << ' ';
    out << v << '\n';
  };
  out << "experiment: " << to_string(rep.cfg.kind) << '\n';
  if (kind_runs_sgd(rep.cfg.kind)) {
    row("objective", rep.cfg.objective_name);
    row("noise", rep.cfg.noise_name + " (q = " + format_double(rep.noise_q) +
                     ", sigma = " + format_double(rep.noise_sigma) + ")");
    row("schedule", to_string(rep.cfg.schedule.kind) +
                        (rep.schedule_admissible ? " (admissible)" : " (not admissible)"));
    row("runs", std::to_string(rep.cfg.n_runs) + " x " +
                    std::to_string(rep.cfg.n_iters) + " steps");
  }
  if (rep.stats) {
    const EnsembleStats& s = *rep.stats;
    row("classes", "minimizer " + std::to_string(s.class_counts[0]) + " | saddle " +
                       std::to_string(s.class_counts[1]) + " | diverged " +
                       std::to_string(s.class_counts[2]) + " | undecided " +
                       std::to_string(s.class_counts[3]));
    row("stay fraction",
        format_double(static_cast<double>(s.n_stayed) / s.n_runs) + "  [" +
            format_double(s.stay_ci.lo) + ", " + format_double(s.stay_ci.hi) + "]");
  }
  if (rep.rate)
    row("rate fit", "exponent " + format_double(rep.rate->exponent) + " +/- " +
                        format_double(rep.rate->exponent_stderr) + ", coefficient " +
                        format_double(rep.rate->coefficient) + " (declared p = " +
                        format_double(rep.cfg.schedule.exponent_p) + ")");
  if (rep.avoidance)
    row("avoidance", std::to_string(rep.avoidance->n_converged_to_saddle) + "/" +
                         std::to_string(rep.avoidance->n_runs) +
                         " saddle, wilson upper " +
                         format_double(rep.avoidance->wilson_ci_upper));
  if (rep.apt) {
    std::string prof;
    for (const auto& p : rep.apt->mean_profile) {
      if (!prof.empty()) prof += "  ";
      prof += format_double(p.t0) + ":" + format_double(p.deviation);
    }
    row("apt profile", prof);
    if (rep.apt->n_runs > 0)
      row("apt decreasing", std::to_string(rep.apt->n_decreasing) + "/" +
                                std::to_string(rep.apt->n_runs) + " runs");
  }
  if (rep.boundedness)
    row("boundedness", std::to_string(rep.boundedness->n_diverged) + "/" +
                           std::to_string(rep.boundedness->n_runs) +
                           " diverged, sup max " +
                           format_double(rep.boundedness->sup_norm_max) +
                           (rep.boundedness->violation_flagged
                                ? " (unbounded sublevels, divergence expected)"
                                : ""));
  if (rep.cooldown)
    row("cooldown", "plateau " + format_double(rep.cooldown->plateau) + " -> tail " +
                        format_double(rep.cooldown->tail) + " (ratio " +
                        format_double(rep.cooldown->ratio) + ")");
  if (rep.chung)
    row("chung", "normalized " + format_double(rep.chung->normalized) + ", limit " +
                     format_double(rep.chung->limit) + ", gap " +
                     format_double(rep.chung->cauchy_gap));
  return out.str();
}

std::vector<std::string> emit_report(const ExperimentReport& rep, ReportFormat fmt,
                                     const std::string& out_dir) {
  bool analytic_apt = rep.cfg.kind == ExperimentKind::apt && rep.cfg.apt_analytic;
  if (rep.runs.empty() && kind_runs_sgd(rep.cfg.kind) && !analytic_apt)
    throw std::runtime_error("no runs");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output dir: " + out_dir);

  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    std::string path = out_dir + "/" + name;
    write_file(path, content);
    written.push_back(path);
  };

  switch (fmt) {
    case ReportFormat::json:
      emit("summary.json", summary_json(rep));
      emit("config.echo", emit_config(rep.cfg.to_config()));
      break;
    case ReportFormat::csv:
      emit("curve.csv", curve_csv(rep));
      emit("runs.csv", runs_csv(rep));
      break;
    case ReportFormat::human:
      emit("report.txt", report_human(rep));
      break;
  }
  return written;
}

}  // namespace sgdlab
