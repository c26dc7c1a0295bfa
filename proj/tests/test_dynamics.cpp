#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sgdlab/dynamics.hpp"

using namespace sgdlab;

namespace {

StepSchedule constant_schedule(double gamma) {
  StepSchedule s;
  s.kind = ScheduleKind::constant;
  s.gamma = gamma;
  return s;
}

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("step_size catalog: power law, constant, cooldown") {
  StepSchedule p;
  p.kind = ScheduleKind::power_law;
  p.gamma = 0.1;
  p.offset_m = 1.0;
  p.exponent_p = 1.0;
  CHECK(step_size(p, 5) == doctest::Approx(0.1 / 6.0).epsilon(1e-15));
  p.exponent_p = 0.5;
  CHECK(step_size(p, 3) == doctest::Approx(0.05).epsilon(1e-15));

  CHECK(step_size(constant_schedule(0.3), 1) == 0.3);
  CHECK(step_size(constant_schedule(0.3), 1000000) == 0.3);

  StepSchedule c;
  c.kind = ScheduleKind::cooldown;
  c.gamma = 0.2;
  c.switch_iter = 10;
  c.gamma_post = 2.0;
  CHECK(step_size(c, 9) == 0.2);
  CHECK(step_size(c, 10) == 2.0);   // counter restarts at the switch
  CHECK(step_size(c, 14) == 0.4);   // 2 / 5
}

TEST_CASE("admissibility boundary is open below and closed at one") {
  StepSchedule s;
  s.kind = ScheduleKind::power_law;
  auto with_p = [&](double p) {
    s.exponent_p = p;
    return s;
  };
  // q = 2: window (1/2, 1]
  CHECK_FALSE(admissible(with_p(0.5), 2.0));
  CHECK(admissible(with_p(0.51), 2.0));
  CHECK(admissible(with_p(1.0), 2.0));
  CHECK_FALSE(admissible(with_p(1.01), 2.0));
  // q = 2.5: window (4/9, 1]
  CHECK_FALSE(admissible(with_p(0.4), 2.5));
  CHECK(admissible(with_p(0.5), 2.5));
  // bounded noise (q = inf): any positive exponent up to one
  double inf = std::numeric_limits<double>::infinity();
  CHECK(admissible(with_p(0.1), inf));
  CHECK_FALSE(admissible(with_p(0.0), inf));
  // other kinds never qualify
  CHECK_FALSE(admissible(constant_schedule(0.1), inf));
  StepSchedule c;
  c.kind = ScheduleKind::cooldown;
  CHECK_FALSE(admissible(c, inf));
}

TEST_CASE("noiseless quadratic contracts by exactly one half per step") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  NoiseModel noise = make_noise("zero", 1);
  SgdOptions opt;
  opt.record = RecordPolicy::full;
  Trajectory t = run_sgd(obj, noise, constant_schedule(0.5), vec1(1.0), 20, 0, opt);

  REQUIRE(t.last_step == 21);
  REQUIRE(t.stored_steps.size() == 21);
  CHECK_FALSE(t.diverged);
  for (int i = 0; i < 21; ++i) {
    double expect = std::ldexp(1.0, -i);  // 2^{-i}, exact
    CHECK(t.iterates[i][0] == expect);
    CHECK(t.f_values[i] == 0.5 * expect * expect);
    CHECK(t.grad_norms[i] == expect);
    CHECK(t.target_dist2[i] == expect * expect);
    CHECK(t.proper_times[i] == 0.5 * (i + 1));
  }
  CHECK(t.sup_norm == 1.0);
  CHECK(t.first_enter > 1);
  CHECK(t.first_escape == -1);
  CHECK(t.stayed_in_u);
}

TEST_CASE("noiseless saddle repels along the unstable axis at rate one plus gamma") {
  Objective obj = make_objective("hyperbolic_saddle");
  NoiseModel noise = make_noise("zero", 2);
  SgdOptions opt;
  opt.record = RecordPolicy::full;
  Trajectory t = run_sgd(obj, noise, constant_schedule(0.1), vec2(1.0, 1e-3), 100, 0, opt);

  REQUIRE(t.iterates.size() == 101);
  for (int i = 0; i + 1 < 101; ++i) {
    CHECK(t.iterates[i + 1][0] / t.iterates[i][0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(t.iterates[i + 1][1] / t.iterates[i][1] == doctest::Approx(1.1).epsilon(1e-12));
  }
  CHECK(t.iterates.back()[1] == doctest::Approx(1e-3 * std::pow(1.1, 100)).epsilon(1e-9));
}

TEST_CASE("stored signals reproduce the recursion bitwise") {
  Objective obj = make_objective("quadratic", {{"lambda", {2.0, 0.5}}});
  NoiseModel noise = make_noise("gaussian", 2, {{"sigma", {0.5}}});
  StepSchedule s;
  s.kind = ScheduleKind::power_law;
  s.gamma = 0.3;
  s.offset_m = 2.0;
  s.exponent_p = 0.7;
  SgdOptions opt;
  opt.record = RecordPolicy::full;
  Trajectory t = run_sgd(obj, noise, s, vec2(1.0, -2.0), 200, 42, opt);

  REQUIRE(t.signals.size() == 200);
  REQUIRE(t.iterates.size() == 201);
  for (int i = 0; i < 200; ++i) {
    long n = t.stored_steps[i];
    Vec expect = t.iterates[i] - step_size(s, n) * t.signals[i];
    CHECK(t.iterates[i + 1] == expect);
  }
}

TEST_CASE("proper time is the running sum of steps") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  NoiseModel noise = make_noise("gaussian", 1);
  Trajectory t = run_sgd(obj, noise, constant_schedule(0.25), vec1(0.3), 4000, 7);
  for (std::size_t i = 0; i < t.stored_steps.size(); ++i)
    CHECK(t.proper_times[i] == 0.25 * t.stored_steps[i]);
}

TEST_CASE("thinning stores exactly the predicate steps plus both endpoints") {
  CHECK(is_stored_step(1));
  CHECK(is_stored_step(1000));
  CHECK_FALSE(is_stored_step(1001));  // stride 2 starts
  CHECK(is_stored_step(1002));
  CHECK(is_stored_step(5000));        // stride 5
  CHECK_FALSE(is_stored_step(5001));  // stride 6

  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  NoiseModel noise = make_noise("gaussian", 1);
  const long n_iters = 5000;
  Trajectory t = run_sgd(obj, noise, constant_schedule(0.01), vec1(1.0), n_iters, 3);

  std::vector<long> expect;
  for (long n = 1; n <= n_iters + 1; ++n)
    if (is_stored_step(n) || n == n_iters + 1) expect.push_back(n);
  CHECK(t.stored_steps == expect);
  CHECK(t.iterates.size() == expect.size());
  CHECK(t.f_values.size() == expect.size());
  CHECK(t.signals.empty());  // signals exist only under full record

  SgdOptions diag;
  diag.record = RecordPolicy::diagnostics_only;
  Trajectory d = run_sgd(obj, noise, constant_schedule(0.01), vec1(1.0), n_iters, 3, diag);
  CHECK(d.stored_steps == expect);
  CHECK(d.iterates.size() == 2);  // first and last only
  CHECK(d.f_values.size() == expect.size());
  CHECK(d.iterates[0][0] == 1.0);
}

TEST_CASE("divergence guard truncates and flags instead of throwing") {
  Objective obj = make_objective("linear_divergent");
  NoiseModel noise = make_noise("zero", 1);
  SgdOptions opt;
  opt.r_max = 10.5;
  opt.record = RecordPolicy::full;
  // x_{n+1} = x_n + 1 from zero: the first update past 10.5 is step 11.
  Trajectory t = run_sgd(obj, noise, constant_schedule(1.0), vec1(0.0), 100000, 0, opt);
  CHECK(t.diverged);
  CHECK(t.last_step == 11);
  CHECK(t.stored_steps.back() == 11);
  CHECK(t.iterates.back()[0] == 10.0);
  CHECK(t.sup_norm == 10.0);
  CHECK(t.signals.size() == 10);  // the rejected signal is not kept
}

TEST_CASE("a shared step table reproduces the on-the-fly run bitwise") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.5}}});
  NoiseModel noise = make_noise("gaussian", 1, {{"sigma", {0.3}}});
  StepSchedule s;
  s.kind = ScheduleKind::power_law;
  s.gamma = 0.5;
  s.offset_m = 10.0;
  s.exponent_p = 0.9;
  const long n_iters = 3000;

  SgdOptions opt;
  opt.record = RecordPolicy::full;
  Trajectory a = run_sgd(obj, noise, s, vec1(2.0), n_iters, 5, opt);

  std::vector<double> table(n_iters + 1);
  for (long n = 1; n <= n_iters + 1; ++n) table[n - 1] = step_size(s, n);
  SgdOptions opt2 = opt;
  opt2.gamma_table = &table;
  Trajectory b = run_sgd(obj, noise, s, vec1(2.0), n_iters, 5, opt2);

  REQUIRE(a.iterates.size() == b.iterates.size());
  for (std::size_t i = 0; i < a.iterates.size(); ++i) {
    CHECK(a.iterates[i] == b.iterates[i]);
    CHECK(a.proper_times[i] == b.proper_times[i]);
  }

  std::vector<double> tiny(n_iters);  // one short: the final iterate's step is missing
  SgdOptions opt3 = opt;
  opt3.gamma_table = &tiny;
  CHECK_THROWS_AS(run_sgd(obj, noise, s, vec1(2.0), n_iters, 5, opt3),
                  std::invalid_argument);
}

TEST_CASE("same seed same trajectory, different seed different noise") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  NoiseModel noise = make_noise("gaussian", 1);
  Trajectory a = run_sgd(obj, noise, constant_schedule(0.1), vec1(1.0), 500, 9);
  Trajectory b = run_sgd(obj, noise, constant_schedule(0.1), vec1(1.0), 500, 9);
  Trajectory c = run_sgd(obj, noise, constant_schedule(0.1), vec1(1.0), 500, 10);
  REQUIRE(a.iterates.size() == b.iterates.size());
  for (std::size_t i = 0; i < a.iterates.size(); ++i)
    CHECK(a.iterates[i] == b.iterates[i]);
  CHECK(a.iterates.back() != c.iterates.back());
}

TEST_CASE("entry and escape clocks on the saddle") {
  Objective obj = make_objective("hyperbolic_saddle");
  NoiseModel noise = make_noise("zero", 2);

  // One unit step from (1, 0) lands exactly on the saddle and stays.
  Trajectory t = run_sgd(obj, noise, constant_schedule(1.0), vec2(1.0, 0.0), 50, 0);
  CHECK(t.first_enter == 2);
  CHECK(t.first_escape == -1);
  CHECK(t.stayed_in_u);
  CHECK(t.sup_norm == 1.0);

  // From a small unstable perturbation the iterate enters at once, then the
  // 1.1-per-step growth pushes it past the escape radius near step 33.
  Trajectory e = run_sgd(obj, noise, constant_schedule(0.1), vec2(0.05, 0.05), 100, 0);
  CHECK(e.first_enter == 1);
  CHECK(e.first_escape >= 32);
  CHECK(e.first_escape <= 34);
  CHECK_FALSE(e.stayed_in_u);
}

TEST_CASE("input validation") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  NoiseModel n1 = make_noise("zero", 1);
  NoiseModel n2 = make_noise("zero", 2);
  StepSchedule s = constant_schedule(0.1);
  CHECK_THROWS_AS(run_sgd(obj, n1, s, vec2(1.0, 1.0), 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(run_sgd(obj, n2, s, vec1(1.0), 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(run_sgd(obj, n1, s, vec1(1.0), -1, 0), std::invalid_argument);
  Vec bad = vec1(std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(run_sgd(obj, n1, s, bad, 10, 0), std::invalid_argument);

  SgdOptions opt;
  opt.target_feature = 3;
  CHECK_THROWS_AS(run_sgd(obj, n1, s, vec1(1.0), 10, 0, opt), std::invalid_argument);

  // No critical features: the monitors stay silent rather than failing.
  Objective apt = make_objective("apt_counterexample");
  Trajectory t = run_sgd(apt, n2, s, vec2(0.0, 1.0), 10, 0);
  CHECK(t.target_feature == -1);
  CHECK(t.target_dist2.empty());
  CHECK(t.first_enter == -1);
}
