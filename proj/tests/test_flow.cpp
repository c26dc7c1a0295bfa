#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sgdlab/flow.hpp"

using namespace sgdlab;

namespace {

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

TEST_CASE("gradient flow of the unit quadratic is exponential decay") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  FlowMap fm(obj);
  CHECK(fm.advance(vec1(1.0), 1.0)[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
  CHECK(fm.advance(vec1(1.0), 5.0)[0] == doctest::Approx(std::exp(-5.0)).epsilon(1e-7));
  // Backward integration undoes forward integration.
  Vec x = vec1(0.7);
  Vec back = fm.advance(fm.advance(x, 2.0), -2.0);
  CHECK((back - x).norm() <= 1e-8);
  CHECK(integrate_flow(fm, x, 0.0) == x);
  CHECK_THROWS_AS(integrate_flow(fm, x, -1.0), std::invalid_argument);
}

TEST_CASE("semigroup property on a nonconvex objective") {
  Objective obj = make_objective("rosenbrock");
  FlowMap fm(obj);
  Vec x = vec2(-0.5, 0.8);
  for (double s : {0.1, 0.7}) {
    for (double t : {0.2, 1.3}) {
      Vec once = fm.advance(x, s + t);
      Vec twice = fm.advance(fm.advance(x, s), t);
      CHECK((once - twice).norm() <= 1e-6 * (1.0 + once.norm()));
    }
  }
}

TEST_CASE("the declared non-gradient field follows its closed-form solutions") {
  // Solutions are z(t) = (a + t, b (1 + a) / (1 + a + t)); from a = 0 the
  // second coordinate decays like b / (1 + t).
  Objective obj = make_objective("apt_counterexample");
  REQUIRE_FALSE(obj.gradient_flow);
  FlowMap fm(obj);
  for (double b : {0.5, 1.0, 2.0}) {
    Vec z = fm.advance(vec2(0.0, b), 100.0);
    CHECK(z[0] == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(z[1] == doctest::Approx(b / 101.0).epsilon(1e-7));
    CHECK(std::abs(z[1]) <= 0.011 * b);
  }
  // The same objective under its negative gradient instead: solutions are
  // (a + t, b e^{-t}), visibly different from the declared field's orbits.
  Objective grad_only = obj;
  grad_only.flow_field = [](const Vec& x, Vec& v) {
    v[0] = 1.0;
    v[1] = -x[1];
  };
  grad_only.gradient_flow = true;
  FlowMap gm(grad_only);
  Vec w = gm.advance(vec2(0.0, 1.0), 2.0);
  CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(w[1] == doctest::Approx(std::exp(-2.0)).epsilon(1e-7));
}

TEST_CASE("finite-time escape raises a blowup that reports where it stopped") {
  // Along the negative monkey-saddle gradient from (-1, 0), x' = -3 x^2 keeps
  // x negative with |x| -> inf at t = 1/3.
  Objective obj = make_objective("monkey_saddle");
  FlowOptions opt;
  opt.r_max = 1e6;
  FlowMap fm(obj, opt);
  try {
    fm.advance(vec2(-1.0, 0.0), 1.0);
    FAIL("expected FlowBlowup");
  } catch (const FlowBlowup& b) {
    CHECK(b.last_time <= 0.3334);
    CHECK(b.last_time >= 0.3);
    CHECK(b.last_state.norm() >= 1e3);  // already far out when it gave up
    CHECK(b.last_state[0] < 0.0);
  }
  // Forward flow of the linear objective runs off to r_max as well.
  Objective lin = make_objective("linear_divergent");
  FlowOptions small;
  small.r_max = 50.0;
  small.h0 = 0.5;
  FlowMap lf(lin, small);
  CHECK_THROWS_AS(lf.advance(vec1(0.0), 1000.0), FlowBlowup);
  CHECK(lf.advance(vec1(0.0), 40.0)[0] == doctest::Approx(40.0).epsilon(1e-9));
}

TEST_CASE("orbit sampling covers the window with both endpoints") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  FlowMap fm(obj);
  auto orbit = fm.orbit(vec1(1.0), 1.0, 0.25);
  REQUIRE(orbit.size() == 5);
  CHECK(orbit.front().first == 0.0);
  CHECK(orbit.back().first == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& [t, x] : orbit)
    CHECK(x[0] == doctest::Approx(std::exp(-t)).epsilon(1e-7));
}

TEST_CASE("interpolated paths are exact at knots and affine between them") {
  std::vector<double> times = {0.0, 1.0, 3.0};
  std::vector<Vec> pts = {vec2(0.0, 0.0), vec2(2.0, -1.0), vec2(2.0, 3.0)};
  InterpolatedPath path(times, pts);
  CHECK(path.t_begin() == 0.0);
  CHECK(path.t_end() == 3.0);
  CHECK(path.at(1.0) == pts[1]);
  CHECK((path.at(0.5) - vec2(1.0, -0.5)).norm() == 0.0);
  CHECK((path.at(2.0) - vec2(2.0, 1.0)).norm() == 0.0);
  // Constant left of the first knot; past the end is a caller error.
  CHECK(path.at(-5.0) == pts[0]);
  CHECK_THROWS_AS(path.at(3.0000001), std::out_of_range);

  CHECK_THROWS_AS(InterpolatedPath({0.0}, {vec1(0.0), vec1(1.0)}), std::invalid_argument);
  CHECK_THROWS_AS(InterpolatedPath({1.0, 1.0}, {vec1(0.0), vec1(1.0)}),
                  std::invalid_argument);
}

TEST_CASE("a trajectory becomes the path with iterates at proper times") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.0}}});
  NoiseModel noise = make_noise("gaussian", 1, {{"sigma", {0.2}}});
  StepSchedule s;
  s.kind = ScheduleKind::constant;
  s.gamma = 0.125;
  SgdOptions opt;
  opt.record = RecordPolicy::full;
  Trajectory traj = run_sgd(obj, noise, s, vec1(1.0), 50, 11, opt);

  InterpolatedPath path = InterpolatedPath::from_trajectory(traj);
  REQUIRE(path.times().size() == traj.iterates.size());
  for (std::size_t i = 0; i < traj.iterates.size(); ++i) {
    CHECK(path.times()[i] == traj.proper_times[i]);
    CHECK(path.at(traj.proper_times[i]) == traj.iterates[i]);
  }
  // Thinned records drop interior iterates, so the conversion refuses them.
  Trajectory thin = run_sgd(obj, noise, s, vec1(1.0), 5000, 11);
  CHECK_THROWS_AS(InterpolatedPath::from_trajectory(thin), std::invalid_argument);
}

TEST_CASE("pullback deviation of the constant-height path has the closed form") {
  // Path A(t) = (t, b): the flow pulled back from A(t0 + h) differs from A(t0)
  // by b h / (1 + t0) in the second coordinate, so the window sup is b T / (1 + t0).
  Objective obj = make_objective("apt_counterexample");
  FlowMap fm(obj);
  const double b = 1.0, T = 2.0;
  std::vector<double> times, heights;
  std::vector<Vec> pts;
  for (double t = 0.0; t <= 104.0; t += 0.5) {
    times.push_back(t);
    pts.push_back(vec2(t, b));
  }
  InterpolatedPath path(times, pts);
  for (double t0 : {0.0, 1.0, 9.0, 99.0}) {
    AptDeviation dev = apt_deviation(path, fm, t0, T, 65);
    CHECK(dev.value == doctest::Approx(b * T / (1.0 + t0)).epsilon(1e-6));
    CHECK(dev.argmax_offset == doctest::Approx(T).epsilon(1e-9));
    CHECK(dev.n_probes >= 65);
  }
  // A path sampled from the flow itself deviates by integrator error only.
  std::vector<double> ft;
  std::vector<Vec> fp;
  for (const auto& [t, x] : fm.orbit(vec2(0.0, 1.0), 8.0, 0.01)) {
    ft.push_back(t);
    fp.push_back(x);
  }
  InterpolatedPath fpath(ft, fp);
  AptDeviation near_zero = apt_deviation(fpath, fm, 1.0, 2.0, 33);
  CHECK(near_zero.value <= 2e-5);  // interpolation error of the 0.01 grid

  auto profile = apt_profile(path, fm, {0.0, 1.0, 9.0}, T, 33);
  REQUIRE(profile.size() == 3);
  CHECK(profile[0].t0 == 0.0);
  for (const auto& p : profile)
    CHECK(p.deviation == doctest::Approx(b * T / (1.0 + p.t0)).epsilon(1e-6));
  CHECK(profile[0].deviation > profile[1].deviation);
  CHECK(profile[1].deviation > profile[2].deviation);

  CHECK_THROWS_AS(apt_deviation(path, fm, 103.0, 2.0, 33), std::out_of_range);
}

TEST_CASE("descent check passes on gradient flows and records the terminal state") {
  Objective obj = make_objective("quadratic", {{"lambda", {2.0, 0.5}}});
  FlowMap fm(obj);
  // Rate residual scales like dt^2 times the third time-derivative of f,
  // about 64 dt^2 / 12 here; dt = 0.005 leaves a 7x margin under 1e-3.
  LyapunovReport rep = lyapunov_check(fm, vec2(1.0, -1.0), 8.0, 0.005);
  CHECK(rep.max_increase <= 0.0);
  CHECK(rep.max_rate_residual <= 1e-3);
  CHECK(rep.terminal_f < 1e-3);
  CHECK(rep.terminal_grad_norm < 0.1);
  CHECK(rep.terminal_feature_distance < 0.1);

  // The flat-tailed well descends toward the origin, however slowly: from
  // radius 2 the pull is weak but strictly inward.
  Objective well = make_objective("gaussian_well", {{"dim", {1.0}}});
  FlowMap wf(well);
  LyapunovReport wr = lyapunov_check(wf, vec1(2.0), 10.0, 0.1);
  CHECK(wr.max_increase <= 0.0);
  CHECK(wr.terminal_f < well.eval(vec1(2.0)));
  CHECK(wr.terminal_point[0] < 2.0);
  CHECK(wr.terminal_point[0] > 0.0);
}
