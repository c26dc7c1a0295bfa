#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sgdlab/objectives.hpp"

using namespace sgdlab;

namespace {

Vec test_point(int dim, double scale, int variant) {
  // Generic points with no coordinate on a symmetry axis.
  Vec x(dim);
  for (int i = 0; i < dim; ++i)
    x[i] = scale * (0.7 - 0.31 * i + 0.13 * variant * (i % 2 ? -1 : 1));
  return x;
}

void check_gradient_fd(const Objective& obj, const Vec& x, double rel_tol) {
  const double h = 1e-5 * std::max(1.0, x.norm());
  Vec g = obj.grad(x);
  double scale = std::max(1.0, g.norm());
  for (int i = 0; i < obj.dim; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    double fd = (obj.eval(xp) - obj.eval(xm)) / (2.0 * h);
    CHECK(std::abs(fd - g[i]) <= rel_tol * scale);
  }
}

void check_hessian_fd(const Objective& obj, const Vec& x, double rel_tol) {
  const double h = 1e-5 * std::max(1.0, x.norm());
  Mat H = obj.hess(x);
  double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  for (int j = 0; j < obj.dim; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    Vec col = (obj.grad(xp) - obj.grad(xm)) / (2.0 * h);
    for (int i = 0; i < obj.dim; ++i)
      CHECK(std::abs(col[i] - H(i, j)) <= rel_tol * scale);
  }
}

}  // namespace

TEST_CASE("catalog lists every constructible objective") {
  auto names = objective_catalog();
  CHECK(names.size() == 8);
  for (const auto& name : names) {
    Objective obj = make_objective(name);
    CHECK(obj.name == name);
    CHECK(obj.dim >= 1);
    CHECK(obj.eval);
    CHECK(obj.grad_into);
    CHECK(obj.hess_into);
    CHECK(obj.flow_field);
  }
}

TEST_CASE("gradients and hessians agree with central differences at three scales") {
  for (const auto& name : objective_catalog()) {
    Objective obj = make_objective(name);
    for (int variant = 0; variant < 2; ++variant) {
      for (double scale : {0.3, 1.0, 3.0}) {
        Vec x = test_point(obj.dim, scale, variant);
        if (name == "apt_counterexample") x[0] = std::abs(x[0]);  // stay off x0 = -1
        CAPTURE(name);
        CAPTURE(scale);
        check_gradient_fd(obj, x, 1e-6);
        check_hessian_fd(obj, x, 1e-5);
      }
    }
  }
}

TEST_CASE("quadratic: closed forms and parameter validation") {
  Objective obj = make_objective("quadratic", {{"lambda", {2.0, 0.5}}});
  CHECK(obj.dim == 2);
  Vec x(2);
  x << 1.0, 4.0;
  CHECK(obj.eval(x) == doctest::Approx(0.5 * (2.0 + 8.0)).epsilon(1e-15));
  Vec g = obj.grad(x);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 2.0);
  CHECK(obj.assumptions.bounded_sublevels);
  REQUIRE(obj.critical_set.size() == 1);
  const CriticalFeature& f = obj.critical_set[0];
  CHECK(f.kind == FeatureKind::hurwicz_minimizer);
  REQUIRE(f.hurwicz.has_value());
  CHECK(f.hurwicz->q_min == 0.5);
  CHECK(f.hurwicz->q_max == 2.0);

  CHECK_THROWS_AS(make_objective("quadratic", {{"lambda", {1.0, -1.0}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_objective("quadratic", {{"lambda", {}}}), std::invalid_argument);
  CHECK_THROWS_AS(make_objective("nope"), std::invalid_argument);
  CHECK_THROWS_AS(make_objective("quadratic", {{"dim", {3.0}}}), std::invalid_argument);
}

TEST_CASE("hurwicz bounds hold on sampled rays inside the declared radius") {
  for (const char* name : {"quadratic", "rosenbrock", "gaussian_well"}) {
    Objective obj = make_objective(name);
    const CriticalFeature* mini = nullptr;
    for (const auto& f : obj.critical_set)
      if (f.kind == FeatureKind::hurwicz_minimizer) mini = &f;
    REQUIRE(mini != nullptr);
    REQUIRE(mini->hurwicz.has_value());
    const HurwiczBounds& hb = *mini->hurwicz;
    CHECK(hb.q_min > 0.0);
    CHECK(hb.q_max >= hb.q_min);
    CHECK(hb.k_radius > 0.0);

    std::mt19937_64 rng(123);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(1e-3, 1.0);
    for (int k = 0; k < 2000; ++k) {
      Vec u(obj.dim);
      for (int i = 0; i < obj.dim; ++i) u[i] = normal(rng);
      u.normalize();
      double rho = hb.k_radius * unif(rng);
      Vec x = mini->point + rho * u;
      double ratio = obj.grad(x).dot(x - mini->point) / (rho * rho);
      CAPTURE(name);
      CHECK(ratio >= hb.q_min * (1.0 - 1e-9));
      CHECK(ratio <= hb.q_max * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("saddle features: locus geometry and spectra") {
  Objective hyp = make_objective("hyperbolic_saddle");
  REQUIRE(hyp.critical_set.size() == 1);
  const CriticalFeature& hf = hyp.critical_set[0];
  CHECK(hf.kind == FeatureKind::strict_saddle_point);
  REQUIRE(hf.spectrum.has_value());
  CHECK(hf.spectrum->c_minus == 1.0);
  CHECK(hf.spectrum->c_plus == 1.0);
  Vec x(2);
  x << 3.0, -4.0;
  CHECK(hf.distance(x) == doctest::Approx(5.0));

  Objective ridge = make_objective("ridge", {{"dim", {4.0}}});
  CHECK(ridge.dim == 4);
  const CriticalFeature& rf = ridge.critical_set[0];
  CHECK(rf.kind == FeatureKind::strict_saddle_manifold);
  for (double s : {-1.0, -0.25, 0.0, 0.5, 1.0}) {
    Vec p = rf.locus_point(s);
    CHECK(ridge.grad(p).norm() == 0.0);  // locus points are critical
    CHECK(rf.distance(p) == 0.0);
    // Transverse spectrum at every locus point: eigenvalues {1, -1, 0}.
    Mat H = ridge.hess(p);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    CHECK(es.eigenvalues().minCoeff() == doctest::Approx(-1.0));
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(make_objective("ridge", {{"dim", {2.0}}}), std::invalid_argument);

  Objective monkey = make_objective("monkey_saddle");
  CHECK(monkey.critical_set[0].kind == FeatureKind::degenerate);
  CHECK(monkey.hess(Vec::Zero(2)).norm() == 0.0);  // fully singular at the origin
}

TEST_CASE("apt_counterexample: exact gradient and non-gradient flow field") {
  Objective obj = make_objective("apt_counterexample");
  CHECK_FALSE(obj.gradient_flow);
  Vec x(2);
  x << 2.0, 3.0;
  Vec g = obj.grad(x);
  CHECK(g[0] == -1.0);
  CHECK(g[1] == 3.0);
  Vec v(2);
  obj.flow_field(x, v);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == doctest::Approx(-1.0));  // -x1 / (1 + x0) = -3/3
  // The declared field is not the negative gradient anywhere off x1 = 0.
  CHECK(v[1] != -g[1]);
}

TEST_CASE("default flow field is the negative gradient") {
  Objective obj = make_objective("quadratic", {{"lambda", {1.5}}});
  CHECK(obj.gradient_flow);
  Vec x(1);
  x << 2.0;
  Vec v(1);
  obj.flow_field(x, v);
  CHECK(v[0] == -obj.grad(x)[0]);
}

TEST_CASE("declared gradient and smoothness constants survive box sampling") {
  Objective lin = make_objective("linear_divergent");
  AssumptionReport lr = check_assumptions(lin, 100.0, 5000, 1);
  CHECK(lr.gradient_bound_holds);
  CHECK(lr.lipschitz_bound_holds);
  CHECK(lr.sup_grad_norm == doctest::Approx(1.0));
  CHECK(lr.max_lipschitz_ratio <= 1e-12);

  Objective well = make_objective("gaussian_well");
  AssumptionReport wr = check_assumptions(well, 10.0, 20000, 2);
  CHECK(wr.gradient_bound_holds);  // sup |grad| = sqrt(2/e)
  CHECK(wr.lipschitz_bound_holds); // |hess| <= 2
  CHECK(wr.sup_grad_norm <= std::sqrt(2.0 / std::exp(1.0)) + 1e-12);
  CHECK(wr.sup_grad_norm >= 0.95 * std::sqrt(2.0 / std::exp(1.0)));

  // Unbounded-gradient objectives must not claim a constant.
  Objective quad = make_objective("quadratic");
  CHECK_FALSE(quad.lipschitz_G.has_value());
  AssumptionReport qr = check_assumptions(quad, 10.0, 5000, 3);
  CHECK(qr.gradient_bound_holds);   // vacuous: nothing declared
  CHECK(qr.max_lipschitz_ratio <= 1.0 + 1e-9);  // smooth_L = max lambda = 1
}

TEST_CASE("assumption flags match the catalog contract") {
  CHECK(make_objective("linear_divergent").assumptions.bounded_gradient);
  CHECK_FALSE(make_objective("linear_divergent").assumptions.bounded_sublevels);
  CHECK(make_objective("quadratic").assumptions.bounded_sublevels);
  CHECK(make_objective("rosenbrock").assumptions.bounded_sublevels);
  CHECK_FALSE(make_objective("hyperbolic_saddle").assumptions.bounded_sublevels);
  CHECK(make_objective("gaussian_well").assumptions.bounded_gradient);
}
