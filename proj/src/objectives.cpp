#include "sgdlab/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace sgdlab {

std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::hurwicz_minimizer: return "hurwicz_minimizer";
    case FeatureKind::strict_saddle_point: return "strict_saddle_point";
    case FeatureKind::strict_saddle_manifold: return "strict_saddle_manifold";
    case FeatureKind::degenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

std::vector<double> get_param(const ParamMap& params, const std::string& key,
                              std::vector<double> fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double get_scalar(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 1)
    throw std::invalid_argument("parameter '" + key + "' expects a single value");
  return it->second[0];
}

CriticalFeature point_feature(FeatureKind kind, const std::string& name, Vec p) {
  CriticalFeature f;
  f.kind = kind;
  f.name = name;
  f.point = p;
  f.distance = [p](const Vec& x) { return (x - p).norm(); };
  f.locus_point = [p](double) { return p; };
  return f;
}

Objective make_quadratic(const ParamMap& params) {
  std::vector<double> lam = get_param(params, "lambda", {1.0, 1.0});
  if (lam.empty()) throw std::invalid_argument("quadratic: lambda must be nonempty");
  for (double l : lam)
    if (!(l > 0.0)) throw std::invalid_argument("quadratic: curvatures must be positive");
  const int d = static_cast<int>(lam.size());
  Vec L = Eigen::Map<const Vec>(lam.data(), d);
  double k_radius = get_scalar(params, "k_radius", 10.0);

  Objective obj;
  obj.name = "quadratic";
  obj.dim = d;
  obj.eval = [L](const Vec& x) { return 0.5 * x.cwiseProduct(L).dot(x); };
  obj.grad_into = [L](const Vec& x, Vec& g) { g = L.cwiseProduct(x); };
  obj.hess_into = [L](const Vec&, Mat& h) { h = L.asDiagonal(); };
  obj.lipschitz_G = std::nullopt;
  obj.smooth_L = L.maxCoeff();
  obj.assumptions = {false, true, true};

  CriticalFeature f = point_feature(FeatureKind::hurwicz_minimizer, "origin", Vec::Zero(d));
  f.hurwicz = HurwiczBounds{L.minCoeff(), L.maxCoeff(), k_radius};
  obj.critical_set.push_back(std::move(f));
  return obj;
}

Objective make_hyperbolic_saddle(const ParamMap&) {
  Objective obj;
  obj.name = "hyperbolic_saddle";
  obj.dim = 2;
  obj.eval = [](const Vec& x) { return 0.5 * (x[0] * x[0] - x[1] * x[1]); };
  obj.grad_into = [](const Vec& x, Vec& g) {
    g[0] = x[0];
    g[1] = -x[1];
  };
  obj.hess_into = [](const Vec&, Mat& h) {
    h.setZero();
    h(0, 0) = 1.0;
    h(1, 1) = -1.0;
  };
  obj.lipschitz_G = std::nullopt;
  obj.smooth_L = 1.0;
  obj.assumptions = {false, false, true};

  CriticalFeature f = point_feature(FeatureKind::strict_saddle_point, "origin", Vec::Zero(2));
  f.spectrum = SpectrumBounds{1.0, 1.0};
  obj.critical_set.push_back(std::move(f));

  // Center-stable manifold of the saddle is the first axis.
  obj.unstable_distance = [](const Vec& x) { return std::abs(x[1]); };
  obj.stable_point = [](std::size_t) {
    Vec p = Vec::Zero(2);
    p[0] = 1.0;
    return p;
  };
  return obj;
}

// Stable coordinates x_1..x_{d-2}, one unstable coordinate x_{d-1}, and a
// free coordinate x_d, so the critical set is the x_d-axis: a line of
// strict saddles with transverse spectrum {+1, -1} at every point.
Objective make_ridge(const ParamMap& params) {
  const int d = static_cast<int>(get_scalar(params, "dim", 3.0));
  if (d < 3) throw std::invalid_argument("ridge: dim must be >= 3");
  const int u = d - 2;  // unstable coordinate index

  Objective obj;
  obj.name = "ridge";
  obj.dim = d;
  obj.eval = [u](const Vec& x) {
    return 0.5 * (x.head(u).squaredNorm() - x[u] * x[u]);
  };
  obj.grad_into = [u, d](const Vec& x, Vec& g) {
    g.head(u) = x.head(u);
    g[u] = -x[u];
    g[d - 1] = 0.0;
  };
  obj.hess_into = [u, d](const Vec&, Mat& h) {
    h.setZero();
    for (int i = 0; i < u; ++i) h(i, i) = 1.0;
    h(u, u) = -1.0;
    h(d - 1, d - 1) = 0.0;
  };
  obj.lipschitz_G = std::nullopt;
  obj.smooth_L = 1.0;
  obj.assumptions = {false, false, false};

  CriticalFeature f;
  f.kind = FeatureKind::strict_saddle_manifold;
  f.name = "axis";
  f.point = Vec::Zero(d);
  f.distance = [d](const Vec& x) { return x.head(d - 1).norm(); };
  f.locus_point = [d](double s) {
    Vec p = Vec::Zero(d);
    p[d - 1] = s;
    return p;
  };
  f.spectrum = SpectrumBounds{1.0, 1.0};
  obj.critical_set.push_back(std::move(f));

  obj.unstable_distance = [u](const Vec& x) { return std::abs(x[u]); };
  obj.stable_point = [d](std::size_t) {
    Vec p = Vec::Zero(d);
    p[d - 1] = 0.5;
    return p;
  };
  return obj;
}

Objective make_monkey_saddle(const ParamMap&) {
  Objective obj;
  obj.name = "monkey_saddle";
  obj.dim = 2;
  obj.eval = [](const Vec& x) { return x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1]; };
  obj.grad_into = [](const Vec& x, Vec& g) {
    g[0] = 3.0 * (x[0] * x[0] - x[1] * x[1]);
    g[1] = -6.0 * x[0] * x[1];
  };
  obj.hess_into = [](const Vec& x, Mat& h) {
    h(0, 0) = 6.0 * x[0];
    h(0, 1) = -6.0 * x[1];
    h(1, 0) = -6.0 * x[1];
    h(1, 1) = -6.0 * x[0];
  };
  obj.lipschitz_G = std::nullopt;
  obj.smooth_L = std::nullopt;
  obj.assumptions = {false, false, true};
  obj.critical_set.push_back(
      point_feature(FeatureKind::degenerate, "origin", Vec::Zero(2)));
  return obj;
}

Objective make_rosenbrock(const ParamMap&) {
  Objective obj;
  obj.name = "rosenbrock";
  obj.dim = 2;
  obj.eval = [](const Vec& v) {
    double x = v[0], y = v[1];
    double a = 1.0 - x, b = y - x * x;
    return a * a + 100.0 * b * b;
  };
  obj.grad_into = [](const Vec& v, Vec& g) {
    double x = v[0], y = v[1];
    double b = y - x * x;
    g[0] = -2.0 * (1.0 - x) - 400.0 * x * b;
    g[1] = 200.0 * b;
  };
  obj.hess_into = [](const Vec& v, Mat& h) {
    double x = v[0], y = v[1];
    h(0, 0) = 2.0 + 1200.0 * x * x - 400.0 * y;
    h(0, 1) = -400.0 * x;
    h(1, 0) = -400.0 * x;
    h(1, 1) = 200.0;
  };
  obj.lipschitz_G = std::nullopt;
  obj.smooth_L = std::nullopt;
  obj.assumptions = {false, true, true};

  Vec m(2);
  m << 1.0, 1.0;
  CriticalFeature f = point_feature(FeatureKind::hurwicz_minimizer, "minimizer", m);
  // Sampled bound on the radius-0.02 ball with margin; the quadratic form of
  // the Hessian at the minimizer has eigenvalues ~0.399 and ~1001.6.
  f.hurwicz = HurwiczBounds{0.35, 1100.0, 0.02};
  obj.critical_set.push_back(std::move(f));
  return obj;
}

// f(x) = x_2^2/2 - x_1, whose gradient (-1, x_2) never vanishes. Paired with
// a pseudo-gradient field whose solutions are (t, b/(1+t)): descent holds,
// yet the second coordinate relaxes only at an ever-slowing rate.
Objective make_apt_counterexample(const ParamMap&) {
  Objective obj;
  obj.name = "apt_counterexample";
  obj.dim = 2;
  obj.eval = [](const Vec& x) { return 0.5 * x[1] * x[1] - x[0]; };
  obj.grad_into = [](const Vec& x, Vec& g) {
    g[0] = -1.0;
    g[1] = x[1];
  };
  obj.hess_into = [](const Vec&, Mat& h) {
    h.setZero();
    h(1, 1) = 1.0;
  };
  obj.flow_field = [](const Vec& x, Vec& v) {
    v[0] = 1.0;
    v[1] = -x[1] / (1.0 + x[0]);
  };
  obj.gradient_flow = false;
  obj.lipschitz_G = std::nullopt;
  obj.smooth_L = 1.0;
  obj.assumptions = {false, false, true};
  return obj;
}

Objective make_linear_divergent(const ParamMap&) {
  Objective obj;
  obj.name = "linear_divergent";
  obj.dim = 1;
  obj.eval = [](const Vec& x) { return -x[0]; };
  obj.grad_into = [](const Vec&, Vec& g) { g[0] = -1.0; };
  obj.hess_into = [](const Vec&, Mat& h) { h(0, 0) = 0.0; };
  obj.lipschitz_G = 1.0;
  obj.smooth_L = 0.0;
  obj.assumptions = {true, false, true};
  return obj;
}

Objective make_gaussian_well(const ParamMap& params) {
  const int d = static_cast<int>(get_scalar(params, "dim", 1.0));
  if (d < 1) throw std::invalid_argument("gaussian_well: dim must be >= 1");

  Objective obj;
  obj.name = "gaussian_well";
  obj.dim = d;
  obj.eval = [](const Vec& x) { return -std::exp(-x.squaredNorm()); };
  obj.grad_into = [](const Vec& x, Vec& g) {
    g = (2.0 * std::exp(-x.squaredNorm())) * x;
  };
  obj.hess_into = [d](const Vec& x, Mat& h) {
    double e = std::exp(-x.squaredNorm());
    h = Mat::Identity(d, d) * (2.0 * e);
    h.noalias() -= (4.0 * e) * (x * x.transpose());
  };
  // max of 2 r exp(-r^2) is sqrt(2/e); Hessian norm peaks at the origin.
  obj.lipschitz_G = std::sqrt(2.0 / std::exp(1.0));
  obj.smooth_L = 2.0;
  obj.assumptions = {true, false, false};

  CriticalFeature f = point_feature(FeatureKind::hurwicz_minimizer, "origin", Vec::Zero(d));
  // <grad f(x), x> / |x|^2 = 2 exp(-|x|^2), between 2 e^{-1/4} and 2 on the
  // radius-0.5 ball.
  f.hurwicz = HurwiczBounds{1.55, 2.0, 0.5};
  obj.critical_set.push_back(std::move(f));
  return obj;
}

}  // namespace

namespace {

void reject_unknown_params(const std::string& name, const ParamMap& params,
                           std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok)
      throw std::invalid_argument(name + ": unknown parameter '" + key + "'");
  }
}

}  // namespace

Objective make_objective(const std::string& name, const ParamMap& params) {
  Objective obj;
  if (name == "quadratic") {
    reject_unknown_params(name, params, {"lambda", "k_radius"});
    obj = make_quadratic(params);
  } else if (name == "hyperbolic_saddle") {
    reject_unknown_params(name, params, {});
    obj = make_hyperbolic_saddle(params);
  } else if (name == "ridge") {
    reject_unknown_params(name, params, {"dim"});
    obj = make_ridge(params);
  } else if (name == "monkey_saddle") {
    reject_unknown_params(name, params, {});
    obj = make_monkey_saddle(params);
  } else if (name == "rosenbrock") {
    reject_unknown_params(name, params, {});
    obj = make_rosenbrock(params);
  } else if (name == "apt_counterexample") {
    reject_unknown_params(name, params, {});
    obj = make_apt_counterexample(params);
  } else if (name == "linear_divergent") {
    reject_unknown_params(name, params, {});
    obj = make_linear_divergent(params);
  } else if (name == "gaussian_well") {
    reject_unknown_params(name, params, {"dim"});
    obj = make_gaussian_well(params);
  } else {
    throw std::invalid_argument("unknown objective: " + name);
  }

  if (!obj.flow_field) {
    auto grad = obj.grad_into;
    obj.flow_field = [grad](const Vec& x, Vec& v) {
      grad(x, v);
      v = -v;
    };
  }
  return obj;
}

std::vector<std::string> objective_catalog() {
  return {"quadratic",  "hyperbolic_saddle", "ridge",
          "monkey_saddle", "rosenbrock",     "apt_counterexample",
          "linear_divergent", "gaussian_well"};
}

AssumptionReport check_assumptions(const Objective& obj, double domain_halfwidth,
                                   int n_samples, std::uint64_t seed) {
  AssumptionReport rep;
  rep.domain_halfwidth = domain_halfwidth;
  rep.declared = obj.assumptions;

  Rng rng(derive_seed(seed, 0x41u));
  std::uniform_real_distribution<double> unif(-domain_halfwidth, domain_halfwidth);

  Vec x(obj.dim), g(obj.dim), x_prev(obj.dim), g_prev(obj.dim);
  bool have_prev = false;
  for (int i = 0; i < n_samples; ++i) {
    for (int k = 0; k < obj.dim; ++k) x[k] = unif(rng);
    obj.grad_into(x, g);
    rep.sup_grad_norm = std::max(rep.sup_grad_norm, g.norm());
    if (have_prev) {
      double dx = (x - x_prev).norm();
      if (dx > 0.0)
        rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, (g - g_prev).norm() / dx);
    }
    x_prev = x;
    g_prev = g;
    have_prev = true;
  }

  if (obj.lipschitz_G)
    rep.gradient_bound_holds = rep.sup_grad_norm <= *obj.lipschitz_G * (1.0 + 1e-12);
  if (obj.smooth_L)
    rep.lipschitz_bound_holds = rep.max_lipschitz_ratio <= *obj.smooth_L * (1.0 + 1e-9);
  return rep;
}

}  // namespace sgdlab
