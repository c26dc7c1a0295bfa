#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/types.hpp"

namespace sgdlab {

enum class FeatureKind {
  hurwicz_minimizer,      // isolated minimizer, variational inequality holds nearby
  strict_saddle_point,    // isolated critical point with a negative Hessian direction
  strict_saddle_manifold, // connected critical set, uniformly strict transverse spectrum
  degenerate              // critical point with singular Hessian
};

std::string to_string(FeatureKind k);

// <grad f(x), x - x*> lies in [q_min, q_max] * |x - x*|^2 for every x in the
// closed ball of radius k_radius around the minimizer x*.
struct HurwiczBounds {
  double q_min = 0.0;
  double q_max = 0.0;
  double k_radius = 0.0;
};

// Uniform spectral bounds over the feature locus: the smallest Hessian
// eigenvalue is <= -c_minus and the spectral norm is <= c_plus.
struct SpectrumBounds {
  double c_minus = 0.0;
  double c_plus = 0.0;
};

struct CriticalFeature {
  FeatureKind kind = FeatureKind::hurwicz_minimizer;
  std::string name;
  Vec point;                                   // representative locus point
  std::function<double(const Vec&)> distance;  // Euclidean distance to the locus
  std::function<Vec(double)> locus_point;      // parametric sample, s in [-1, 1]
  std::optional<SpectrumBounds> spectrum;      // saddle features only
  std::optional<HurwiczBounds> hurwicz;        // minimizer features only
  double scale = 1.0;                          // length scale for classification tolerances
};

struct AssumptionFlags {
  bool bounded_gradient = false;      // sup_x |grad f(x)| finite
  bool bounded_sublevels = false;     // {f <= c} bounded for every c
  bool bounded_near_critical = false; // {|grad f| <= eps} bounded for some eps > 0
};

struct Objective {
  std::string name;
  int dim = 0;
  std::function<double(const Vec&)> eval;
  std::function<void(const Vec&, Vec&)> grad_into;
  std::function<void(const Vec&, Mat&)> hess_into;
  std::optional<double> lipschitz_G;  // empty when the gradient is unbounded
  std::optional<double> smooth_L;     // empty when the Hessian norm is unbounded
  AssumptionFlags assumptions;
  std::vector<CriticalFeature> critical_set;

  // Velocity field of the associated continuous-time dynamics. Defaults to
  // the negative gradient; catalog entries may declare a different field.
  std::function<void(const Vec&, Vec&)> flow_field;
  // True when flow_field is exactly the negative gradient, which licenses
  // the df/dt = -|grad f|^2 identity along orbits.
  bool gradient_flow = true;

  // Distance to the center-stable manifold of the saddle feature, when known
  // in closed form. Required by the energy diagnostics, absent otherwise.
  std::function<double(const Vec&)> unstable_distance;

  // Deterministic point on the stable manifold (or on the locus itself) of
  // critical feature `i`; used as an adversarial initial condition.
  std::function<Vec(std::size_t)> stable_point;

  Vec grad(const Vec& x) const {
    Vec g(dim);
    grad_into(x, g);
    return g;
  }
  Mat hess(const Vec& x) const {
    Mat h(dim, dim);
    hess_into(x, h);
    return h;
  }
};

// Catalog constructor. Throws std::invalid_argument for unknown names or
// parameter values outside an entry's admissible range.
Objective make_objective(const std::string& name, const ParamMap& params = {});

std::vector<std::string> objective_catalog();

struct AssumptionReport {
  double domain_halfwidth = 0.0;
  double sup_grad_norm = 0.0;        // max |grad f| over the sampled box
  double max_lipschitz_ratio = 0.0;  // max |grad f(x) - grad f(y)| / |x - y|
  AssumptionFlags declared;
  bool gradient_bound_holds = true;  // sup_grad_norm <= declared G, when declared
  bool lipschitz_bound_holds = true; // max ratio <= declared L, when declared
};

// Samples the box [-r, r]^dim uniformly; pairs for the Lipschitz ratio are
// consecutive draws. Purely empirical: a true flag cannot be certified, only
// contradicted on the sampled domain.
AssumptionReport check_assumptions(const Objective& obj, double domain_halfwidth,
                                   int n_samples = 10000, std::uint64_t seed = 0);

}  // namespace sgdlab
