#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/objectives.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

// Additive zero-mean noise attached to gradient evaluations.
// moment_order_q is the declared q with (E |xi|^q)^{1/q} <= moment_bound_sigma;
// q = +infinity means |xi| <= sigma almost surely.
struct NoiseModel {
  std::string name;
  int dim = 0;
  double moment_order_q = 2.0;
  double moment_bound_sigma = 0.0;
  // inf over unit directions u of E max(<xi, u>, 0), when known in closed
  // form; empty when the model is not (or not provably) uniformly exciting.
  std::optional<double> excitation_c;
  // Draws one realization into `out`; advances the generator deterministically.
  std::function<void(const Vec& x, Rng&, Vec&)> sample_into;

  Vec sample(const Vec& x, Rng& rng) const {
    Vec out(dim);
    sample_into(x, rng, out);
    return out;
  }
};

// Catalog constructor. Names: gaussian, sphere, ball, student_t, zero.
// Throws std::invalid_argument for unknown names or invalid parameters.
NoiseModel make_noise(const std::string& name, int dim, const ParamMap& params = {});

std::vector<std::string> noise_catalog();

struct OracleSample {
  Vec signal;  // grad f(x) + error (one rounding per component), fed to the iteration
  Vec error;   // the raw noise draw, distributed exactly per the model
};

// Throws std::domain_error when the gradient is non-finite at x.
OracleSample sample_oracle(const Objective& obj, const NoiseModel& noise, const Vec& x,
                           Rng& rng);

struct ExcitationEstimate {
  double c_hat = 0.0;       // min over probed directions of mean <xi, u>^+
  double stderr_ = 0.0;     // standard error of the minimizing direction's mean
  Vec worst_direction;
};

// Monte Carlo lower-envelope estimate over n_directions random unit vectors,
// reusing one batch of n_samples draws across directions.
ExcitationEstimate estimate_excitation(const NoiseModel& noise, const Vec& x,
                                       int n_samples, int n_directions, Rng& rng);

}  // namespace sgdlab
