#include "sgdlab/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace sgdlab {

namespace {

double get_scalar(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 1)
    throw std::invalid_argument("parameter '" + key + "' expects a single value");
  return it->second[0];
}

// E max(<u, e1>, 0) for u uniform on the unit sphere in dimension d.
double unit_sphere_half_mean(int d) {
  if (d == 1) return 0.5;
  return std::exp(std::lgamma(0.5 * d) - std::lgamma(0.5 * (d - 1))) /
         ((d - 1) * std::sqrt(M_PI));
}

// (E chi_d^q)^{1/q}: the q-th norm of the length of a standard normal vector.
double chi_norm(int d, double q) {
  return std::exp(((0.5 * q) * std::log(2.0) + std::lgamma(0.5 * (d + q)) -
                   std::lgamma(0.5 * d)) /
                  q);
}

// (E |t_nu|^q)^{1/q}, finite for q < nu.
double student_abs_norm(double nu, double q) {
  double log_m = 0.5 * q * std::log(nu) + std::lgamma(0.5 * (q + 1.0)) +
                 std::lgamma(0.5 * (nu - q)) - 0.5 * std::log(M_PI) -
                 std::lgamma(0.5 * nu);
  return std::exp(log_m / q);
}

void fill_gaussian(Rng& rng, double s, Vec& out) {
  // Fresh distribution per call: no cached spare leaks across calls, so the
  // draw is a pure function of the generator state.
  std::normal_distribution<double> nd(0.0, s);
  for (int i = 0; i < out.size(); ++i) out[i] = nd(rng);
}

void fill_unit_sphere(Rng& rng, Vec& out) {
  do {
    fill_gaussian(rng, 1.0, out);
  } while (out.norm() < 1e-12);
  out /= out.norm();
}

}  // namespace

NoiseModel make_noise(const std::string& name, int dim, const ParamMap& params) {
  if (dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
  {
    static const std::map<std::string, std::vector<std::string>> allowed = {
        {"gaussian", {"sigma", "q"}}, {"sphere", {"sigma"}},   {"ball", {"sigma"}},
        {"student_t", {"sigma", "nu"}}, {"zero", {}}};
    auto it = allowed.find(name);
    if (it == allowed.end()) throw std::invalid_argument("unknown noise model: " + name);
    for (const auto& [key, value] : params) {
      bool ok = false;
      for (const auto& a : it->second)
        if (key == a) ok = true;
      if (!ok)
        throw std::invalid_argument(name + ": unknown parameter '" + key + "'");
    }
  }
  NoiseModel m;
  m.name = name;
  m.dim = dim;

  if (name == "gaussian") {
    double s = get_scalar(params, "sigma", 1.0);
    double q = get_scalar(params, "q", 4.0);
    if (!(s >= 0.0)) throw std::invalid_argument("gaussian: sigma must be >= 0");
    if (!(q >= 2.0) || std::isinf(q))
      throw std::invalid_argument("gaussian: declared q must be finite and >= 2");
    m.moment_order_q = q;
    m.moment_bound_sigma = s * chi_norm(dim, q);
    m.excitation_c = s / std::sqrt(2.0 * M_PI);
    m.sample_into = [s](const Vec&, Rng& rng, Vec& out) { fill_gaussian(rng, s, out); };
  } else if (name == "sphere") {
    double s = get_scalar(params, "sigma", 1.0);
    if (!(s >= 0.0)) throw std::invalid_argument("sphere: sigma must be >= 0");
    m.moment_order_q = std::numeric_limits<double>::infinity();
    m.moment_bound_sigma = s;
    m.excitation_c = s * unit_sphere_half_mean(dim);
    m.sample_into = [s](const Vec&, Rng& rng, Vec& out) {
      fill_unit_sphere(rng, out);
      out *= s;
    };
  } else if (name == "ball") {
    double s = get_scalar(params, "sigma", 1.0);
    if (!(s >= 0.0)) throw std::invalid_argument("ball: sigma must be >= 0");
    m.moment_order_q = std::numeric_limits<double>::infinity();
    m.moment_bound_sigma = s;
    // radius and direction are independent; E radius = sigma * d / (d + 1)
    m.excitation_c = s * dim / (dim + 1.0) * unit_sphere_half_mean(dim);
    int d = dim;
    m.sample_into = [s, d](const Vec&, Rng& rng, Vec& out) {
      fill_unit_sphere(rng, out);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      out *= s * std::pow(unif(rng), 1.0 / d);
    };
  } else if (name == "student_t") {
    double nu = get_scalar(params, "nu", 3.0);
    double s = get_scalar(params, "sigma", 1.0);
    if (!(nu >= 2.5))
      throw std::invalid_argument("student_t: nu must be >= 2.5 so the declared order is >= 2");
    if (!(s >= 0.0)) throw std::invalid_argument("student_t: sigma must be >= 0");
    double q = nu - 0.5;  // declared strictly below nu, where moments exist
    m.moment_order_q = q;
    // |xi|_{L^q} <= sum_i |xi_i|_{L^q} by the triangle inequality.
    m.moment_bound_sigma = s * dim * student_abs_norm(nu, q);
    m.excitation_c = std::nullopt;
    m.sample_into = [s, nu](const Vec&, Rng& rng, Vec& out) {
      std::student_t_distribution<double> td(nu);
      for (int i = 0; i < out.size(); ++i) out[i] = s * td(rng);
    };
  } else if (name == "zero") {
    m.moment_order_q = std::numeric_limits<double>::infinity();
    m.moment_bound_sigma = 0.0;
    m.excitation_c = 0.0;
    m.sample_into = [](const Vec&, Rng&, Vec& out) { out.setZero(); };
  } else {
    throw std::invalid_argument("unknown noise model: " + name);
  }
  return m;
}

std::vector<std::string> noise_catalog() {
  return {"gaussian", "sphere", "ball", "student_t", "zero"};
}

OracleSample sample_oracle(const Objective& obj, const NoiseModel& noise, const Vec& x,
                           Rng& rng) {
  OracleSample s;
  s.signal.resize(obj.dim);
  obj.grad_into(x, s.signal);
  if (!s.signal.allFinite())
    throw std::domain_error("gradient is non-finite at the query point");
  s.error.resize(obj.dim);
  noise.sample_into(x, rng, s.error);
  // signal = grad + error with one rounding per component; error keeps the
  // raw draw so its statistics are exactly the model's.
  s.signal += s.error;
  return s;
}

ExcitationEstimate estimate_excitation(const NoiseModel& noise, const Vec& x,
                                       int n_samples, int n_directions, Rng& rng) {
  if (n_samples < 10000)
    throw std::invalid_argument("estimate_excitation: n_samples must be >= 10000");
  if (n_directions < 1)
    throw std::invalid_argument("estimate_excitation: n_directions must be >= 1");

  Mat draws(noise.dim, n_samples);
  Vec xi(noise.dim);
  for (int j = 0; j < n_samples; ++j) {
    noise.sample_into(x, rng, xi);
    draws.col(j) = xi;
  }

  ExcitationEstimate best;
  best.c_hat = std::numeric_limits<double>::infinity();
  Vec u(noise.dim);
  for (int k = 0; k < n_directions; ++k) {
    fill_unit_sphere(rng, u);
    Vec proj = draws.transpose() * u;
    double mean = 0.0, sq = 0.0;
    for (int j = 0; j < n_samples; ++j) {
      double v = std::max(proj[j], 0.0);
      mean += v;
      sq += v * v;
    }
    mean /= n_samples;
    double var = std::max(sq / n_samples - mean * mean, 0.0);
    if (mean < best.c_hat) {
      best.c_hat = mean;
      best.stderr_ = std::sqrt(var / n_samples);
      best.worst_direction = u;
    }
  }
  return best;
}

}  // namespace sgdlab
