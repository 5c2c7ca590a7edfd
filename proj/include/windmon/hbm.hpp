#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "windmon/surrogate.hpp"

namespace windmon::hbm {

// Grouped first-bending-frequency observations, one list per turbine.
// Turbines are labeled 1..K.
struct Dataset {
  std::vector<std::vector<double>> frequencies;  // [turbine][observation], Hz

  int n_turbines() const { return static_cast<int>(frequencies.size()); }
  int n_total() const;
  void validate() const;
};

struct HyperPriors {
  double mu_mu = 0.0;       // N/m per m
  double sigma_mu = 0.0;    // N/m per m
  double beta_sigma = 0.0;  // N/m per m, HalfCauchy scale on sigma_s
  double beta_gamma = 0.0;  // Hz, HalfCauchy scale on gamma
  void validate() const;
};

struct LatentState {
  double mu_s = 0.0;       // population mean stiffness
  double sigma_s = 0.0;    // population stiffness sd, > 0
  std::vector<double> s;   // per-turbine log stiffness
  double gamma = 0.0;      // observation noise sd, > 0
};

// Sampler-facing coordinates: [mu_s, zeta_sigma = ln sigma_s,
// zeta_gamma = ln gamma, s_1 .. s_K].
struct UnconstrainedState {
  Eigen::VectorXd u;

  int n_turbines() const { return static_cast<int>(u.size()) - 3; }
  static UnconstrainedState zeros(int n_turbines);
};

UnconstrainedState to_unconstrained(const LatentState& state);
LatentState to_constrained(const UnconstrainedState& state);

// Apply the constraining transforms coordinate-wise to a raw sampler vector.
Eigen::VectorXd constrain_vector(const Eigen::VectorXd& u);

// Normal parameters (m, v) with v a VARIANCE, chosen so that if
// s ~ Normal(m, v) then exp(s) has mean |mu_s| and variance sigma_s^2.
std::pair<double, double> lognormal_params(double mu_s, double sigma_s);

double log_prior(const LatentState& state, const HyperPriors& hp);
double log_likelihood(const LatentState& state, const Dataset& data,
                      const surrogate::PolySurrogate& f);

struct LogDensity {
  double value = 0.0;
  Eigen::VectorXd gradient;
  bool finite = true;
  int bad_coordinate = -1;  // index of the first coordinate with a non-finite intermediate
};

// Unconstrained log posterior (prior + likelihood + log-Jacobian) with its
// analytic gradient.
LogDensity log_posterior_grad(const Eigen::VectorXd& u, const Dataset& data,
                              const surrogate::PolySurrogate& f, const HyperPriors& hp);

// Bundles the model pieces into the callable the sampler consumes.
struct PosteriorModel {
  Dataset data;
  surrogate::PolySurrogate f;
  HyperPriors hyper;

  LogDensity operator()(const Eigen::VectorXd& u) const {
    return log_posterior_grad(u, data, f, hyper);
  }
};

}  // namespace windmon::hbm
