#include "windmon/hbm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace windmon::hbm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

double normal_logpdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - d * d / (2.0 * variance);
}

double half_cauchy_logpdf(double x, double scale) {
  if (x <= 0.0) return kNegInf;
  const double r = x / scale;
  return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(r * r);
}

}  // namespace

int Dataset::n_total() const {
  int total = 0;
  for (const auto& group : frequencies) total += static_cast<int>(group.size());
  return total;
}

void Dataset::validate() const {
  if (frequencies.empty()) throw std::invalid_argument("dataset has no turbines");
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    if (frequencies[k].empty()) {
      throw std::invalid_argument("turbine " + std::to_string(k + 1) + " has no observations");
    }
    for (double w : frequencies[k]) {
      if (!std::isfinite(w) || w <= 0.0) {
        throw std::invalid_argument("frequencies must be finite and positive");
      }
    }
  }
}

void HyperPriors::validate() const {
  if (sigma_mu <= 0.0 || beta_sigma <= 0.0 || beta_gamma <= 0.0) {
    throw std::invalid_argument("hyperprior scales must be strictly positive");
  }
}

UnconstrainedState UnconstrainedState::zeros(int n_turbines) {
  UnconstrainedState s;
  s.u = Eigen::VectorXd::Zero(3 + n_turbines);
  return s;
}

UnconstrainedState to_unconstrained(const LatentState& state) {
  if (state.sigma_s <= 0.0 || state.gamma <= 0.0) {
    throw std::invalid_argument("sigma_s and gamma must be positive");
  }
  UnconstrainedState out = UnconstrainedState::zeros(static_cast<int>(state.s.size()));
  out.u(0) = state.mu_s;
  out.u(1) = std::log(state.sigma_s);
  out.u(2) = std::log(state.gamma);
  for (std::size_t k = 0; k < state.s.size(); ++k) out.u(3 + k) = state.s[k];
  return out;
}

LatentState to_constrained(const UnconstrainedState& state) {
  LatentState out;
  out.mu_s = state.u(0);
  out.sigma_s = std::exp(state.u(1));
  out.gamma = std::exp(state.u(2));
  out.s.assign(state.u.data() + 3, state.u.data() + state.u.size());
  return out;
}

Eigen::VectorXd constrain_vector(const Eigen::VectorXd& u) {
  Eigen::VectorXd c = u;
  c(1) = std::exp(u(1));
  c(2) = std::exp(u(2));
  return c;
}

std::pair<double, double> lognormal_params(double mu_s, double sigma_s) {
  if (mu_s == 0.0) throw std::domain_error("lognormal_params undefined at mu_s = 0");
  if (sigma_s <= 0.0) throw std::domain_error("lognormal_params requires sigma_s > 0");
  const double mu2 = mu_s * mu_s;
  const double ratio2 = sigma_s * sigma_s / mu2;
  const double m = std::log(mu2 / std::sqrt(mu2 + sigma_s * sigma_s));
  const double v = std::log1p(ratio2);
  return {m, v};
}

double log_prior(const LatentState& state, const HyperPriors& hp) {
  hp.validate();
  if (state.sigma_s <= 0.0 || state.gamma <= 0.0) return kNegInf;
  if (state.mu_s == 0.0) throw std::domain_error("log_prior undefined at mu_s = 0");

  double lp = normal_logpdf(state.mu_s, hp.mu_mu, hp.sigma_mu * hp.sigma_mu);
  lp += half_cauchy_logpdf(state.sigma_s, hp.beta_sigma);
  const auto [m, v] = lognormal_params(state.mu_s, state.sigma_s);
  for (double sk : state.s) lp += normal_logpdf(sk, m, v);
  lp += half_cauchy_logpdf(state.gamma, hp.beta_gamma);
  return lp;
}

double log_likelihood(const LatentState& state, const Dataset& data,
                      const surrogate::PolySurrogate& f) {
  if (state.gamma <= 0.0) return kNegInf;
  const double var = state.gamma * state.gamma;
  double ll = 0.0;
  for (std::size_t k = 0; k < data.frequencies.size(); ++k) {
    const double predicted = f(std::exp(state.s.at(k)));
    if (!std::isfinite(predicted)) {
      throw std::domain_error("surrogate returned non-finite frequency");
    }
    for (double w : data.frequencies[k]) ll += normal_logpdf(w, predicted, var);
  }
  return ll;
}

LogDensity log_posterior_grad(const Eigen::VectorXd& u, const Dataset& data,
                              const surrogate::PolySurrogate& f, const HyperPriors& hp) {
  const int n_turbines = static_cast<int>(u.size()) - 3;
  if (n_turbines != static_cast<int>(data.frequencies.size())) {
    throw std::invalid_argument("state dimension does not match dataset");
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u(i))) {
      throw std::invalid_argument("non-finite unconstrained coordinate " + std::to_string(i));
    }
  }

  LogDensity out;
  out.gradient = Eigen::VectorXd::Zero(u.size());
  auto fail = [&](int coordinate) {
    out.value = kNegInf;
    out.gradient.setZero();
    out.finite = false;
    out.bad_coordinate = coordinate;
    return out;
  };

  const double mu_s = u(0);
  const double zeta_sigma = u(1);
  const double zeta_gamma = u(2);
  const double sigma_s = std::exp(zeta_sigma);
  const double gamma = std::exp(zeta_gamma);
  if (!std::isfinite(sigma_s) || sigma_s == 0.0) return fail(1);
  if (!std::isfinite(gamma) || gamma == 0.0) return fail(2);
  if (mu_s == 0.0) return fail(0);

  double value = 0.0;

  // mu_s ~ Normal(mu_mu, sigma_mu^2)
  const double sigma_mu2 = hp.sigma_mu * hp.sigma_mu;
  value += normal_logpdf(mu_s, hp.mu_mu, sigma_mu2);
  double d_mu = -(mu_s - hp.mu_mu) / sigma_mu2;

  // sigma_s ~ HalfCauchy(beta_sigma), gamma ~ HalfCauchy(beta_gamma)
  value += half_cauchy_logpdf(sigma_s, hp.beta_sigma);
  double d_sigma = -2.0 * sigma_s / (hp.beta_sigma * hp.beta_sigma + sigma_s * sigma_s);
  value += half_cauchy_logpdf(gamma, hp.beta_gamma);
  double d_gamma = -2.0 * gamma / (hp.beta_gamma * hp.beta_gamma + gamma * gamma);

  // s_k ~ Normal(m, v) with the moment-matched (m, v)
  const double mu2 = mu_s * mu_s;
  const double total2 = mu2 + sigma_s * sigma_s;
  const double m = std::log(mu2 / std::sqrt(total2));
  const double v = std::log1p(sigma_s * sigma_s / mu2);
  if (!(v > 0.0) || !std::isfinite(m)) return fail(1);
  const double dm_dmu = 2.0 / mu_s - mu_s / total2;
  const double dm_dsigma = -sigma_s / total2;
  const double dv_dmu = 2.0 * mu_s / total2 - 2.0 / mu_s;
  const double dv_dsigma = 2.0 * sigma_s / total2;

  const double gamma2 = gamma * gamma;
  for (int k = 0; k < n_turbines; ++k) {
    const double sk = u(3 + k);
    value += normal_logpdf(sk, m, v);
    const double resid_s = sk - m;
    const double dl_dm = resid_s / v;
    const double dl_dv = -0.5 / v + resid_s * resid_s / (2.0 * v * v);
    d_mu += dl_dm * dm_dmu + dl_dv * dv_dmu;
    d_sigma += dl_dm * dm_dsigma + dl_dv * dv_dsigma;
    double d_sk = -resid_s / v;

    // likelihood through the surrogate at exp(s_k)
    const double stiffness = std::exp(sk);
    if (!std::isfinite(stiffness)) return fail(3 + k);
    const auto [freq, dfreq_dk] = f.value_and_derivative(stiffness);
    if (!std::isfinite(freq) || !std::isfinite(dfreq_dk)) return fail(3 + k);
    for (double w : data.frequencies[k]) {
      const double resid = w - freq;
      value += -0.5 * (kLog2Pi + 2.0 * zeta_gamma) - resid * resid / (2.0 * gamma2);
      d_sk += resid / gamma2 * dfreq_dk * stiffness;
      d_gamma += (-1.0 + resid * resid / gamma2) / gamma;
    }
    out.gradient(3 + k) = d_sk;
  }

  // change of variables: + zeta_sigma + zeta_gamma, gradients chain-ruled
  value += zeta_sigma + zeta_gamma;
  out.gradient(0) = d_mu;
  out.gradient(1) = d_sigma * sigma_s + 1.0;
  out.gradient(2) = d_gamma * gamma + 1.0;

  if (!std::isfinite(value)) return fail(-1);
  out.value = value;
  return out;
}

}  // namespace windmon::hbm
