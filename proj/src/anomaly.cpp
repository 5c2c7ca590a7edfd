#include "windmon/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "windmon/parallel.hpp"
#include "windmon/rng.hpp"

namespace windmon::anomaly {

std::vector<int> thinning_indices(int total_draws, int n_draws) {
  if (n_draws < 1 || n_draws > total_draws) {
    throw std::invalid_argument("n_draws outside [1, total draws]");
  }
  std::vector<int> indices(n_draws);
  for (int j = 0; j < n_draws; ++j) {
    indices[j] = static_cast<int>(static_cast<long long>(j) * total_draws / n_draws);
  }
  return indices;
}

namespace {

std::vector<double> stiffness_draws_for(const nuts::PosteriorChains& chains, int turbine_k,
                                        int n_draws) {
  if (turbine_k < 1) throw std::invalid_argument("turbine index is 1-based");
  const int coord = chains.column("s_" + std::to_string(turbine_k));
  const Eigen::VectorXd s = chains.merged_constrained(coord);
  const auto indices = thinning_indices(static_cast<int>(s.size()), n_draws);
  std::vector<double> stiffness(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) stiffness[j] = std::exp(s(indices[j]));
  return stiffness;
}

}  // namespace

PredictiveSample posterior_predictive(const nuts::PosteriorChains& chains, int turbine_k,
                                      const fem::TurbineModel& model, double scour_depth,
                                      int n_draws, bool include_noise,
                                      std::uint64_t noise_seed) {
  const auto stiffness = stiffness_draws_for(chains, turbine_k, n_draws);
  const fem::Mesh mesh = fem::build_mesh(model.geometry, model.options.target_element_length);

  PredictiveSample out;
  out.turbine = turbine_k;
  out.scour_depth = scour_depth;
  out.frequencies.resize(stiffness.size());
  util::parallel_for(stiffness.size(), [&](std::size_t j) {
    out.frequencies[j] = fem::first_bending_frequency(model, mesh, stiffness[j], scour_depth);
  });

  if (include_noise) {
    const int gamma_coord = chains.column("gamma");
    const Eigen::VectorXd gamma = chains.merged_constrained(gamma_coord);
    const auto indices = thinning_indices(static_cast<int>(gamma.size()), n_draws);
    rng::DeterministicRng rng(rng::derive_seed(noise_seed, 0x6e6f697365ULL));
    for (std::size_t j = 0; j < out.frequencies.size(); ++j) {
      out.frequencies[j] += rng.normal(0.0, gamma(indices[j]));
    }
  }
  return out;
}

std::vector<std::pair<double, double>> scour_sweep(const nuts::PosteriorChains& chains,
                                                   int turbine_k,
                                                   const fem::TurbineModel& model,
                                                   const std::vector<double>& depths,
                                                   int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  const auto stiffness = stiffness_draws_for(chains, turbine_k, n_samples);
  const fem::Mesh mesh = fem::build_mesh(model.geometry, model.options.target_element_length);

  std::vector<std::pair<double, double>> sweep(depths.size());
  const std::size_t n_jobs = depths.size() * stiffness.size();
  std::vector<double> freq(n_jobs);
  util::parallel_for(n_jobs, [&](std::size_t job) {
    const std::size_t d = job / stiffness.size();
    const std::size_t j = job % stiffness.size();
    freq[job] = fem::first_bending_frequency(model, mesh, stiffness[j], depths[d]);
  });
  for (std::size_t d = 0; d < depths.size(); ++d) {
    double sum = 0.0;
    for (std::size_t j = 0; j < stiffness.size(); ++j) sum += freq[d * stiffness.size() + j];
    sweep[d] = {depths[d], sum / static_cast<double>(stiffness.size())};
  }
  return sweep;
}

std::pair<double, double> hdi(std::vector<double> samples, double mass) {
  if (mass <= 0.0 || mass >= 1.0) throw std::invalid_argument("mass must lie in (0, 1)");
  if (samples.size() < 10) throw std::invalid_argument("hdi needs at least 10 samples");
  std::sort(samples.begin(), samples.end());
  const int n = static_cast<int>(samples.size());
  const int window = std::min(n, static_cast<int>(std::ceil(mass * n)));
  double best_lo = samples.front();
  double best_hi = samples[window - 1];
  double best_width = best_hi - best_lo;
  for (int i = 1; i + window <= n; ++i) {
    const double width = samples[i + window - 1] - samples[i];
    if (width < best_width) {  // strict: ties keep the smallest lower bound
      best_width = width;
      best_lo = samples[i];
      best_hi = samples[i + window - 1];
    }
  }
  return {best_lo, best_hi};
}

AnomalyVerdict detect(double observed, const PredictiveSample& reference, double mass) {
  if (!std::isfinite(observed)) throw std::invalid_argument("observed frequency must be finite");
  const auto [lo, hi] = hdi(reference.frequencies, mass);

  AnomalyVerdict verdict;
  verdict.observed = observed;
  verdict.hdi_lo = lo;
  verdict.hdi_hi = hi;
  verdict.mass = mass;
  verdict.anomalous = observed < lo || observed > hi;

  const double n = static_cast<double>(reference.frequencies.size());
  double at_or_below = 0.0;
  double at_or_above = 0.0;
  for (double f : reference.frequencies) {
    if (f <= observed) at_or_below += 1.0;
    if (f >= observed) at_or_above += 1.0;
  }
  verdict.tail_prob = std::min(1.0, 2.0 * std::min(at_or_below, at_or_above) / n);
  return verdict;
}

std::string verdict_to_json(const AnomalyVerdict& verdict) {
  nlohmann::json j;
  j["observed_hz"] = verdict.observed;
  j["hdi"] = {verdict.hdi_lo, verdict.hdi_hi};
  j["mass"] = verdict.mass;
  j["tail_prob"] = verdict.tail_prob;
  j["verdict"] = verdict.anomalous ? "Anomalous" : "Normal";
  return j.dump(2);
}

}  // namespace windmon::anomaly
