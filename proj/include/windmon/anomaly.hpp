#pragma once

#include <string>
#include <utility>
#include <vector>

#include "windmon/fem.hpp"
#include "windmon/nuts.hpp"

namespace windmon::anomaly {

struct PredictiveSample {
  int turbine = 0;          // 1-based
  double scour_depth = 0.0; // m
  std::vector<double> frequencies;  // Hz, one per selected posterior draw
};

struct AnomalyVerdict {
  double observed = 0.0;  // Hz
  double hdi_lo = 0.0;
  double hdi_hi = 0.0;
  double mass = 0.0;
  double tail_prob = 0.0;
  bool anomalous = false;
};

// Deterministic equal-stride indices into the merged (chain-major) draws.
std::vector<int> thinning_indices(int total_draws, int n_draws);

// Posterior structural-frequency distribution for turbine k at a given scour
// depth: each selected posterior draw of exp(s_k) is pushed through the FE
// model. Observation noise gamma is NOT added unless include_noise is set.
PredictiveSample posterior_predictive(const nuts::PosteriorChains& chains, int turbine_k,
                                      const fem::TurbineModel& model, double scour_depth,
                                      int n_draws, bool include_noise = false,
                                      std::uint64_t noise_seed = 0);

// Mean frequency of n_samples thinned posterior draws at each depth; the same
// draws are reused across depths.
std::vector<std::pair<double, double>> scour_sweep(const nuts::PosteriorChains& chains,
                                                   int turbine_k,
                                                   const fem::TurbineModel& model,
                                                   const std::vector<double>& depths,
                                                   int n_samples = 5);

// Shortest contiguous interval containing ceil(mass * n) sorted samples.
std::pair<double, double> hdi(std::vector<double> samples, double mass);

AnomalyVerdict detect(double observed, const PredictiveSample& reference, double mass = 0.999);

std::string verdict_to_json(const AnomalyVerdict& verdict);

}  // namespace windmon::anomaly
