#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "windmon/datagen.hpp"
#include "windmon/fem.hpp"
#include "windmon/hbm.hpp"
#include "windmon/nuts.hpp"

namespace windmon::config {

struct SurrogateConfig {
  double domain_min = 1.0e7;  // N/m per m
  double domain_max = 5.0e7;
  int degree = 5;
  int n_points = 50;
};

struct AnomalyConfig {
  double hdi_mass = 0.999;
  std::vector<double> scour_depths = {0.0, 0.1, 0.2, 0.3, 0.4};  // m
  int sweep_samples = 5;
  int predictive_draws = 512;
  bool include_observation_noise = false;
};

struct RunConfig {
  fem::TurbineModel turbine;
  SurrogateConfig surrogate;
  datagen::GenerativeTruth truth;
  hbm::HyperPriors hyperpriors;
  nuts::SamplerConfig sampler;
  AnomalyConfig anomaly;
  std::map<std::string, std::string> provenance;  // dotted key -> "paper"/"decision"

  void validate() const;
  std::string to_json() const;
};

// Strict parse: unknown keys anywhere are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

// Shipped defaults (mirrors configs/default.json).
RunConfig default_config();

// Land-based NREL 5MW tower clamped at the base; published first fore-aft
// bending mode ~0.32 Hz. Used by the FE validation gates.
fem::TurbineModel validation_tower_model();

}  // namespace windmon::config
