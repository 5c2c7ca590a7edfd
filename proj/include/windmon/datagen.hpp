#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windmon/fem.hpp"
#include "windmon/hbm.hpp"

namespace windmon::datagen {

struct GenerativeTruth {
  double mu_star = 2.5e7;     // population mean stiffness, N/m per m
  double sigma_star = 2.5e6;  // population sd, N/m per m
  double obs_spread_fraction = 0.05;  // per-observation stiffness sd as a fraction of sigma_star
  double noise_sd = 1e-4;             // Hz
  std::vector<int> group_sizes = {10, 10, 10, 10, 2};
  std::uint64_t seed = 0;

  int n_turbines() const { return static_cast<int>(group_sizes.size()); }
  void validate() const;
};

// Everything the generator knew, sealed alongside the observable dataset so
// recovery can be scored honestly afterwards.
struct GroundTruthRecord {
  GenerativeTruth truth;
  std::vector<double> turbine_mean_stiffness;          // N/m per m, one per turbine
  std::vector<std::vector<double>> stiffness_draws;    // per observation
  std::vector<std::vector<double>> noiseless_frequencies;
  int rejected_draws = 0;
};

std::pair<hbm::Dataset, GroundTruthRecord> generate(const GenerativeTruth& truth,
                                                    const fem::TurbineModel& model);

// CSV: header `turbine_id,obs_id,frequency_hz`, lossless at 17 significant digits.
void write_dataset(const hbm::Dataset& data, const std::string& path);
hbm::Dataset read_dataset(const std::string& path);

void write_truth(const GroundTruthRecord& record, const std::string& path);
GroundTruthRecord read_truth(const std::string& path);

}  // namespace windmon::datagen
