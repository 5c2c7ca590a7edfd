#include "windmon/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "windmon/errors.hpp"
#include "windmon/rng.hpp"

namespace windmon::datagen {

using nlohmann::json;

void GenerativeTruth::validate() const {
  if (mu_star <= 0.0 || sigma_star <= 0.0) {
    throw std::invalid_argument("population stiffness moments must be positive");
  }
  if (obs_spread_fraction < 0.0) {
    throw std::invalid_argument("observation spread fraction must be non-negative");
  }
  if (noise_sd < 0.0) throw std::invalid_argument("noise sd must be non-negative");
  if (group_sizes.empty()) throw std::invalid_argument("need at least one turbine");
  for (int n : group_sizes) {
    if (n < 1) throw std::invalid_argument("every turbine needs at least one observation");
  }
}

std::pair<hbm::Dataset, GroundTruthRecord> generate(const GenerativeTruth& truth,
                                                    const fem::TurbineModel& model) {
  truth.validate();
  const int n_turbines = truth.n_turbines();

  GroundTruthRecord record;
  record.truth = truth;
  record.turbine_mean_stiffness.resize(n_turbines);
  record.stiffness_draws.resize(n_turbines);
  record.noiseless_frequencies.resize(n_turbines);

  hbm::Dataset data;
  data.frequencies.resize(n_turbines);

  const fem::Mesh mesh = fem::build_mesh(model.geometry, model.options.target_element_length);
  const double obs_sd = truth.obs_spread_fraction * truth.sigma_star;

  for (int k = 0; k < n_turbines; ++k) {
    rng::DeterministicRng rng(rng::derive_seed(truth.seed, static_cast<std::uint64_t>(k)));

    // turbine mean stiffness: LogNormal with moments (mu*, sigma*^2)
    const auto [m, v] = hbm::lognormal_params(truth.mu_star, truth.sigma_star);
    const double turbine_mean = std::exp(rng.normal(m, std::sqrt(v)));
    record.turbine_mean_stiffness[k] = turbine_mean;

    const int n_obs = truth.group_sizes[k];
    for (int i = 0; i < n_obs; ++i) {
      double stiffness = obs_sd > 0.0 ? rng.normal(turbine_mean, obs_sd) : turbine_mean;
      while (stiffness <= 0.0) {
        ++record.rejected_draws;
        stiffness = rng.normal(turbine_mean, obs_sd);
      }
      const double clean = fem::first_bending_frequency(model, mesh, stiffness, 0.0);
      const double observed = clean + (truth.noise_sd > 0.0 ? rng.normal(0.0, truth.noise_sd)
                                                            : 0.0);
      record.stiffness_draws[k].push_back(stiffness);
      record.noiseless_frequencies[k].push_back(clean);
      data.frequencies[k].push_back(observed);
    }
  }
  return {std::move(data), std::move(record)};
}

void write_dataset(const hbm::Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open dataset file for writing: " + path);
  out << "turbine_id,obs_id,frequency_hz\n";
  char buffer[64];
  for (std::size_t k = 0; k < data.frequencies.size(); ++k) {
    for (std::size_t i = 0; i < data.frequencies[k].size(); ++i) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", data.frequencies[k][i]);
      out << k + 1 << "," << i + 1 << "," << buffer << "\n";
    }
  }
}

hbm::Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset file is empty: " + path);
  if (line != "turbine_id,obs_id,frequency_hz") {
    throw ConfigError("unexpected dataset header: " + line);
  }

  hbm::Dataset data;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string turbine_field, obs_field, freq_field;
    if (!std::getline(ss, turbine_field, ',') || !std::getline(ss, obs_field, ',') ||
        !std::getline(ss, freq_field, ',')) {
      throw ConfigError("malformed dataset row at line " + std::to_string(line_number));
    }
    int turbine = 0;
    double freq = 0.0;
    try {
      turbine = std::stoi(turbine_field);
      freq = std::stod(freq_field);
    } catch (const std::exception&) {
      throw ConfigError("malformed dataset row at line " + std::to_string(line_number));
    }
    if (turbine < 1 || turbine > 1000000) {
      throw ConfigError("unknown turbine label at line " + std::to_string(line_number));
    }
    if (!std::isfinite(freq) || freq <= 0.0) {
      throw ConfigError("invalid frequency value at line " + std::to_string(line_number));
    }
    if (static_cast<int>(data.frequencies.size()) < turbine) data.frequencies.resize(turbine);
    data.frequencies[turbine - 1].push_back(freq);
  }
  // Empty turbine groups (gaps in the label sequence) are rejected here; a
  // file with only the header is legal and yields an empty dataset, which the
  // inference stage rejects instead.
  for (std::size_t k = 0; k < data.frequencies.size(); ++k) {
    if (data.frequencies[k].empty()) {
      throw ConfigError("turbine " + std::to_string(k + 1) + " has no observations");
    }
  }
  return data;
}

void write_truth(const GroundTruthRecord& record, const std::string& path) {
  json j;
  j["mu_star"] = record.truth.mu_star;
  j["sigma_star"] = record.truth.sigma_star;
  j["obs_spread_fraction"] = record.truth.obs_spread_fraction;
  j["noise_sd_hz"] = record.truth.noise_sd;
  j["group_sizes"] = record.truth.group_sizes;
  j["seed"] = record.truth.seed;
  j["turbine_mean_stiffness"] = record.turbine_mean_stiffness;
  j["stiffness_draws"] = record.stiffness_draws;
  j["noiseless_frequencies"] = record.noiseless_frequencies;
  j["rejected_draws"] = record.rejected_draws;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open truth file for writing: " + path);
  out << j.dump(2) << "\n";
}

GroundTruthRecord read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open truth file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed truth JSON in " + path + ": " + e.what());
  }
  GroundTruthRecord record;
  try {
    record.truth.mu_star = j.at("mu_star").get<double>();
    record.truth.sigma_star = j.at("sigma_star").get<double>();
    record.truth.obs_spread_fraction = j.at("obs_spread_fraction").get<double>();
    record.truth.noise_sd = j.at("noise_sd_hz").get<double>();
    record.truth.group_sizes = j.at("group_sizes").get<std::vector<int>>();
    record.truth.seed = j.at("seed").get<std::uint64_t>();
    record.turbine_mean_stiffness = j.at("turbine_mean_stiffness").get<std::vector<double>>();
    record.stiffness_draws = j.at("stiffness_draws").get<std::vector<std::vector<double>>>();
    record.noiseless_frequencies =
        j.at("noiseless_frequencies").get<std::vector<std::vector<double>>>();
    record.rejected_draws = j.at("rejected_draws").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError("truth JSON missing fields in " + path + ": " + e.what());
  }
  return record;
}

}  // namespace windmon::datagen
