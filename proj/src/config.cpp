#include "windmon/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "windmon/errors.hpp"

namespace windmon::config {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::vector<std::string>& required, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + context);
    }
  }
  for (const auto& key : required) {
    if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + context);
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& context) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + context + ": " + e.what());
  }
}

fem::Material parse_material(const json& j, const std::string& context) {
  require_keys(j, {"youngs_modulus_pa", "shear_modulus_pa", "density_kgm3"},
               {"youngs_modulus_pa", "shear_modulus_pa", "density_kgm3"}, context);
  fem::Material m;
  m.youngs_modulus = get<double>(j, "youngs_modulus_pa", context);
  m.shear_modulus = get<double>(j, "shear_modulus_pa", context);
  m.density = get<double>(j, "density_kgm3", context);
  return m;
}

fem::Environment parse_environment(const std::string& name, const std::string& context) {
  if (name == "embedded") return fem::Environment::Embedded;
  if (name == "submerged") return fem::Environment::Submerged;
  if (name == "air") return fem::Environment::Air;
  throw ConfigError("unknown environment '" + name + "' in " + context +
                    " (expected embedded/submerged/air)");
}

std::string environment_name(fem::Environment env) {
  switch (env) {
    case fem::Environment::Embedded: return "embedded";
    case fem::Environment::Submerged: return "submerged";
    default: return "air";
  }
}

fem::TurbineModel parse_turbine_block(const json& turbine, const json& foundation) {
  require_keys(turbine,
               {"segments", "tip_mass_kg", "water_density_kgm3", "added_mass_coefficient",
                "rotary_inertia", "target_element_length_m"},
               {"segments", "tip_mass_kg", "water_density_kgm3", "added_mass_coefficient",
                "rotary_inertia", "target_element_length_m"},
               "turbine");
  fem::TurbineModel model;
  const auto& segments = turbine.at("segments");
  if (!segments.is_array() || segments.empty()) {
    throw ConfigError("turbine.segments must be a non-empty array");
  }
  int index = 0;
  for (const auto& seg : segments) {
    const std::string context = "turbine.segments[" + std::to_string(index++) + "]";
    require_keys(seg,
                 {"length_m", "outer_diameter_bottom_m", "outer_diameter_top_m",
                  "wall_thickness_m", "environment", "material"},
                 {"length_m", "outer_diameter_bottom_m", "outer_diameter_top_m",
                  "wall_thickness_m", "environment", "material"},
                 context);
    fem::TubularSegment s;
    s.length = get<double>(seg, "length_m", context);
    s.outer_diameter_bottom = get<double>(seg, "outer_diameter_bottom_m", context);
    s.outer_diameter_top = get<double>(seg, "outer_diameter_top_m", context);
    s.wall_thickness = get<double>(seg, "wall_thickness_m", context);
    s.environment = parse_environment(get<std::string>(seg, "environment", context), context);
    s.material = parse_material(seg.at("material"), context + ".material");
    model.geometry.segments.push_back(s);
  }
  model.geometry.tip_mass = get<double>(turbine, "tip_mass_kg", "turbine");
  model.geometry.water_density = get<double>(turbine, "water_density_kgm3", "turbine");
  model.options.added_mass_coefficient =
      get<double>(turbine, "added_mass_coefficient", "turbine");
  model.options.rotary_inertia = get<bool>(turbine, "rotary_inertia", "turbine");
  model.options.target_element_length =
      get<double>(turbine, "target_element_length_m", "turbine");

  require_keys(foundation, {"base_axial_stiffness_n_per_m"}, {"base_axial_stiffness_n_per_m"},
               "foundation");
  model.foundation.base_axial_stiffness =
      get<double>(foundation, "base_axial_stiffness_n_per_m", "foundation");
  return model;
}

}  // namespace

void RunConfig::validate() const {
  try {
    turbine.geometry.validate();
    turbine.foundation.validate();
    truth.validate();
    hyperpriors.validate();
    sampler.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (surrogate.domain_min >= surrogate.domain_max) {
    throw ConfigError("surrogate domain min must be below max");
  }
  if (surrogate.domain_min <= 0.0) throw ConfigError("surrogate domain must be positive");
  if (surrogate.degree < 0) throw ConfigError("surrogate degree must be non-negative");
  if (surrogate.n_points < surrogate.degree + 1) {
    throw ConfigError("surrogate n_points must be at least degree + 1");
  }
  if (anomaly.hdi_mass <= 0.0 || anomaly.hdi_mass >= 1.0) {
    throw ConfigError("anomaly hdi_mass must lie in (0, 1)");
  }
  if (anomaly.scour_depths.empty()) throw ConfigError("anomaly needs at least one scour depth");
  for (double d : anomaly.scour_depths) {
    if (d < 0.0 || d > turbine.geometry.embedded_length()) {
      throw ConfigError("scour depth outside [0, embedded length]");
    }
  }
  if (anomaly.sweep_samples < 1) throw ConfigError("sweep_samples must be >= 1");
  if (anomaly.predictive_draws < 10) throw ConfigError("predictive_draws must be >= 10");
  if (turbine.options.target_element_length <= 0.0) {
    throw ConfigError("target element length must be positive");
  }
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(j,
               {"turbine", "foundation", "surrogate", "truth", "hyperpriors", "sampler",
                "anomaly", "provenance"},
               {"turbine", "foundation", "surrogate", "truth", "hyperpriors", "sampler",
                "anomaly"},
               "config");

  RunConfig cfg;
  cfg.turbine = parse_turbine_block(j.at("turbine"), j.at("foundation"));

  const auto& sur = j.at("surrogate");
  require_keys(sur, {"domain_n_per_m2", "degree", "n_points"},
               {"domain_n_per_m2", "degree", "n_points"}, "surrogate");
  const auto domain = get<std::vector<double>>(sur, "domain_n_per_m2", "surrogate");
  if (domain.size() != 2) throw ConfigError("surrogate.domain_n_per_m2 must have 2 entries");
  cfg.surrogate.domain_min = domain[0];
  cfg.surrogate.domain_max = domain[1];
  cfg.surrogate.degree = get<int>(sur, "degree", "surrogate");
  cfg.surrogate.n_points = get<int>(sur, "n_points", "surrogate");

  const auto& truth = j.at("truth");
  require_keys(truth,
               {"mu_star_n_per_m2", "sigma_star_n_per_m2", "obs_spread_fraction",
                "noise_sd_hz", "group_sizes", "seed"},
               {"mu_star_n_per_m2", "sigma_star_n_per_m2", "obs_spread_fraction",
                "noise_sd_hz", "group_sizes", "seed"},
               "truth");
  cfg.truth.mu_star = get<double>(truth, "mu_star_n_per_m2", "truth");
  cfg.truth.sigma_star = get<double>(truth, "sigma_star_n_per_m2", "truth");
  cfg.truth.obs_spread_fraction = get<double>(truth, "obs_spread_fraction", "truth");
  cfg.truth.noise_sd = get<double>(truth, "noise_sd_hz", "truth");
  cfg.truth.group_sizes = get<std::vector<int>>(truth, "group_sizes", "truth");
  cfg.truth.seed = get<std::uint64_t>(truth, "seed", "truth");

  const auto& hp = j.at("hyperpriors");
  require_keys(hp,
               {"mu_mu_n_per_m2", "sigma_mu_n_per_m2", "beta_sigma_n_per_m2", "beta_gamma_hz"},
               {"mu_mu_n_per_m2", "sigma_mu_n_per_m2", "beta_sigma_n_per_m2", "beta_gamma_hz"},
               "hyperpriors");
  cfg.hyperpriors.mu_mu = get<double>(hp, "mu_mu_n_per_m2", "hyperpriors");
  cfg.hyperpriors.sigma_mu = get<double>(hp, "sigma_mu_n_per_m2", "hyperpriors");
  cfg.hyperpriors.beta_sigma = get<double>(hp, "beta_sigma_n_per_m2", "hyperpriors");
  cfg.hyperpriors.beta_gamma = get<double>(hp, "beta_gamma_hz", "hyperpriors");

  const auto& sampler = j.at("sampler");
  require_keys(sampler,
               {"n_chains", "n_warmup", "n_samples", "target_accept", "max_tree_depth", "seed",
                "step_size_override"},
               {"n_chains", "n_warmup", "n_samples", "target_accept", "max_tree_depth", "seed"},
               "sampler");
  cfg.sampler.n_chains = get<int>(sampler, "n_chains", "sampler");
  cfg.sampler.n_warmup = get<int>(sampler, "n_warmup", "sampler");
  cfg.sampler.n_samples = get<int>(sampler, "n_samples", "sampler");
  cfg.sampler.target_accept = get<double>(sampler, "target_accept", "sampler");
  cfg.sampler.max_tree_depth = get<int>(sampler, "max_tree_depth", "sampler");
  cfg.sampler.seed = get<std::uint64_t>(sampler, "seed", "sampler");
  if (sampler.contains("step_size_override") && !sampler.at("step_size_override").is_null()) {
    cfg.sampler.step_size_override = get<double>(sampler, "step_size_override", "sampler");
  }

  const auto& anomaly = j.at("anomaly");
  require_keys(anomaly,
               {"hdi_mass", "scour_depths_m", "sweep_samples", "predictive_draws",
                "include_observation_noise"},
               {"hdi_mass", "scour_depths_m", "sweep_samples", "predictive_draws",
                "include_observation_noise"},
               "anomaly");
  cfg.anomaly.hdi_mass = get<double>(anomaly, "hdi_mass", "anomaly");
  cfg.anomaly.scour_depths = get<std::vector<double>>(anomaly, "scour_depths_m", "anomaly");
  cfg.anomaly.sweep_samples = get<int>(anomaly, "sweep_samples", "anomaly");
  cfg.anomaly.predictive_draws = get<int>(anomaly, "predictive_draws", "anomaly");
  cfg.anomaly.include_observation_noise =
      get<bool>(anomaly, "include_observation_noise", "anomaly");

  if (j.contains("provenance")) {
    const auto& prov = j.at("provenance");
    if (!prov.is_object()) throw ConfigError("provenance must be an object");
    for (const auto& [key, value] : prov.items()) {
      if (!value.is_string() ||
          (value.get<std::string>() != "paper" && value.get<std::string>() != "decision")) {
        throw ConfigError("provenance values must be 'paper' or 'decision' (key '" + key +
                          "')");
      }
      cfg.provenance[key] = value.get<std::string>();
    }
  }

  cfg.validate();
  return cfg;
}

std::string RunConfig::to_json() const {
  ordered_json j;
  ordered_json segments = ordered_json::array();
  for (const auto& s : turbine.geometry.segments) {
    ordered_json seg;
    seg["length_m"] = s.length;
    seg["outer_diameter_bottom_m"] = s.outer_diameter_bottom;
    seg["outer_diameter_top_m"] = s.outer_diameter_top;
    seg["wall_thickness_m"] = s.wall_thickness;
    seg["environment"] = environment_name(s.environment);
    seg["material"] = {{"youngs_modulus_pa", s.material.youngs_modulus},
                       {"shear_modulus_pa", s.material.shear_modulus},
                       {"density_kgm3", s.material.density}};
    segments.push_back(seg);
  }
  j["turbine"] = {{"segments", segments},
                  {"tip_mass_kg", turbine.geometry.tip_mass},
                  {"water_density_kgm3", turbine.geometry.water_density},
                  {"added_mass_coefficient", turbine.options.added_mass_coefficient},
                  {"rotary_inertia", turbine.options.rotary_inertia},
                  {"target_element_length_m", turbine.options.target_element_length}};
  j["foundation"] = {{"base_axial_stiffness_n_per_m", turbine.foundation.base_axial_stiffness}};
  j["surrogate"] = {{"domain_n_per_m2", {surrogate.domain_min, surrogate.domain_max}},
                    {"degree", surrogate.degree},
                    {"n_points", surrogate.n_points}};
  j["truth"] = {{"mu_star_n_per_m2", truth.mu_star},
                {"sigma_star_n_per_m2", truth.sigma_star},
                {"obs_spread_fraction", truth.obs_spread_fraction},
                {"noise_sd_hz", truth.noise_sd},
                {"group_sizes", truth.group_sizes},
                {"seed", truth.seed}};
  j["hyperpriors"] = {{"mu_mu_n_per_m2", hyperpriors.mu_mu},
                      {"sigma_mu_n_per_m2", hyperpriors.sigma_mu},
                      {"beta_sigma_n_per_m2", hyperpriors.beta_sigma},
                      {"beta_gamma_hz", hyperpriors.beta_gamma}};
  j["sampler"] = {{"n_chains", sampler.n_chains},
                  {"n_warmup", sampler.n_warmup},
                  {"n_samples", sampler.n_samples},
                  {"target_accept", sampler.target_accept},
                  {"max_tree_depth", sampler.max_tree_depth},
                  {"seed", sampler.seed},
                  {"step_size_override",
                   sampler.step_size_override ? ordered_json(*sampler.step_size_override)
                                              : ordered_json(nullptr)}};
  j["anomaly"] = {{"hdi_mass", anomaly.hdi_mass},
                  {"scour_depths_m", anomaly.scour_depths},
                  {"sweep_samples", anomaly.sweep_samples},
                  {"predictive_draws", anomaly.predictive_draws},
                  {"include_observation_noise", anomaly.include_observation_noise}};
  if (!provenance.empty()) {
    ordered_json prov;
    for (const auto& [key, value] : provenance) prov[key] = value;
    j["provenance"] = prov;
  }
  return j.dump(2);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open config file for writing: " + path);
  out << cfg.to_json() << "\n";
}

namespace {

fem::Material steel(double density) {
  fem::Material m;
  m.youngs_modulus = 2.1e11;
  m.shear_modulus = 8.08e10;
  m.density = density;
  return m;
}

fem::TubularSegment make_segment(double length, double d_bottom, double d_top, double thickness,
                                 fem::Environment env, double density) {
  fem::TubularSegment s;
  s.length = length;
  s.outer_diameter_bottom = d_bottom;
  s.outer_diameter_top = d_top;
  s.wall_thickness = thickness;
  s.environment = env;
  s.material = steel(density);
  return s;
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;

  // Monopile: 30 m embedded, 20 m water column, 10 m above SWL; D 6 m, t 60 mm.
  auto& segments = cfg.turbine.geometry.segments;
  segments.push_back(make_segment(30.0, 6.0, 6.0, 0.06, fem::Environment::Embedded, 7850.0));
  segments.push_back(make_segment(20.0, 6.0, 6.0, 0.06, fem::Environment::Submerged, 7850.0));
  segments.push_back(make_segment(10.0, 6.0, 6.0, 0.06, fem::Environment::Air, 7850.0));
  // Tower: 77.6 m, D 6 -> 3.87 m, wall 27 -> 19 mm in four stepwise pieces,
  // effective steel density 8500 kg/m^3 for bolts and flanges.
  segments.push_back(make_segment(19.4, 6.0, 5.4675, 0.026, fem::Environment::Air, 8500.0));
  segments.push_back(make_segment(19.4, 5.4675, 4.935, 0.024, fem::Environment::Air, 8500.0));
  segments.push_back(make_segment(19.4, 4.935, 4.4025, 0.022, fem::Environment::Air, 8500.0));
  segments.push_back(make_segment(19.4, 4.4025, 3.87, 0.020, fem::Environment::Air, 8500.0));
  cfg.turbine.geometry.tip_mass = 350000.0;
  cfg.turbine.geometry.water_density = 1025.0;
  cfg.turbine.options.added_mass_coefficient = 1.0;
  cfg.turbine.options.rotary_inertia = true;
  cfg.turbine.options.target_element_length = 2.0;
  cfg.turbine.foundation.base_axial_stiffness = 1.0e9;

  cfg.surrogate = SurrogateConfig{};
  cfg.truth = datagen::GenerativeTruth{};
  cfg.truth.seed = 42;

  cfg.hyperpriors.mu_mu = 3.0e7;
  cfg.hyperpriors.sigma_mu = 1.0e7;
  cfg.hyperpriors.beta_sigma = 5.0e6;
  cfg.hyperpriors.beta_gamma = 0.01;

  cfg.sampler = nuts::SamplerConfig{};
  cfg.sampler.seed = 1337;

  cfg.anomaly = AnomalyConfig{};

  cfg.provenance = {
      {"turbine.segments", "decision"},
      {"turbine.tip_mass_kg", "decision"},
      {"turbine.segments.tower_density_kgm3", "paper"},
      {"turbine.water_density_kgm3", "decision"},
      {"turbine.added_mass_coefficient", "decision"},
      {"turbine.rotary_inertia", "decision"},
      {"turbine.target_element_length_m", "decision"},
      {"foundation.base_axial_stiffness_n_per_m", "decision"},
      {"surrogate.domain_n_per_m2", "paper"},
      {"surrogate.degree", "paper"},
      {"surrogate.n_points", "decision"},
      {"truth.mu_star_n_per_m2", "decision"},
      {"truth.sigma_star_n_per_m2", "decision"},
      {"truth.obs_spread_fraction", "decision"},
      {"truth.noise_sd_hz", "paper"},
      {"truth.group_sizes", "paper"},
      {"truth.seed", "decision"},
      {"hyperpriors.mu_mu_n_per_m2", "decision"},
      {"hyperpriors.sigma_mu_n_per_m2", "decision"},
      {"hyperpriors.beta_sigma_n_per_m2", "decision"},
      {"hyperpriors.beta_gamma_hz", "decision"},
      {"sampler.n_chains", "paper"},
      {"sampler.n_warmup", "paper"},
      {"sampler.n_samples", "paper"},
      {"sampler.target_accept", "decision"},
      {"sampler.max_tree_depth", "decision"},
      {"sampler.seed", "decision"},
      {"anomaly.hdi_mass", "decision"},
      {"anomaly.scour_depths_m", "paper"},
      {"anomaly.sweep_samples", "paper"},
      {"anomaly.predictive_draws", "decision"},
      {"anomaly.include_observation_noise", "decision"},
  };
  return cfg;
}

fem::TurbineModel validation_tower_model() {
  fem::TurbineModel model;
  auto& segments = model.geometry.segments;
  // Land-based tower: 87.6 m, D 6 -> 3.87 m, wall 35.1 -> 24.7 mm stepwise.
  segments.push_back(make_segment(21.9, 6.0, 5.4675, 0.0338, fem::Environment::Air, 8500.0));
  segments.push_back(make_segment(21.9, 5.4675, 4.935, 0.0312, fem::Environment::Air, 8500.0));
  segments.push_back(make_segment(21.9, 4.935, 4.4025, 0.0286, fem::Environment::Air, 8500.0));
  segments.push_back(make_segment(21.9, 4.4025, 3.87, 0.0260, fem::Environment::Air, 8500.0));
  model.geometry.tip_mass = 350000.0;
  model.geometry.water_density = 1025.0;
  model.foundation.base_axial_stiffness = 0.0;
  model.options.clamp_base = true;
  model.options.target_element_length = 2.0;
  return model;
}

}  // namespace windmon::config
