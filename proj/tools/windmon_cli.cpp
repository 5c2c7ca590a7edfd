// Batch front end: fit-surrogate, gen-data, infer, detect, scour-sweep, plot.
// Exit codes: 0 success/Normal, 2 usage or validation error, 3 Anomalous
// verdict, 4 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "windmon/anomaly.hpp"
#include "windmon/config.hpp"
#include "windmon/datagen.hpp"
#include "windmon/diagnostics.hpp"
#include "windmon/errors.hpp"
#include "windmon/hbm.hpp"
#include "windmon/kde_svg.hpp"
#include "windmon/nuts.hpp"
#include "windmon/surrogate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

windmon::config::RunConfig load_and_resolve(const CommonArgs& args) {
  auto cfg = windmon::config::load_config(args.config_path);
  if (args.seed) {
    cfg.truth.seed = *args.seed;
    cfg.sampler.seed = *args.seed;
  }
  return cfg;
}

void prepare_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw windmon::ConfigError("cannot create output directory: " + out_dir);
}

void echo_config(const windmon::config::RunConfig& cfg, const std::string& out_dir) {
  windmon::config::save_config(cfg, (fs::path(out_dir) / "resolved_config.json").string());
}

std::vector<std::string> parameter_names(int n_turbines) {
  std::vector<std::string> names = {"mu_s", "sigma_s", "gamma"};
  for (int k = 1; k <= n_turbines; ++k) names.push_back("s_" + std::to_string(k));
  return names;
}

int cmd_fit_surrogate(const CommonArgs& args) {
  auto cfg = load_and_resolve(args);
  prepare_out_dir(args.out_dir);
  echo_config(cfg, args.out_dir);

  auto fitted = windmon::surrogate::fit_surrogate(cfg.turbine, cfg.surrogate.domain_min,
                                                  cfg.surrogate.domain_max,
                                                  cfg.surrogate.n_points, cfg.surrogate.degree);
  windmon::surrogate::save_surrogate(fitted,
                                     (fs::path(args.out_dir) / "surrogate.json").string());
  const auto& report = fitted.fit_report();
  std::printf("surrogate: degree %d on [%g, %g] N/m per m\n", fitted.degree(),
              fitted.domain_min(), fitted.domain_max());
  std::printf("fit: n_train %d, n_val %d, max abs residual %.3e Hz, rms %.3e Hz, "
              "max rel residual %.3e\n",
              report.n_train, report.n_val, report.max_abs, report.rms, report.max_rel);
  return 0;
}

int cmd_gen_data(const CommonArgs& args) {
  auto cfg = load_and_resolve(args);
  prepare_out_dir(args.out_dir);
  echo_config(cfg, args.out_dir);

  auto [dataset, record] = windmon::datagen::generate(cfg.truth, cfg.turbine);
  windmon::datagen::write_dataset(dataset, (fs::path(args.out_dir) / "dataset.csv").string());
  windmon::datagen::write_truth(record,
                                (fs::path(args.out_dir) / "dataset.truth.json").string());
  std::printf("dataset: %d turbines, %d observations, %d rejected stiffness draws\n",
              dataset.n_turbines(), dataset.n_total(), record.rejected_draws);
  return 0;
}

int cmd_infer(const CommonArgs& args, const std::string& dataset_path,
              const std::string& surrogate_path) {
  auto cfg = load_and_resolve(args);
  prepare_out_dir(args.out_dir);
  echo_config(cfg, args.out_dir);

  auto dataset = windmon::datagen::read_dataset(dataset_path);
  try {
    dataset.validate();
  } catch (const std::invalid_argument& e) {
    throw windmon::ConfigError(std::string("dataset invalid: ") + e.what());
  }
  auto fitted = windmon::surrogate::load_surrogate(surrogate_path);

  // observations outside the surrogate's image of its fit domain
  const double f_lo = fitted(fitted.domain_min());
  const double f_hi = fitted(fitted.domain_max());
  const double image_lo = std::min(f_lo, f_hi);
  const double image_hi = std::max(f_lo, f_hi);
  int outside_image = 0;
  for (const auto& group : dataset.frequencies) {
    for (double w : group) outside_image += (w < image_lo || w > image_hi) ? 1 : 0;
  }
  fitted.reset_out_of_domain_count();

  const int n_turbines = dataset.n_turbines();
  windmon::hbm::PosteriorModel model{dataset, fitted, cfg.hyperpriors};

  windmon::nuts::InitStrategy init;
  init.center.resize(3 + n_turbines);
  const auto [prior_m, prior_v] =
      windmon::hbm::lognormal_params(cfg.hyperpriors.mu_mu, cfg.hyperpriors.beta_sigma);
  init.center(0) = cfg.hyperpriors.mu_mu;
  init.center(1) = std::log(cfg.hyperpriors.beta_sigma);
  init.center(2) = std::log(cfg.hyperpriors.beta_gamma);
  for (int k = 0; k < n_turbines; ++k) init.center(3 + k) = prior_m;
  init.init_mass_diag = Eigen::VectorXd::Ones(3 + n_turbines);
  init.init_mass_diag(0) = cfg.hyperpriors.sigma_mu * cfg.hyperpriors.sigma_mu;
  for (int k = 0; k < n_turbines; ++k) init.init_mass_diag(3 + k) = std::max(prior_v, 1e-4);
  init.to_constrained = [](const Eigen::VectorXd& u) {
    return windmon::hbm::constrain_vector(u);
  };

  auto target = [&model](const Eigen::VectorXd& u) {
    auto d = model(u);
    return windmon::nuts::Density{d.value, std::move(d.gradient)};
  };

  auto chains = windmon::nuts::run(target, cfg.sampler, init);
  chains.parameter_names = parameter_names(n_turbines);
  windmon::nuts::write_posterior_csv(chains,
                                     (fs::path(args.out_dir) / "posterior.csv").string());

  ordered_json diag;
  diag["step_size"] = json::array();
  diag["divergences"] = json::array();
  for (const auto& chain : chains.chains) {
    diag["step_size"].push_back(chain.step_size);
    diag["divergences"].push_back(chain.divergences());
  }
  diag["rhat"] = json::object();
  diag["ess"] = json::object();
  for (int c = 0; c < chains.dim(); ++c) {
    const auto& name = chains.parameter_names[c];
    if (chains.n_chains() < 2) {
      diag["rhat"][name] = nullptr;
      diag["ess"][name] = nullptr;
    } else {
      diag["rhat"][name] = windmon::nuts::rhat(chains, c).value;
      diag["ess"][name] = windmon::nuts::ess(chains, c);
    }
  }
  diag["surrogate_out_of_domain_evals"] = model.f.out_of_domain_count();
  diag["observations_outside_surrogate_image"] = outside_image;
  std::ofstream diag_out(fs::path(args.out_dir) / "diagnostics.json");
  diag_out << diag.dump(2) << "\n";

  std::printf("posterior: %d chains x %d draws, %d divergent transitions\n", chains.n_chains(),
              chains.n_draws_per_chain(), chains.total_divergences());
  if (chains.n_chains() >= 2) {
    double worst = 0.0;
    for (int c = 0; c < chains.dim(); ++c) {
      worst = std::max(worst, windmon::nuts::rhat(chains, c).value);
    }
    std::printf("max split R-hat: %.4f\n", worst);
  } else {
    std::printf("split R-hat unavailable with a single chain\n");
  }
  if (outside_image > 0) {
    std::printf("warning: %d observations outside the surrogate image\n", outside_image);
  }
  return 0;
}

int cmd_detect(const CommonArgs& args, const std::string& posterior_path, double observation,
               int turbine) {
  auto cfg = load_and_resolve(args);
  prepare_out_dir(args.out_dir);
  echo_config(cfg, args.out_dir);

  auto chains = windmon::nuts::read_posterior_csv(posterior_path);
  const int n_turbines = chains.dim() - 3;
  if (turbine < 1 || turbine > n_turbines) {
    throw windmon::ConfigError("turbine index " + std::to_string(turbine) + " outside 1.." +
                               std::to_string(n_turbines));
  }
  const int n_draws = std::min(cfg.anomaly.predictive_draws, chains.total_draws());
  auto reference = windmon::anomaly::posterior_predictive(
      chains, turbine, cfg.turbine, 0.0, n_draws, cfg.anomaly.include_observation_noise,
      cfg.sampler.seed);
  auto verdict = windmon::anomaly::detect(observation, reference, cfg.anomaly.hdi_mass);

  const std::string text = windmon::anomaly::verdict_to_json(verdict);
  std::ofstream out(fs::path(args.out_dir) / "verdict.json");
  out << text << "\n";
  std::printf("%s\n", text.c_str());
  return verdict.anomalous ? 3 : 0;
}

int cmd_scour_sweep(const CommonArgs& args, const std::string& posterior_path, int turbine) {
  auto cfg = load_and_resolve(args);
  prepare_out_dir(args.out_dir);
  echo_config(cfg, args.out_dir);

  auto chains = windmon::nuts::read_posterior_csv(posterior_path);
  const int n_turbines = chains.dim() - 3;
  if (turbine < 1 || turbine > n_turbines) {
    throw windmon::ConfigError("turbine index " + std::to_string(turbine) + " outside 1.." +
                               std::to_string(n_turbines));
  }

  auto sweep = windmon::anomaly::scour_sweep(chains, turbine, cfg.turbine,
                                             cfg.anomaly.scour_depths,
                                             cfg.anomaly.sweep_samples);
  {
    std::ofstream out(fs::path(args.out_dir) / "sweep.csv");
    if (!out) throw windmon::ConfigError("cannot write sweep.csv");
    out << "scour_depth_m,mean_frequency_hz,n_samples\n";
    char buffer[64];
    for (const auto& [depth, mean] : sweep) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", mean);
      out << depth << "," << buffer << "," << cfg.anomaly.sweep_samples << "\n";
    }
  }

  const int n_draws = std::min(cfg.anomaly.predictive_draws, chains.total_draws());
  auto reference = windmon::anomaly::posterior_predictive(
      chains, turbine, cfg.turbine, 0.0, n_draws, cfg.anomaly.include_observation_noise,
      cfg.sampler.seed);
  auto density = windmon::plot::kernel_density(reference.frequencies, 256, "predictive");
  const std::string svg = windmon::plot::sweep_svg(
      "Scour sweep, turbine " + std::to_string(turbine), density, sweep);
  windmon::plot::write_text_file((fs::path(args.out_dir) / "sweep.svg").string(), svg);

  for (const auto& [depth, mean] : sweep) {
    std::printf("scour %.2f m -> mean %.6f Hz\n", depth, mean);
  }
  return 0;
}

int cmd_plot(const std::string& posterior_path, const std::string& out_dir,
             const std::string& truth_path) {
  prepare_out_dir(out_dir);
  auto chains = windmon::nuts::read_posterior_csv(posterior_path);

  std::optional<windmon::datagen::GroundTruthRecord> truth;
  if (!truth_path.empty()) truth = windmon::datagen::read_truth(truth_path);

  for (int c = 0; c < chains.dim(); ++c) {
    const std::string& name = chains.parameter_names[c];
    std::vector<windmon::plot::Curve> curves;
    for (int chain = 0; chain < chains.n_chains(); ++chain) {
      const Eigen::VectorXd col = chains.chains[chain].constrained.col(c);
      std::vector<double> draws(col.data(), col.data() + col.size());
      curves.push_back(
          windmon::plot::kernel_density(draws, 256, "chain " + std::to_string(chain + 1)));
    }
    std::optional<double> truth_line;
    if (truth) {
      if (name == "mu_s") {
        truth_line = truth->truth.mu_star;
      } else if (name == "sigma_s") {
        truth_line = truth->truth.sigma_star;
      } else if (name == "gamma") {
        truth_line = truth->truth.noise_sd;
      } else if (name.rfind("s_", 0) == 0) {
        const int k = std::stoi(name.substr(2));
        if (k >= 1 && k <= static_cast<int>(truth->turbine_mean_stiffness.size())) {
          truth_line = std::log(truth->turbine_mean_stiffness[k - 1]);
        }
      }
    }
    const std::string svg =
        windmon::plot::density_svg("Posterior density: " + name, curves, truth_line);
    windmon::plot::write_text_file((fs::path(out_dir) / ("density_" + name + ".svg")).string(),
                                   svg);
  }
  std::printf("wrote %d density panels to %s\n", chains.dim(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monopile wind turbine scour monitoring pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string dataset_path, surrogate_path, posterior_path, truth_path;
  double observation = 0.0;
  int turbine = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "run configuration JSON")->required();
    cmd->add_option("--out", common.out_dir, "output directory")->required();
    cmd->add_option("--seed", common.seed, "override truth and sampler seeds");
  };

  auto* fit = app.add_subcommand("fit-surrogate", "fit the stiffness->frequency polynomial");
  add_common(fit);

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic population dataset");
  add_common(gen);

  auto* infer = app.add_subcommand("infer", "sample the hierarchical posterior with NUTS");
  add_common(infer);
  infer->add_option("--dataset", dataset_path, "dataset CSV")->required();
  infer->add_option("--surrogate", surrogate_path, "surrogate JSON")->required();

  auto* detect = app.add_subcommand("detect", "classify a new frequency observation");
  add_common(detect);
  detect->add_option("--posterior", posterior_path, "posterior CSV")->required();
  detect->add_option("--observation", observation, "observed frequency, Hz")->required();
  detect->add_option("--turbine", turbine, "turbine index (1-based)")->required();

  auto* sweep = app.add_subcommand("scour-sweep", "mean frequency vs scour depth");
  add_common(sweep);
  sweep->add_option("--posterior", posterior_path, "posterior CSV")->required();
  sweep->add_option("--turbine", turbine, "turbine index (1-based)")->required();

  auto* plot = app.add_subcommand("plot", "per-chain posterior density SVGs");
  plot->add_option("--posterior", posterior_path, "posterior CSV")->required();
  plot->add_option("--out", common.out_dir, "output directory")->required();
  plot->add_option("--truth", truth_path, "ground-truth JSON for dashed reference lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_fit_surrogate(common);
    if (gen->parsed()) return cmd_gen_data(common);
    if (infer->parsed()) return cmd_infer(common, dataset_path, surrogate_path);
    if (detect->parsed()) return cmd_detect(common, posterior_path, observation, turbine);
    if (sweep->parsed()) return cmd_scour_sweep(common, posterior_path, turbine);
    if (plot->parsed()) return cmd_plot(posterior_path, common.out_dir, truth_path);
  } catch (const windmon::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const windmon::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 4;
  }
  return 2;
}
