#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "windmon/rng.hpp"

namespace windmon::nuts {

struct Density {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// Log target density and gradient in unconstrained coordinates. A value of
// -inf (or a non-finite gradient) marks the rejected region; the sampler
// treats proposals there as divergent.
using TargetFn = std::function<Density(const Eigen::VectorXd&)>;

struct SamplerConfig {
  int n_chains = 4;
  int n_warmup = 2000;
  int n_samples = 2000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  std::optional<double> step_size_override;  // skips adaptation entirely
  unsigned max_threads = 0;                  // 0 = hardware concurrency

  void validate() const;
};

struct DrawStats {
  int tree_depth = 0;
  bool divergent = false;
  double energy = 0.0;  // H at the selected phase point
  double accept_stat = 0.0;
};

struct ChainResult {
  Eigen::MatrixXd draws;        // n_samples x dim, unconstrained
  Eigen::MatrixXd constrained;  // n_samples x dim
  std::vector<DrawStats> stats;
  double step_size = 0.0;
  Eigen::VectorXd mass_diag;
  int divergences() const;
};

struct PosteriorChains {
  std::vector<ChainResult> chains;
  std::vector<std::string> parameter_names;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int n_draws_per_chain() const {
    return chains.empty() ? 0 : static_cast<int>(chains.front().constrained.rows());
  }
  int dim() const {
    return chains.empty() ? 0 : static_cast<int>(chains.front().constrained.cols());
  }
  int total_draws() const { return n_chains() * n_draws_per_chain(); }
  int total_divergences() const;
  int column(const std::string& name) const;
  // merged draws of one coordinate, ordered (chain, draw)
  Eigen::VectorXd merged_constrained(int coord) const;
  std::vector<Eigen::VectorXd> per_chain_constrained(int coord) const;
};

struct InitStrategy {
  Eigen::VectorXd center;          // jitter center, unconstrained
  double jitter = 2.0;             // U[-jitter, jitter] added per coordinate
  Eigen::VectorXd init_mass_diag;  // empty -> identity
  // map from unconstrained to reporting coordinates; empty -> identity
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> to_constrained;
};

struct Phase {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
};

// One half-kick / drift / half-kick update. mass_diag holds per-coordinate
// variance scales: drift is step * mass_diag .* momentum.
Phase leapfrog(const Phase& state, double step_size, const TargetFn& target,
               const Eigen::VectorXd& mass_diag);

struct StepResult {
  Eigen::VectorXd position;
  double log_target = 0.0;
  DrawStats stats;
};

// One multinomial-NUTS transition. Tree doubling runs for depth indices
// 0..max_tree_depth inclusive, so max_tree_depth = 0 degenerates to a single
// leapfrog-step proposal.
StepResult nuts_step(const Eigen::VectorXd& current, const TargetFn& target, double step_size,
                     const Eigen::VectorXd& mass_diag, rng::DeterministicRng& rng,
                     int max_tree_depth);

struct WarmupResult {
  double step_size = 0.0;
  Eigen::VectorXd mass_diag;
  Eigen::VectorXd position;
  int divergences = 0;
};

// Dual-averaging step-size adaptation toward cfg.target_accept with windowed
// diagonal mass-matrix estimation; returns the frozen step size and mass.
WarmupResult warmup_adapt(const Eigen::VectorXd& initial_position, const TargetFn& target,
                          const SamplerConfig& cfg, const Eigen::VectorXd& init_mass_diag,
                          rng::DeterministicRng& rng);

PosteriorChains run(const TargetFn& target, const SamplerConfig& cfg,
                    const InitStrategy& init);

void write_posterior_csv(const PosteriorChains& chains, const std::string& path);
PosteriorChains read_posterior_csv(const std::string& path);

}  // namespace windmon::nuts
