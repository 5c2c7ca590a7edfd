#include "windmon/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "windmon/errors.hpp"
#include "windmon/parallel.hpp"

namespace windmon::nuts {

namespace {

constexpr double kDivergenceThreshold = 1000.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double kinetic_energy(const Eigen::VectorXd& momentum, const Eigen::VectorXd& mass_diag) {
  return 0.5 * momentum.dot(mass_diag.cwiseProduct(momentum));
}

struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd rho;
  Eigen::VectorXd grad;
  double log_target = 0.0;

  double log_joint(const Eigen::VectorXd& mass_diag) const {
    return log_target - kinetic_energy(rho, mass_diag);
  }
};

// In-place leapfrog reusing the cached gradient; returns false on a
// non-finite evaluation (flagged divergent by the caller).
bool leapfrog_inplace(PhasePoint& z, double step, const TargetFn& target,
                      const Eigen::VectorXd& mass_diag) {
  z.rho += 0.5 * step * z.grad;
  z.theta += step * mass_diag.cwiseProduct(z.rho);
  Density d = target(z.theta);
  if (!std::isfinite(d.value) || !d.gradient.allFinite()) {
    z.log_target = kNegInf;
    z.grad = Eigen::VectorXd::Zero(z.theta.size());
    return false;
  }
  z.log_target = d.value;
  z.grad = d.gradient;
  z.rho += 0.5 * step * z.grad;
  return true;
}

struct Tree {
  PhasePoint minus;  // backward-most point, trajectory order
  PhasePoint plus;   // forward-most point
  Eigen::VectorXd sample;
  double sample_log_target = 0.0;
  double sample_log_joint = 0.0;
  double log_sum_weight = kNegInf;
  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  bool uturn = false;
};

bool is_uturn(const PhasePoint& minus, const PhasePoint& plus,
              const Eigen::VectorXd& mass_diag) {
  const Eigen::VectorXd diff = plus.theta - minus.theta;
  return diff.dot(mass_diag.cwiseProduct(minus.rho)) < 0.0 ||
         diff.dot(mass_diag.cwiseProduct(plus.rho)) < 0.0;
}

// Builds a subtree of 2^depth leapfrog steps in the given direction starting
// from `edge` (not included in the subtree).
Tree build_tree(int depth, const PhasePoint& edge, int direction, double step_size,
                const TargetFn& target, const Eigen::VectorXd& mass_diag, double log_joint_0,
                rng::DeterministicRng& rng) {
  if (depth == 0) {
    Tree leaf;
    PhasePoint z = edge;
    const bool ok = leapfrog_inplace(z, direction * step_size, target, mass_diag);
    leaf.n_leapfrog = 1;
    const double log_joint = ok ? z.log_joint(mass_diag) : kNegInf;
    const double delta = log_joint - log_joint_0;
    leaf.divergent = !ok || (log_joint_0 - log_joint) > kDivergenceThreshold;
    leaf.sum_accept = std::isfinite(delta) ? std::min(1.0, std::exp(delta)) : 0.0;
    leaf.minus = z;
    leaf.plus = z;
    leaf.sample = z.theta;
    leaf.sample_log_target = z.log_target;
    leaf.sample_log_joint = log_joint;
    leaf.log_sum_weight = leaf.divergent ? kNegInf : delta;
    return leaf;
  }

  Tree inner = build_tree(depth - 1, edge, direction, step_size, target, mass_diag,
                          log_joint_0, rng);
  if (inner.divergent || inner.uturn) return inner;

  const PhasePoint& continue_from = direction > 0 ? inner.plus : inner.minus;
  Tree outer = build_tree(depth - 1, continue_from, direction, step_size, target, mass_diag,
                          log_joint_0, rng);
  inner.n_leapfrog += outer.n_leapfrog;
  inner.sum_accept += outer.sum_accept;
  if (outer.divergent || outer.uturn) {
    inner.divergent = outer.divergent;
    inner.uturn = outer.uturn;
    return inner;
  }

  const double total = log_sum_exp(inner.log_sum_weight, outer.log_sum_weight);
  if (std::log(rng.uniform_open()) < outer.log_sum_weight - total) {
    inner.sample = outer.sample;
    inner.sample_log_target = outer.sample_log_target;
    inner.sample_log_joint = outer.sample_log_joint;
  }
  inner.log_sum_weight = total;
  if (direction > 0) {
    inner.plus = outer.plus;
  } else {
    inner.minus = outer.minus;
  }
  inner.uturn = is_uturn(inner.minus, inner.plus, mass_diag);
  return inner;
}

StepResult nuts_transition(const PhasePoint& start, const TargetFn& target, double step_size,
                           const Eigen::VectorXd& mass_diag, rng::DeterministicRng& rng,
                           int max_tree_depth) {
  PhasePoint current = start;
  const Eigen::Index dim = current.theta.size();
  current.rho.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    current.rho(i) = rng.normal() / std::sqrt(mass_diag(i));
  }
  const double log_joint_0 = current.log_joint(mass_diag);

  Tree trajectory;
  trajectory.minus = current;
  trajectory.plus = current;
  trajectory.sample = current.theta;
  trajectory.sample_log_target = current.log_target;
  trajectory.sample_log_joint = log_joint_0;
  trajectory.log_sum_weight = 0.0;

  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  int depth_stat = 0;

  for (int depth = 0; depth <= max_tree_depth; ++depth) {
    const int direction = rng.bernoulli(0.5) ? 1 : -1;
    const PhasePoint& edge = direction > 0 ? trajectory.plus : trajectory.minus;
    Tree subtree = build_tree(depth, edge, direction, step_size, target, mass_diag,
                              log_joint_0, rng);
    sum_accept += subtree.sum_accept;
    n_leapfrog += subtree.n_leapfrog;
    if (subtree.divergent) {
      divergent = true;
      break;
    }
    if (subtree.uturn) break;

    // biased progressive selection toward the fresh subtree
    const double total = log_sum_exp(trajectory.log_sum_weight, subtree.log_sum_weight);
    if (std::log(rng.uniform_open()) < subtree.log_sum_weight - total) {
      trajectory.sample = subtree.sample;
      trajectory.sample_log_target = subtree.sample_log_target;
      trajectory.sample_log_joint = subtree.sample_log_joint;
    }
    trajectory.log_sum_weight = total;
    if (direction > 0) {
      trajectory.plus = subtree.plus;
    } else {
      trajectory.minus = subtree.minus;
    }
    depth_stat = depth;
    if (is_uturn(trajectory.minus, trajectory.plus, mass_diag)) break;
  }

  StepResult result;
  result.position = trajectory.sample;
  result.log_target = trajectory.sample_log_target;
  result.stats.tree_depth = depth_stat;
  result.stats.divergent = divergent;
  result.stats.energy = -trajectory.sample_log_joint;
  result.stats.accept_stat = n_leapfrog > 0 ? sum_accept / n_leapfrog : 0.0;
  return result;
}

PhasePoint make_phase_point(const Eigen::VectorXd& position, const TargetFn& target) {
  Density d = target(position);
  if (!std::isfinite(d.value)) {
    throw NumericalError(
        "initial state has non-finite log posterior; re-initialize the chain");
  }
  PhasePoint z;
  z.theta = position;
  z.rho = Eigen::VectorXd::Zero(position.size());
  z.grad = d.gradient;
  z.log_target = d.value;
  return z;
}

double find_initial_step_size(const PhasePoint& start, const TargetFn& target,
                              const Eigen::VectorXd& mass_diag, rng::DeterministicRng& rng) {
  double step = 1.0;
  PhasePoint z = start;
  z.rho.resize(start.theta.size());
  for (Eigen::Index i = 0; i < z.rho.size(); ++i) {
    z.rho(i) = rng.normal() / std::sqrt(mass_diag(i));
  }
  const double log_joint_0 = z.log_joint(mass_diag);

  auto log_ratio_at = [&](double eps) {
    PhasePoint trial = z;
    if (!leapfrog_inplace(trial, eps, target, mass_diag)) return kNegInf;
    return trial.log_joint(mass_diag) - log_joint_0;
  };

  double ratio = log_ratio_at(step);
  int guard = 0;
  while (!std::isfinite(ratio) && guard++ < 60) {
    step *= 0.5;
    ratio = log_ratio_at(step);
  }
  if (!std::isfinite(ratio)) return 1e-6;

  const double direction = ratio > std::log(0.5) ? 1.0 : -1.0;
  guard = 0;
  while (guard++ < 60) {
    if (direction * ratio <= direction * std::log(0.5)) break;
    step *= direction > 0 ? 2.0 : 0.5;
    ratio = log_ratio_at(step);
    if (!std::isfinite(ratio)) {
      step *= 0.5;
      break;
    }
  }
  return step;
}

// Nesterov dual averaging on the acceptance statistic (Hoffman-Gelman
// schedule: gamma = 0.05, t0 = 10, kappa = 0.75).
struct DualAveraging {
  double mu = 0.0;
  double log_step = 0.0;
  double log_step_avg = 0.0;
  double h_bar = 0.0;
  int counter = 0;
  double target = 0.8;

  void restart(double step) {
    mu = std::log(10.0 * step);
    log_step = std::log(step);
    log_step_avg = std::log(step);
    h_bar = 0.0;
    counter = 0;
  }
  void update(double accept_stat) {
    ++counter;
    constexpr double gamma = 0.05;
    constexpr double t0 = 10.0;
    constexpr double kappa = 0.75;
    const double m = static_cast<double>(counter);
    h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (target - accept_stat) / (m + t0);
    log_step = mu - std::sqrt(m) / gamma * h_bar;
    const double eta = std::pow(m, -kappa);
    log_step_avg = eta * log_step + (1.0 - eta) * log_step_avg;
  }
  double current() const { return std::exp(log_step); }
  double averaged() const { return std::exp(log_step_avg); }
};

// Streaming variance for the mass-matrix windows.
struct Welford {
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;
  int count = 0;

  void reset(Eigen::Index dim) {
    mean = Eigen::VectorXd::Zero(dim);
    m2 = Eigen::VectorXd::Zero(dim);
    count = 0;
  }
  void add(const Eigen::VectorXd& x) {
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(x - mean);
  }
  // regularized sample variance, shrunk toward 1e-3 for short windows
  Eigen::VectorXd regularized_variance() const {
    const double n = static_cast<double>(count);
    Eigen::VectorXd var = m2 / std::max(1.0, n - 1.0);
    return var * (n / (n + 5.0)) +
           Eigen::VectorXd::Constant(var.size(), 1e-3 * (5.0 / (n + 5.0)));
  }
};

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains < 1 || n_warmup < 1 || n_samples < 1) {
    throw std::invalid_argument("chain, warmup and sample counts must be >= 1");
  }
  if (target_accept <= 0.0 || target_accept >= 1.0) {
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  }
  if (max_tree_depth < 0) throw std::invalid_argument("max_tree_depth must be >= 0");
  if (step_size_override && *step_size_override <= 0.0) {
    throw std::invalid_argument("step size override must be positive");
  }
}

int ChainResult::divergences() const {
  int n = 0;
  for (const auto& s : stats) n += s.divergent ? 1 : 0;
  return n;
}

int PosteriorChains::total_divergences() const {
  int n = 0;
  for (const auto& c : chains) n += c.divergences();
  return n;
}

int PosteriorChains::column(const std::string& name) const {
  for (std::size_t i = 0; i < parameter_names.size(); ++i) {
    if (parameter_names[i] == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown parameter name: " + name);
}

Eigen::VectorXd PosteriorChains::merged_constrained(int coord) const {
  Eigen::VectorXd merged(total_draws());
  Eigen::Index offset = 0;
  for (const auto& c : chains) {
    merged.segment(offset, c.constrained.rows()) = c.constrained.col(coord);
    offset += c.constrained.rows();
  }
  return merged;
}

std::vector<Eigen::VectorXd> PosteriorChains::per_chain_constrained(int coord) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(chains.size());
  for (const auto& c : chains) out.push_back(c.constrained.col(coord));
  return out;
}

Phase leapfrog(const Phase& state, double step_size, const TargetFn& target,
               const Eigen::VectorXd& mass_diag) {
  if (!state.position.allFinite() || !state.momentum.allFinite()) {
    throw std::invalid_argument("leapfrog requires finite phase-space input");
  }
  if ((mass_diag.array() <= 0.0).any()) {
    throw std::invalid_argument("mass_diag must be strictly positive");
  }
  Density d = target(state.position);
  PhasePoint z{state.position, state.momentum, d.gradient, d.value};
  leapfrog_inplace(z, step_size, target, mass_diag);
  return Phase{z.theta, z.rho};
}

StepResult nuts_step(const Eigen::VectorXd& current, const TargetFn& target, double step_size,
                     const Eigen::VectorXd& mass_diag, rng::DeterministicRng& rng,
                     int max_tree_depth) {
  PhasePoint z = make_phase_point(current, target);
  return nuts_transition(z, target, step_size, mass_diag, rng, max_tree_depth);
}

WarmupResult warmup_adapt(const Eigen::VectorXd& initial_position, const TargetFn& target,
                          const SamplerConfig& cfg, const Eigen::VectorXd& init_mass_diag,
                          rng::DeterministicRng& rng) {
  cfg.validate();
  const Eigen::Index dim = initial_position.size();
  Eigen::VectorXd mass_diag =
      init_mass_diag.size() == dim ? init_mass_diag : Eigen::VectorXd::Ones(dim);

  PhasePoint z = make_phase_point(initial_position, target);
  WarmupResult out;
  out.mass_diag = mass_diag;

  if (cfg.step_size_override) {
    out.step_size = *cfg.step_size_override;
    for (int i = 0; i < cfg.n_warmup; ++i) {
      StepResult step =
          nuts_transition(z, target, out.step_size, mass_diag, rng, cfg.max_tree_depth);
      out.divergences += step.stats.divergent ? 1 : 0;
      z.theta = step.position;
      z.log_target = step.log_target;
      z.grad = target(z.theta).gradient;
    }
    out.position = z.theta;
    return out;
  }

  // Stan-style schedule: step-size-only head and tail buffers around doubling
  // variance-estimation windows.
  int init_buffer = 75;
  int term_buffer = 50;
  int base_window = 25;
  if (cfg.n_warmup < init_buffer + term_buffer + base_window) {
    init_buffer = std::max(1, static_cast<int>(0.15 * cfg.n_warmup));
    term_buffer = std::max(1, static_cast<int>(0.10 * cfg.n_warmup));
    base_window = std::max(1, cfg.n_warmup - init_buffer - term_buffer);
  }

  DualAveraging da;
  da.target = cfg.target_accept;
  da.restart(find_initial_step_size(z, target, mass_diag, rng));

  Welford window;
  window.reset(dim);
  int window_end = init_buffer + base_window;
  int window_width = base_window;
  const int adapt_end = cfg.n_warmup - term_buffer;

  int total_divergent = 0;
  for (int i = 0; i < cfg.n_warmup; ++i) {
    StepResult step =
        nuts_transition(z, target, da.current(), mass_diag, rng, cfg.max_tree_depth);
    total_divergent += step.stats.divergent ? 1 : 0;
    z.theta = step.position;
    z.log_target = step.log_target;
    z.grad = target(z.theta).gradient;
    da.update(step.stats.accept_stat);

    const bool in_window_phase = i >= init_buffer && i < adapt_end;
    if (in_window_phase) {
      window.add(z.theta);
      // close the window: refresh the mass matrix and restart averaging
      if (i + 1 == window_end) {
        if (window.count > 1) mass_diag = window.regularized_variance();
        window.reset(dim);
        window_width *= 2;
        window_end = std::min(adapt_end, window_end + window_width);
        if (adapt_end - window_end < 2 * window_width) window_end = adapt_end;
        da.restart(find_initial_step_size(z, target, mass_diag, rng));
      }
    }
  }

  if (total_divergent == cfg.n_warmup) {
    throw NumericalError("every warm-up transition diverged; check model scaling");
  }

  out.step_size = da.averaged();
  out.mass_diag = mass_diag;
  out.position = z.theta;
  out.divergences = total_divergent;
  return out;
}

PosteriorChains run(const TargetFn& target, const SamplerConfig& cfg,
                    const InitStrategy& init) {
  cfg.validate();
  const Eigen::Index dim = init.center.size();
  if (dim == 0) throw std::invalid_argument("init center must be non-empty");

  PosteriorChains result;
  result.chains.resize(cfg.n_chains);

  util::parallel_for(
      static_cast<std::size_t>(cfg.n_chains),
      [&](std::size_t chain_index) {
        rng::DeterministicRng rng(rng::derive_seed(cfg.seed, chain_index));

        Eigen::VectorXd position(dim);
        bool initialized = false;
        for (int attempt = 0; attempt < 100 && !initialized; ++attempt) {
          for (Eigen::Index i = 0; i < dim; ++i) {
            position(i) = init.center(i) + rng.uniform(-init.jitter, init.jitter);
          }
          initialized = std::isfinite(target(position).value);
        }
        if (!initialized) {
          throw NumericalError("chain " + std::to_string(chain_index) +
                               ": no finite starting point found; re-initialize");
        }

        Eigen::VectorXd init_mass = init.init_mass_diag.size() == dim
                                        ? init.init_mass_diag
                                        : Eigen::VectorXd::Ones(dim);
        WarmupResult warm = warmup_adapt(position, target, cfg, init_mass, rng);

        ChainResult chain;
        chain.step_size = warm.step_size;
        chain.mass_diag = warm.mass_diag;
        chain.draws.resize(cfg.n_samples, dim);
        chain.constrained.resize(cfg.n_samples, dim);
        chain.stats.resize(cfg.n_samples);

        PhasePoint z = make_phase_point(warm.position, target);
        for (int i = 0; i < cfg.n_samples; ++i) {
          StepResult step = nuts_transition(z, target, warm.step_size, warm.mass_diag, rng,
                                            cfg.max_tree_depth);
          z.theta = step.position;
          z.log_target = step.log_target;
          z.grad = target(z.theta).gradient;
          chain.draws.row(i) = z.theta.transpose();
          chain.constrained.row(i) =
              (init.to_constrained ? init.to_constrained(z.theta) : z.theta).transpose();
          chain.stats[i] = step.stats;
        }
        result.chains[chain_index] = std::move(chain);
      },
      cfg.max_threads);

  return result;
}

void write_posterior_csv(const PosteriorChains& chains, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open posterior file for writing: " + path);
  out << "chain,draw";
  for (const auto& name : chains.parameter_names) out << "," << name;
  out << "\n";
  char buffer[64];
  for (int c = 0; c < chains.n_chains(); ++c) {
    const auto& m = chains.chains[c].constrained;
    for (Eigen::Index d = 0; d < m.rows(); ++d) {
      out << c + 1 << "," << d + 1;
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", m(d, j));
        out << "," << buffer;
      }
      out << "\n";
    }
  }
}

PosteriorChains read_posterior_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open posterior file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("posterior file is empty: " + path);

  PosteriorChains chains;
  {
    std::stringstream header(line);
    std::string field;
    int index = 0;
    while (std::getline(header, field, ',')) {
      if (index >= 2) chains.parameter_names.push_back(field);
      ++index;
    }
  }
  const int dim = static_cast<int>(chains.parameter_names.size());
  if (dim == 0) throw ConfigError("posterior header has no parameter columns: " + path);

  std::vector<std::vector<Eigen::VectorXd>> rows_per_chain;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(ss, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ConfigError("posterior parse error at line " + std::to_string(line_number));
      }
    }
    if (static_cast<int>(values.size()) != dim + 2) {
      throw ConfigError("posterior row has wrong column count at line " +
                        std::to_string(line_number));
    }
    const int chain_id = static_cast<int>(values[0]);
    if (chain_id < 1) {
      throw ConfigError("invalid chain id at line " + std::to_string(line_number));
    }
    if (static_cast<int>(rows_per_chain.size()) < chain_id) rows_per_chain.resize(chain_id);
    Eigen::VectorXd row(dim);
    for (int j = 0; j < dim; ++j) row(j) = values[j + 2];
    rows_per_chain[chain_id - 1].push_back(std::move(row));
  }
  if (rows_per_chain.empty()) throw ConfigError("posterior file has no draws: " + path);

  for (const auto& rows : rows_per_chain) {
    if (rows.empty()) throw ConfigError("posterior file has an empty chain: " + path);
    if (rows.size() != rows_per_chain.front().size()) {
      throw ConfigError("posterior chains have unequal draw counts: " + path);
    }
    ChainResult chain;
    chain.constrained.resize(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) chain.constrained.row(i) = rows[i];
    chain.draws = chain.constrained;  // raw draws unavailable from CSV
    chain.stats.resize(rows.size());
    chains.chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace windmon::nuts
