#include "windmon/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace windmon::nuts {

namespace {

// Split every chain in half, dropping the middle draw of odd-length chains.
std::vector<Eigen::VectorXd> split_chains(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const Eigen::Index half = c.size() / 2;
    out.push_back(c.head(half));
    out.push_back(c.tail(half));
  }
  return out;
}

// Pooled fractional ranks mapped through the normal quantile function,
// z = Phi^-1((rank - 3/8) / (S + 1/4)); ties broken by draw order.
std::vector<Eigen::VectorXd> rank_normalize(const std::vector<Eigen::VectorXd>& seqs) {
  std::size_t total = 0;
  for (const auto& s : seqs) total += static_cast<std::size_t>(s.size());

  struct Entry {
    double value;
    std::size_t seq;
    Eigen::Index idx;
  };
  std::vector<Entry> entries;
  entries.reserve(total);
  for (std::size_t m = 0; m < seqs.size(); ++m) {
    for (Eigen::Index i = 0; i < seqs[m].size(); ++i) entries.push_back({seqs[m](i), m, i});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.value < b.value; });

  std::vector<Eigen::VectorXd> out(seqs.size());
  for (std::size_t m = 0; m < seqs.size(); ++m) out[m].resize(seqs[m].size());
  const double denom = static_cast<double>(total) + 0.25;
  for (std::size_t r = 0; r < entries.size(); ++r) {
    const double p = (static_cast<double>(r + 1) - 0.375) / denom;
    out[entries[r].seq](entries[r].idx) = normal_quantile(p);
  }
  return out;
}

struct Moments {
  double within = 0.0;    // W: mean of per-sequence variances
  double var_plus = 0.0;  // (n-1)/n W + B/n
  double n = 0.0;
};

Moments pooled_moments(const std::vector<Eigen::VectorXd>& seqs) {
  const double m = static_cast<double>(seqs.size());
  const double n = static_cast<double>(seqs.front().size());
  double grand = 0.0;
  std::vector<double> means(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    means[i] = seqs[i].mean();
    grand += means[i];
  }
  grand /= m;

  double w = 0.0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    w += (seqs[i].array() - means[i]).square().sum() / (n - 1.0);
  }
  w /= m;

  double b_over_n = 0.0;
  for (double mean : means) b_over_n += (mean - grand) * (mean - grand);
  b_over_n /= (m - 1.0);

  Moments out;
  out.within = w;
  out.var_plus = (n - 1.0) / n * w + b_over_n;
  out.n = n;
  return out;
}

void check_inputs(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("diagnostics need at least 2 chains");
  for (const auto& c : chains) {
    if (c.size() < 4) throw std::invalid_argument("diagnostics need at least 4 draws");
    if (c.size() != chains.front().size()) {
      throw std::invalid_argument("chains must have equal lengths");
    }
  }
}

bool zero_variance(const std::vector<Eigen::VectorXd>& chains) {
  for (const auto& c : chains) {
    if ((c.array() != c(0)).any()) return false;
  }
  return true;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile requires p in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

RhatResult split_rhat(const std::vector<Eigen::VectorXd>& chain_draws) {
  check_inputs(chain_draws);
  if (zero_variance(chain_draws)) return {1.0, true};

  const auto z = rank_normalize(split_chains(chain_draws));
  const Moments mom = pooled_moments(z);
  if (mom.within <= 0.0) return {1.0, true};
  const double value = std::sqrt(mom.var_plus / mom.within);
  return {std::max(value, 1.0 - 1e-3), false};
}

double bulk_ess(const std::vector<Eigen::VectorXd>& chain_draws) {
  check_inputs(chain_draws);
  if (zero_variance(chain_draws)) return 0.0;

  const auto z = rank_normalize(split_chains(chain_draws));
  const std::size_t m = z.size();
  const Eigen::Index n = z.front().size();
  const Moments mom = pooled_moments(z);
  if (mom.var_plus <= 0.0) return 0.0;

  // biased per-sequence autocovariances (1/n normalization)
  std::vector<Eigen::VectorXd> acov(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd centered = z[i].array() - z[i].mean();
    acov[i].resize(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      acov[i](t) = centered.head(n - t).dot(centered.tail(n - t)) / n;
    }
  }
  auto mean_acov = [&](Eigen::Index t) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += acov[i](t);
    return s / static_cast<double>(m);
  };

  // Geyer initial positive + monotone sequence on paired autocorrelations
  double tau = 0.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mom.within - mean_acov(1)) / mom.var_plus;
  double prev_pair = rho_even + rho_odd;
  if (prev_pair < 0.0) prev_pair = 0.0;
  tau += prev_pair;
  Eigen::Index t = 2;
  while (t + 1 < n) {
    rho_even = 1.0 - (mom.within - mean_acov(t)) / mom.var_plus;
    rho_odd = 1.0 - (mom.within - mean_acov(t + 1)) / mom.var_plus;
    double pair = rho_even + rho_odd;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += pair;
    prev_pair = pair;
    t += 2;
  }

  const double tau_hat = std::max(2.0 * tau - 1.0, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(m) * static_cast<double>(n) / tau_hat;
}

RhatResult rhat(const PosteriorChains& chains, int coordinate) {
  return split_rhat(chains.per_chain_constrained(coordinate));
}

double ess(const PosteriorChains& chains, int coordinate) {
  return bulk_ess(chains.per_chain_constrained(coordinate));
}

}  // namespace windmon::nuts
