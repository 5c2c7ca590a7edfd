#pragma once

#include <Eigen/Dense>
#include <vector>

#include "windmon/nuts.hpp"

namespace windmon::nuts {

struct RhatResult {
  double value = 1.0;
  bool degenerate = false;  // zero-variance chains
};

// Rank-normalized split-R-hat over per-chain draw vectors (equal lengths,
// >= 2 chains, >= 4 draws each).
RhatResult split_rhat(const std::vector<Eigen::VectorXd>& chain_draws);

// Bulk effective sample size: Geyer initial-monotone-sequence estimator on
// rank-normalized split chains.
double bulk_ess(const std::vector<Eigen::VectorXd>& chain_draws);

RhatResult rhat(const PosteriorChains& chains, int coordinate);
double ess(const PosteriorChains& chains, int coordinate);

// Inverse standard normal CDF (Acklam's rational approximation, |rel err| ~ 1e-9).
double normal_quantile(double p);

}  // namespace windmon::nuts
