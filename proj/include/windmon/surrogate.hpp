#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "windmon/fem.hpp"

namespace windmon::surrogate {

struct FitReport {
  double max_abs = 0.0;  // validation grid, absolute residual vs FE
  double rms = 0.0;
  int n_train = 0;
  int n_val = 0;
  double max_rel = 0.0;  // kept in memory for gating/reporting; not persisted
};

// Polynomial map from soil spring stiffness (N/m per m) to first bending
// frequency (Hz), fitted in the affinely scaled variable on [-1, 1].
class PolySurrogate {
 public:
  PolySurrogate() = default;
  PolySurrogate(int degree, double domain_min, double domain_max,
                std::vector<double> coefficients, FitReport report);

  double operator()(double k_s) const;
  // Value and d(frequency)/d(k_s), chain-ruled through the input scaling.
  std::pair<double, double> value_and_derivative(double k_s) const;

  int degree() const { return degree_; }
  double domain_min() const { return domain_min_; }
  double domain_max() const { return domain_max_; }
  double center() const { return center_; }
  double half_width() const { return half_width_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const FitReport& fit_report() const { return report_; }

  // Diagnostic only: number of evaluations requested outside the fit domain.
  std::uint64_t out_of_domain_count() const { return counter_ ? counter_->load() : 0; }
  void reset_out_of_domain_count() const {
    if (counter_) counter_->store(0);
  }

  std::string to_json() const;
  static PolySurrogate from_json(const std::string& text);

 private:
  int degree_ = 0;
  double domain_min_ = 0.0;
  double domain_max_ = 0.0;
  double center_ = 0.0;
  double half_width_ = 1.0;
  std::vector<double> coefficients_;  // scaled basis, ascending powers
  FitReport report_;
  // shared so copies of a fitted surrogate aggregate into one counter
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

// Least-squares fit of first_bending_frequency over an evenly spaced grid on
// [domain_min, domain_max]; validation residuals from the grid midpoints.
PolySurrogate fit_surrogate(const fem::TurbineModel& model, double domain_min,
                            double domain_max, int n_points, int degree);

// Fit against an arbitrary stiffness->frequency map (test seam; the FE-backed
// overload above is the production path).
PolySurrogate fit_surrogate_fn(const std::function<double(double)>& f, double domain_min,
                               double domain_max, int n_points, int degree);

void save_surrogate(const PolySurrogate& s, const std::string& path);
PolySurrogate load_surrogate(const std::string& path);

}  // namespace windmon::surrogate
