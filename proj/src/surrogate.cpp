#include "windmon/surrogate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "windmon/errors.hpp"
#include "windmon/parallel.hpp"

namespace windmon::surrogate {

using nlohmann::json;

PolySurrogate::PolySurrogate(int degree, double domain_min, double domain_max,
                             std::vector<double> coefficients, FitReport report)
    : degree_(degree),
      domain_min_(domain_min),
      domain_max_(domain_max),
      center_(0.5 * (domain_min + domain_max)),
      half_width_(0.5 * (domain_max - domain_min)),
      coefficients_(std::move(coefficients)),
      report_(report),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (domain_min >= domain_max) throw std::invalid_argument("surrogate domain is empty");
  if (static_cast<int>(coefficients_.size()) != degree_ + 1) {
    throw std::invalid_argument("coefficient count must be degree + 1");
  }
}

double PolySurrogate::operator()(double k_s) const {
  return value_and_derivative(k_s).first;
}

std::pair<double, double> PolySurrogate::value_and_derivative(double k_s) const {
  if (!std::isfinite(k_s)) throw std::invalid_argument("non-finite surrogate input");
  if (counter_ && (k_s < domain_min_ || k_s > domain_max_)) {
    counter_->fetch_add(1, std::memory_order_relaxed);
  }
  const double x = (k_s - center_) / half_width_;
  // Horner for the value and the scaled-variable derivative together.
  double value = 0.0;
  double deriv = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    deriv = deriv * x + value;
    value = value * x + *it;
  }
  return {value, deriv / half_width_};
}

namespace {

PolySurrogate fit_impl(const std::function<double(double)>& f, double domain_min,
                       double domain_max, int n_points, int degree, bool parallel) {
  if (domain_min >= domain_max) throw std::invalid_argument("surrogate domain is empty");
  if (degree < 0) throw std::invalid_argument("degree must be non-negative");
  if (n_points < degree + 1) throw std::invalid_argument("need at least degree + 1 fit points");

  const double center = 0.5 * (domain_min + domain_max);
  const double half_width = 0.5 * (domain_max - domain_min);

  std::vector<double> train_x(n_points);
  for (int i = 0; i < n_points; ++i) {
    train_x[i] = n_points == 1 ? center
                               : domain_min + (domain_max - domain_min) * i / (n_points - 1.0);
  }
  const int n_val = n_points - 1;
  std::vector<double> val_x(n_val);
  for (int i = 0; i < n_val; ++i) val_x[i] = 0.5 * (train_x[i] + train_x[i + 1]);

  std::vector<double> train_y(n_points), val_y(n_val);
  auto eval_point = [&](double k_s, double& out) {
    const double y = f(k_s);
    if (!std::isfinite(y)) {
      std::ostringstream msg;
      msg << "model evaluation failed at stiffness " << k_s;
      throw NumericalError(msg.str());
    }
    out = y;
  };
  if (parallel) {
    util::parallel_for(static_cast<std::size_t>(n_points + n_val), [&](std::size_t i) {
      if (i < static_cast<std::size_t>(n_points)) {
        eval_point(train_x[i], train_y[i]);
      } else {
        eval_point(val_x[i - n_points], val_y[i - n_points]);
      }
    });
  } else {
    for (int i = 0; i < n_points; ++i) eval_point(train_x[i], train_y[i]);
    for (int i = 0; i < n_val; ++i) eval_point(val_x[i], val_y[i]);
  }

  Eigen::MatrixXd design(n_points, degree + 1);
  Eigen::VectorXd rhs(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double x = (train_x[i] - center) / half_width;
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      design(i, j) = p;
      p *= x;
    }
    rhs(i) = train_y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < degree + 1) {
    throw NumericalError("rank-deficient surrogate fit");
  }
  const Eigen::VectorXd coef = qr.solve(rhs);

  PolySurrogate fitted(degree, domain_min, domain_max,
                       std::vector<double>(coef.data(), coef.data() + coef.size()), {});
  FitReport report;
  report.n_train = n_points;
  report.n_val = n_val;
  double sum_sq = 0.0;
  for (int i = 0; i < n_val; ++i) {
    const double pred = fitted(val_x[i]);
    const double abs_err = std::abs(pred - val_y[i]);
    report.max_abs = std::max(report.max_abs, abs_err);
    if (val_y[i] != 0.0) {
      report.max_rel = std::max(report.max_rel, abs_err / std::abs(val_y[i]));
    }
    sum_sq += abs_err * abs_err;
  }
  report.rms = n_val > 0 ? std::sqrt(sum_sq / n_val) : 0.0;
  fitted.reset_out_of_domain_count();
  return PolySurrogate(degree, domain_min, domain_max,
                       std::vector<double>(coef.data(), coef.data() + coef.size()), report);
}

}  // namespace

PolySurrogate fit_surrogate(const fem::TurbineModel& model, double domain_min,
                            double domain_max, int n_points, int degree) {
  const fem::Mesh mesh = fem::build_mesh(model.geometry, model.options.target_element_length);
  auto f = [&](double k_s) { return fem::first_bending_frequency(model, mesh, k_s, 0.0); };
  return fit_impl(f, domain_min, domain_max, n_points, degree, /*parallel=*/true);
}

PolySurrogate fit_surrogate_fn(const std::function<double(double)>& f, double domain_min,
                               double domain_max, int n_points, int degree) {
  return fit_impl(f, domain_min, domain_max, n_points, degree, /*parallel=*/false);
}

std::string PolySurrogate::to_json() const {
  json j;
  j["degree"] = degree_;
  j["domain"] = {domain_min_, domain_max_};
  j["scaling"] = {{"center", center_}, {"half_width", half_width_}};
  j["coefficients"] = coefficients_;
  j["fit_report"] = {{"max_abs", report_.max_abs},
                     {"rms", report_.rms},
                     {"n_train", report_.n_train},
                     {"n_val", report_.n_val}};
  return j.dump(2);
}

PolySurrogate PolySurrogate::from_json(const std::string& text) {
  json j = json::parse(text);
  FitReport report;
  report.max_abs = j.at("fit_report").at("max_abs").get<double>();
  report.rms = j.at("fit_report").at("rms").get<double>();
  report.n_train = j.at("fit_report").at("n_train").get<int>();
  report.n_val = j.at("fit_report").at("n_val").get<int>();
  report.max_rel = std::numeric_limits<double>::quiet_NaN();
  const auto domain = j.at("domain");
  PolySurrogate s(j.at("degree").get<int>(), domain.at(0).get<double>(),
                  domain.at(1).get<double>(), j.at("coefficients").get<std::vector<double>>(),
                  report);
  return s;
}

void save_surrogate(const PolySurrogate& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open surrogate file for writing: " + path);
  out << s.to_json() << "\n";
}

PolySurrogate load_surrogate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open surrogate file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return PolySurrogate::from_json(buffer.str());
  } catch (const json::exception& e) {
    throw ConfigError("malformed surrogate JSON in " + path + ": " + e.what());
  }
}

}  // namespace windmon::surrogate
