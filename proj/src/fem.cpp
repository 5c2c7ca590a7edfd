#include "windmon/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "windmon/errors.hpp"

namespace windmon::fem {

namespace {

constexpr double kPi = std::numbers::pi;

// 4-point Gauss-Legendre on [-1, 1]; exact through degree 7, enough for the
// degree-6 products of cubic shape functions.
constexpr double kGaussNode[4] = {-0.8611363115940526, -0.3399810435848563,
                                  0.3399810435848563, 0.8611363115940526};
constexpr double kGaussWeight[4] = {0.3478548451374538, 0.6521451548625461,
                                    0.6521451548625461, 0.3478548451374538};

struct SectionConstants {
  double area;
  double second_moment;
  double phi;  // shear parameter 12EI/(kappa*G*A*L^2)
};

SectionConstants section_constants(const Element& e, double shear_scale) {
  const double a = e.section.area;
  const double i = e.section.second_moment;
  const double l = e.length;
  if (a <= 0.0 || i <= 0.0 || l <= 0.0) {
    throw std::invalid_argument("element requires positive area, second moment and length");
  }
  const double kappa = shear_coefficient(e.section.outer_diameter, e.section.wall_thickness,
                                         e.material.poisson_ratio());
  const double phi = 12.0 * e.material.youngs_modulus * i /
                     (shear_scale * kappa * e.material.shear_modulus * a * l * l);
  return {a, i, phi};
}

// Shear-flexible lateral shape functions, DOFs (w1, th1, w2, th2), xi = x/L.
void lateral_shapes(double xi, double length, double phi, double n[4]) {
  const double c = 1.0 / (1.0 + phi);
  n[0] = c * (2.0 * xi * xi * xi - 3.0 * xi * xi - phi * xi + 1.0 + phi);
  n[1] = c * length * (xi * xi * xi - (2.0 + 0.5 * phi) * xi * xi + (1.0 + 0.5 * phi) * xi);
  n[2] = c * (-2.0 * xi * xi * xi + 3.0 * xi * xi + phi * xi);
  n[3] = c * length * (xi * xi * xi - (1.0 - 0.5 * phi) * xi * xi - 0.5 * phi * xi);
}

// Matching cross-section rotation shape functions.
void rotation_shapes(double xi, double length, double phi, double n[4]) {
  const double c = 1.0 / (1.0 + phi);
  n[0] = c * 6.0 / length * (xi * xi - xi);
  n[1] = c * (3.0 * xi * xi - (4.0 + phi) * xi + 1.0 + phi);
  n[2] = c * 6.0 / length * (xi - xi * xi);
  n[3] = c * (3.0 * xi * xi - (2.0 - phi) * xi);
}

using Mat4 = Eigen::Matrix<double, 4, 4>;

template <typename ShapeFn>
Mat4 shape_product_integral(const Element& e, double phi, double a, double b, ShapeFn shapes) {
  Mat4 out = Mat4::Zero();
  if (b <= a) return out;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double n[4];
  for (int q = 0; q < 4; ++q) {
    const double x = mid + half * kGaussNode[q];
    shapes(x / e.length, e.length, phi, n);
    const double w = half * kGaussWeight[q];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out(i, j) += w * n[i] * n[j];
  }
  return out;
}

// Scatter a 4x4 (w, th) block into the 6x6 element layout (u1, w1, th1, u2, w2, th2).
void add_lateral_block(Eigen::Matrix<double, 6, 6>& target, const Mat4& block) {
  constexpr int map[4] = {1, 2, 4, 5};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) target(map[i], map[j]) += block(i, j);
}

int classify_dof(int dof) { return dof % 3; }  // 0 axial, 1 lateral, 2 rotation

}  // namespace

void Material::validate() const {
  if (youngs_modulus <= 0.0 || shear_modulus <= 0.0 || density <= 0.0) {
    throw std::invalid_argument("material constants must be strictly positive");
  }
  if (shear_modulus >= youngs_modulus) {
    throw std::invalid_argument("shear modulus must be below Young's modulus");
  }
}

void TubularSegment::validate() const {
  if (length <= 0.0) throw std::invalid_argument("segment length must be positive");
  if (outer_diameter_bottom <= 0.0 || outer_diameter_top <= 0.0) {
    throw std::invalid_argument("segment diameters must be positive");
  }
  if (wall_thickness <= 0.0) throw std::invalid_argument("wall thickness must be positive");
  const double d_min = std::min(outer_diameter_bottom, outer_diameter_top);
  if (wall_thickness >= 0.5 * d_min) {
    throw std::invalid_argument("wall thickness must be below half the outer diameter");
  }
  material.validate();
}

double TurbineGeometry::embedded_length() const {
  double total = 0.0;
  for (const auto& s : segments)
    if (s.environment == Environment::Embedded) total += s.length;
  return total;
}

double TurbineGeometry::total_length() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length;
  return total;
}

void TurbineGeometry::validate() const {
  if (segments.empty()) throw std::invalid_argument("geometry needs at least one segment");
  for (const auto& s : segments) s.validate();
  // Embedded segments must sit contiguously at the base, submerged between
  // embedded and air; encoded as a non-decreasing environment order.
  int last = -1;
  for (const auto& s : segments) {
    const int rank = static_cast<int>(s.environment);
    if (rank < last) {
      throw std::invalid_argument("segment environments must run embedded -> submerged -> air");
    }
    last = rank;
  }
  if (tip_mass < 0.0) throw std::invalid_argument("tip mass must be non-negative");
  if (water_density < 0.0) throw std::invalid_argument("water density must be non-negative");
}

void FoundationModel::validate() const {
  if (lateral_stiffness_per_length < 0.0 || base_axial_stiffness < 0.0) {
    throw std::invalid_argument("foundation stiffnesses must be non-negative");
  }
}

double shear_coefficient(double outer_diameter, double wall_thickness, double poisson_ratio) {
  if (outer_diameter <= 0.0 || wall_thickness <= 0.0 ||
      wall_thickness >= 0.5 * outer_diameter) {
    throw std::invalid_argument("degenerate section for shear coefficient");
  }
  const double m = (outer_diameter - 2.0 * wall_thickness) / outer_diameter;  // r_i / r_o
  const double m2 = m * m;
  const double one_m2_sq = (1.0 + m2) * (1.0 + m2);
  const double nu = poisson_ratio;
  return 6.0 * (1.0 + nu) * one_m2_sq /
         ((7.0 + 6.0 * nu) * one_m2_sq + (20.0 + 12.0 * nu) * m2);
}

double added_mass_per_length(const Section& section, Environment environment,
                             double water_density, double added_mass_coefficient) {
  if (environment != Environment::Submerged) return 0.0;
  const double radius = 0.5 * section.outer_diameter;
  return added_mass_coefficient * water_density * kPi * radius * radius;
}

Mesh build_mesh(const TurbineGeometry& geometry, double target_element_length) {
  geometry.validate();
  if (target_element_length <= 0.0) {
    throw std::invalid_argument("target element length must be positive");
  }
  constexpr double kEmbeddedMaxLength = 0.1;

  Mesh mesh;
  mesh.embedded_length = geometry.embedded_length();
  mesh.node_x.push_back(0.0);
  double x = 0.0;
  int node = 0;
  for (const auto& seg : geometry.segments) {
    double target = target_element_length;
    if (seg.environment == Environment::Embedded) {
      target = std::min(target, kEmbeddedMaxLength);
    }
    const int n_el = std::max(1, static_cast<int>(std::ceil(seg.length / target)));
    const double el_len = seg.length / n_el;
    for (int i = 0; i < n_el; ++i) {
      Element e;
      e.node_a = node;
      e.node_b = node + 1;
      e.x_start = x;
      e.length = el_len;
      const double mid_fraction = (i + 0.5) / n_el;
      const double d = seg.outer_diameter_at(mid_fraction);
      const double t = seg.wall_thickness;
      const double d_inner = d - 2.0 * t;
      e.section.outer_diameter = d;
      e.section.wall_thickness = t;
      e.section.area = kPi / 4.0 * (d * d - d_inner * d_inner);
      e.section.second_moment =
          kPi / 64.0 * (d * d * d * d - d_inner * d_inner * d_inner * d_inner);
      e.material = seg.material;
      e.environment = seg.environment;
      mesh.elements.push_back(e);
      x += el_len;
      ++node;
      mesh.node_x.push_back(x);
    }
  }
  return mesh;
}

ElementMatrices timoshenko_element_matrices(const Element& element, double water_density,
                                            const ModelOptions& options) {
  const auto sc = section_constants(element, options.shear_scale);
  const double l = element.length;
  const double e_mod = element.material.youngs_modulus;
  const double rho = element.material.density;
  const double phi = sc.phi;

  ElementMatrices out;
  out.stiffness.setZero();
  out.mass.setZero();

  // Axial bar, DOFs (u1, u2).
  const double ea_l = e_mod * sc.area / l;
  out.stiffness(0, 0) += ea_l;
  out.stiffness(0, 3) -= ea_l;
  out.stiffness(3, 0) -= ea_l;
  out.stiffness(3, 3) += ea_l;
  const double m_ax = rho * sc.area * l;
  out.mass(0, 0) += m_ax / 3.0;
  out.mass(0, 3) += m_ax / 6.0;
  out.mass(3, 0) += m_ax / 6.0;
  out.mass(3, 3) += m_ax / 3.0;

  // Bending block, DOFs (w1, th1, w2, th2).
  const double k0 = e_mod * sc.second_moment / ((1.0 + phi) * l * l * l);
  Mat4 kb;
  kb << 12.0, 6.0 * l, -12.0, 6.0 * l,
      6.0 * l, (4.0 + phi) * l * l, -6.0 * l, (2.0 - phi) * l * l,
      -12.0, -6.0 * l, 12.0, -6.0 * l,
      6.0 * l, (2.0 - phi) * l * l, -6.0 * l, (4.0 + phi) * l * l;
  add_lateral_block(out.stiffness, (k0 * kb).eval());

  // Translational lateral mass, including hydrodynamic added mass when submerged.
  const double mass_per_length =
      rho * sc.area + added_mass_per_length(element.section, element.environment, water_density,
                                            options.added_mass_coefficient);
  const Mat4 lateral = shape_product_integral(element, phi, 0.0, l, lateral_shapes);
  add_lateral_block(out.mass, (mass_per_length * lateral).eval());

  if (options.rotary_inertia) {
    const Mat4 rotary = shape_product_integral(element, phi, 0.0, l, rotation_shapes);
    add_lateral_block(out.mass, (rho * sc.second_moment * rotary).eval());
  }
  return out;
}

Eigen::Matrix<double, 6, 6> distributed_spring_matrix(double k_s, const Element& element,
                                                      double cover_start, double cover_end,
                                                      double shear_scale) {
  if (k_s < 0.0) throw std::invalid_argument("spring stiffness must be non-negative");
  constexpr double kTol = 1e-12;
  if (cover_start < -kTol || cover_end > element.length + kTol) {
    throw std::invalid_argument("spring coverage outside element");
  }
  Eigen::Matrix<double, 6, 6> out = Eigen::Matrix<double, 6, 6>::Zero();
  if (k_s == 0.0 || cover_end <= cover_start) return out;
  const auto sc = section_constants(element, shear_scale);
  const Mat4 block = shape_product_integral(
      element, sc.phi, std::max(cover_start, 0.0), std::min(cover_end, element.length),
      lateral_shapes);
  add_lateral_block(out, (k_s * block).eval());
  return out;
}

namespace {

AssembledSystem assemble_impl(const TurbineModel& model, const Mesh& mesh, double k_s,
                              double scour_depth) {
  model.geometry.validate();
  model.foundation.validate();
  if (k_s < 0.0) throw std::invalid_argument("spring stiffness must be non-negative");
  if (scour_depth < 0.0 || scour_depth > mesh.embedded_length + 1e-12) {
    throw std::invalid_argument("scour depth outside [0, embedded length]");
  }

  const int n = mesh.n_dofs();
  AssembledSystem sys{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};

  // Springs act on [0, embedded_length - scour]: scour removes support from
  // the mudline downwards.
  const double spring_top = mesh.embedded_length - scour_depth;

  for (const auto& e : mesh.elements) {
    const auto em = timoshenko_element_matrices(e, model.geometry.water_density, model.options);
    Eigen::Matrix<double, 6, 6> ke = em.stiffness;
    if (e.environment == Environment::Embedded && k_s > 0.0) {
      const double hi = std::min(e.length, spring_top - e.x_start);
      if (hi > 0.0) {
        ke += distributed_spring_matrix(k_s, e, 0.0, hi, model.options.shear_scale);
      }
    }
    const int dof[6] = {3 * e.node_a, 3 * e.node_a + 1, 3 * e.node_a + 2,
                        3 * e.node_b, 3 * e.node_b + 1, 3 * e.node_b + 2};
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        sys.stiffness(dof[i], dof[j]) += ke(i, j);
        sys.mass(dof[i], dof[j]) += em.mass(i, j);
      }
    }
  }

  // q-z axial spring at the base node.
  sys.stiffness(0, 0) += model.foundation.base_axial_stiffness;

  // Lumped nacelle/rotor mass on the top node's translational DOFs.
  const int top = mesh.n_nodes() - 1;
  sys.mass(3 * top, 3 * top) += model.geometry.tip_mass;
  sys.mass(3 * top + 1, 3 * top + 1) += model.geometry.tip_mass;

  if (model.options.clamp_base) {
    const int m = n - 3;
    AssembledSystem clamped{sys.stiffness.bottomRightCorner(m, m),
                            sys.mass.bottomRightCorner(m, m)};
    return clamped;
  }
  return sys;
}

}  // namespace

AssembledSystem assemble(const TurbineModel& model, const Mesh& mesh, double k_s,
                         double scour_depth) {
  return assemble_impl(model, mesh, k_s, scour_depth);
}

AssembledSystem assemble(const TurbineModel& model, double k_s, double scour_depth) {
  const Mesh mesh = build_mesh(model.geometry, model.options.target_element_length);
  return assemble_impl(model, mesh, k_s, scour_depth);
}

ModalResult solve_modes(const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass,
                        int n_modes) {
  const Eigen::Index n = stiffness.rows();
  if (stiffness.cols() != n || mass.rows() != n || mass.cols() != n) {
    throw std::invalid_argument("stiffness and mass must be square and of equal size");
  }
  if (n_modes < 1 || n_modes > n) {
    throw std::invalid_argument("n_modes outside [1, dof count]");
  }

  // Reduce K phi = w^2 M phi to a standard symmetric problem via M = L L^T.
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mass matrix is not positive definite");
  }
  Eigen::MatrixXd a = llt.matrixL().solve(stiffness);
  Eigen::MatrixXd at = a.transpose();
  a = llt.matrixL().solve(at);
  a = (0.5 * (a + a.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolve failed to converge");
  }

  const Eigen::VectorXd& lambda = es.eigenvalues();
  // Rigid-body cutoff is relative to the largest *returned* eigenvalue; the
  // full spectrum tops out at short-element axial modes many decades above
  // the structural band and would swallow real modes.
  const double lambda_max = std::max(lambda(n_modes - 1), 0.0);
  const double rigid_threshold = 1e-8 * lambda_max;

  ModalResult result;
  result.frequencies_hz.reserve(n_modes);
  result.classification.reserve(n_modes);
  result.mode_shapes.resize(n, n_modes);
  for (int k = 0; k < n_modes; ++k) {
    const double lam = lambda(k);
    result.frequencies_hz.push_back(std::sqrt(std::max(lam, 0.0)) / (2.0 * kPi));
    // L^-T y is mass-normalized because y has unit norm.
    Eigen::VectorXd shape = llt.matrixU().solve(es.eigenvectors().col(k));
    result.mode_shapes.col(k) = shape;

    if (lam < rigid_threshold) {
      result.classification.push_back(ModeKind::RigidBody);
      continue;
    }
    const Eigen::VectorXd weighted = mass * shape;
    double axial = 0.0;
    double lateral = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = shape(i) * weighted(i);
      if (classify_dof(static_cast<int>(i)) == 0) {
        axial += w;
      } else {
        lateral += w;
      }
    }
    result.classification.push_back(lateral >= axial ? ModeKind::Bending : ModeKind::Axial);
  }
  return result;
}

double first_bending_frequency(const TurbineModel& model, const Mesh& mesh, double k_s,
                               double scour_depth) {
  // The planar beam decouples exactly: axial DOFs never couple to (w, theta),
  // so the bending spectrum is the spectrum of the lateral sub-pencil. Solving
  // that block alone (eigenvalues only) gives the identical first bending
  // frequency as the full solve_modes path at a third of the DOFs; the
  // equivalence is pinned by tests.
  const auto sys = assemble_impl(model, mesh, k_s, scour_depth);
  const Eigen::Index n = sys.stiffness.rows();
  std::vector<Eigen::Index> lateral;
  lateral.reserve(2 * n / 3 + 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i % 3 != 0) lateral.push_back(i);
  }
  const Eigen::Index m = static_cast<Eigen::Index>(lateral.size());
  Eigen::MatrixXd kw(m, m);
  Eigen::MatrixXd mw(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      kw(r, c) = sys.stiffness(lateral[r], lateral[c]);
      mw(r, c) = sys.mass(lateral[r], lateral[c]);
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(mw);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mass matrix is not positive definite");
  }
  Eigen::MatrixXd a = llt.matrixL().solve(kw);
  Eigen::MatrixXd at = a.transpose();
  a = llt.matrixL().solve(at);
  a = (0.5 * (a + a.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolve failed to converge");
  }

  const Eigen::VectorXd& lambda = es.eigenvalues();
  const int window = static_cast<int>(std::min<Eigen::Index>(m, 12));
  const double rigid_threshold = 1e-8 * std::max(lambda(window - 1), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (lambda(i) >= rigid_threshold && lambda(i) > 0.0) {
      return std::sqrt(lambda(i)) / (2.0 * kPi);
    }
  }
  throw NumericalError("no bending mode found in spectrum");
}

double first_bending_frequency(const TurbineModel& model, double k_s, double scour_depth) {
  const Mesh mesh = build_mesh(model.geometry, model.options.target_element_length);
  return first_bending_frequency(model, mesh, k_s, scour_depth);
}

}  // namespace windmon::fem
