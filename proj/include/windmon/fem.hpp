#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace windmon::fem {

enum class Environment { Embedded, Submerged, Air };

enum class ModeKind { Bending, Axial, RigidBody };

struct Material {
  double youngs_modulus = 0.0;  // Pa
  double shear_modulus = 0.0;   // Pa
  double density = 0.0;         // kg/m^3

  double poisson_ratio() const { return youngs_modulus / (2.0 * shear_modulus) - 1.0; }
  void validate() const;
};

// One linearly tapered tubular piece of the monopile/tower beam. Diameters
// interpolate linearly from bottom to top; wall thickness is constant.
struct TubularSegment {
  double length = 0.0;                 // m
  double outer_diameter_bottom = 0.0;  // m
  double outer_diameter_top = 0.0;     // m
  double wall_thickness = 0.0;         // m
  Material material;
  Environment environment = Environment::Air;

  double outer_diameter_at(double fraction) const {
    return outer_diameter_bottom + fraction * (outer_diameter_top - outer_diameter_bottom);
  }
  void validate() const;
};

struct TurbineGeometry {
  std::vector<TubularSegment> segments;  // ordered base -> tip
  double tip_mass = 0.0;                 // kg, lumped RNA at the top node
  double water_density = 1025.0;         // kg/m^3

  double embedded_length() const;
  double total_length() const;
  void validate() const;
};

struct FoundationModel {
  double lateral_stiffness_per_length = 0.0;  // N/m per m, p-y springs
  double base_axial_stiffness = 0.0;          // N/m, q-z spring
  void validate() const;
};

struct ModelOptions {
  double added_mass_coefficient = 1.0;
  bool rotary_inertia = true;
  double shear_scale = 1.0;  // multiplies kappa*G; large values recover Euler-Bernoulli
  double target_element_length = 2.0;  // m, above-ground elements
  bool clamp_base = false;             // eliminate base-node DOFs (validation configs only)
};

struct TurbineModel {
  TurbineGeometry geometry;
  FoundationModel foundation;
  ModelOptions options;
};

// Annular section properties evaluated at the element midpoint.
struct Section {
  double outer_diameter = 0.0;  // m
  double wall_thickness = 0.0;  // m
  double area = 0.0;            // m^2
  double second_moment = 0.0;   // m^4
};

struct Element {
  int node_a = 0;
  int node_b = 0;
  double x_start = 0.0;  // m along the axis, measured from the pile base
  double length = 0.0;
  Section section;
  Material material;
  Environment environment = Environment::Air;
};

// Planar mesh, 3 DOF per node: axial u, lateral w, rotation theta.
struct Mesh {
  std::vector<double> node_x;
  std::vector<Element> elements;
  double embedded_length = 0.0;

  int n_nodes() const { return static_cast<int>(node_x.size()); }
  int n_dofs() const { return 3 * n_nodes(); }
};

struct ModalResult {
  std::vector<double> frequencies_hz;   // ascending
  Eigen::MatrixXd mode_shapes;          // mass-normalized, one column per mode
  std::vector<ModeKind> classification;
};

// Cowper's shear coefficient for a hollow circular section,
// kappa = 6(1+nu)(1+m^2)^2 / ((7+6nu)(1+m^2)^2 + (20+12nu)m^2),
// with m the inner/outer radius ratio.
double shear_coefficient(double outer_diameter, double wall_thickness, double poisson_ratio);

double added_mass_per_length(const Section& section, Environment environment,
                             double water_density, double added_mass_coefficient);

Mesh build_mesh(const TurbineGeometry& geometry, double target_element_length);

struct ElementMatrices {
  Eigen::Matrix<double, 6, 6> stiffness;
  Eigen::Matrix<double, 6, 6> mass;
};

// Timoshenko element with consistent mass. DOF order (u1, w1, th1, u2, w2, th2).
ElementMatrices timoshenko_element_matrices(const Element& element, double water_density,
                                            const ModelOptions& options);

// k_s * integral of N_w^T N_w over [cover_start, cover_end] (element-local
// coordinates), using the element's shear-flexible lateral shape functions.
Eigen::Matrix<double, 6, 6> distributed_spring_matrix(double k_s, const Element& element,
                                                      double cover_start, double cover_end,
                                                      double shear_scale = 1.0);

struct AssembledSystem {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
};

AssembledSystem assemble(const TurbineModel& model, const Mesh& mesh, double k_s,
                         double scour_depth);
AssembledSystem assemble(const TurbineModel& model, double k_s, double scour_depth);

ModalResult solve_modes(const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass,
                        int n_modes);

double first_bending_frequency(const TurbineModel& model, const Mesh& mesh, double k_s,
                               double scour_depth);
double first_bending_frequency(const TurbineModel& model, double k_s, double scour_depth);

}  // namespace windmon::fem
