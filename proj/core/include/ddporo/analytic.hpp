// Closed-form reference solutions and error functionals: one-dimensional
// consolidation of a loaded column, stress relaxation of a confined
// cylinder under a displacement ramp, a manufactured Poisson solution, and
// relative L1 error metrics in space and space-time.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ddporo/mesh.hpp"

namespace ddporo {

// Column consolidation constants (uniaxial, zero Poisson's ratio). k is the
// hydraulic conductivity, i.e. intrinsic permeability over viscosity.
struct TerzaghiParams {
  double E = 70e9;       // Young's modulus (Pa)
  double b = 1.0;        // effective stress coefficient
  double M = 266.667e9;  // storage modulus (Pa)
  double k = 6.1224e-13; // conductivity (m^2 / (Pa s))
  double H = 1.0;        // column height (m)
  double t_bar_y = -0.9e9;  // applied top traction (Pa, signed)

  // Consolidation diffusivity of the coupled column equation,
  // k M E / (b^2 M + E).
  double c_f() const { return k * M * E / (b * b * M + E); }
};

// Pore pressure p(y, t); y = 0 is the clamped impermeable bottom, y = H the
// drained loaded top. The series starts at n_terms and doubles until the
// last term falls below 1e-12 of the running sum.
double terzaghi_pressure(double y, double t, const TerzaghiParams &p, int n_terms = 500);

// Vertical displacement u_y(y, t).
double terzaghi_displacement(double y, double t, const TerzaghiParams &p, int n_terms = 500);

// dp/dy, vertical Darcy flux -k dp/dy, vertical strain, and the (constant)
// total vertical stress; the monitored fields of the convergence studies.
double terzaghi_pressure_grad(double y, double t, const TerzaghiParams &p, int n_terms = 500);
double terzaghi_flux(double y, double t, const TerzaghiParams &p, int n_terms = 500);
double terzaghi_strain(double y, double t, const TerzaghiParams &p, int n_terms = 500);
double terzaghi_total_stress(double y, double t, const TerzaghiParams &p);

// Confined-column relaxation constants. k is again conductivity;
// the decay rates are a_i = i^2 pi^2 k (2G + lambda) / H^2.
struct RelaxationParams {
  double G = 40e9;       // shear modulus (Pa)
  double lambda = 40e9;  // first Lame parameter (Pa)
  double H = 10.0;       // column height (m)
  double k = 8.33e-10;   // conductivity (m^2 / (Pa s))
  double u_dot = -0.005; // platen velocity during the ramp (m/s)
  double t_ramp = 2.0;   // ramp duration (s)

  double a(int i) const {
    const double pi = 3.14159265358979323846;
    return static_cast<double>(i) * static_cast<double>(i) * pi * pi * k *
           (2.0 * G + lambda) / (H * H);
  }
};

// Normal traction at the driven top surface. The boundary instant
// t = t_ramp belongs to the ramp phase; both phase expressions agree there.
double relaxation_traction(double t, const RelaxationParams &p, int n_terms = 1000);

struct PoissonManufactured {
  double p = 0.0;
  Eigen::Vector3d grad_p = Eigen::Vector3d::Zero();
  double source = 0.0;
};

// p = x^2 + y^2 + z^2 with isotropic conductivity k: grad = 2(x, y, z) and
// the source 6k balances div(-k grad p).
PoissonManufactured poisson_manufactured(double x, double y, double z, double k);

// Relative L1-in-space error. Inputs are quadrature-point samples in
// element-major order (element e, point q at index e * quad.size() + q).
// A zero reference norm switches to the absolute integral and sets
// `absolute`.
struct ErrValue {
  double value = 0.0;
  bool absolute = false;
};

ErrValue err_space(const std::vector<double> &dd, const std::vector<double> &ref,
                   const Mesh &mesh, const QuadRule &quad);

// Time average (dt / t_end) * sum of per-step spatial errors.
ErrValue err_space_time(const std::vector<ErrValue> &per_step, double dt, double t_end);

}  // namespace ddporo
