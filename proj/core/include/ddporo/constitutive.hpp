// Model-based constitutive laws: linear elasticity, Darcy flow, a
// Saint-Venant/Neo-Hookean volumetric blend, and a pressure-dependent
// hyperelastic law with porosity calibration. Also the Biot coupling
// constants shared by all formulations.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "ddporo/kelvin.hpp"

namespace ddporo {

// Coupling constants of the two-phase balance equations. The storage
// modulus is kept as its inverse so an incompressible mixture is the
// regular value inv_M = 0.
struct BiotConstants {
  double B = 1.0;        // effective stress coefficient
  double inv_M = 0.0;    // 1/M, storage modulus inverse (1/Pa)
  Eigen::VectorXd gamma;    // mixture body force (N/m^3)
  Eigen::VectorXd gamma_f;  // fluid weight rho_f * g (N/m^3), enters Darcy flow
  double source = 0.0;   // distributed fluid source (1/s)

  // Inputs recorded when the constants were derived rather than given.
  double K = 0.0, K_s = 0.0, K_f = 0.0;
  double phi_f = 0.0, rho_s = 0.0, rho_f = 0.0;

  static BiotConstants simple(int dim, double B_, double inv_M_) {
    BiotConstants b;
    b.B = B_;
    b.inv_M = inv_M_;
    b.gamma = Eigen::VectorXd::Zero(dim);
    b.gamma_f = Eigen::VectorXd::Zero(dim);
    return b;
  }
};

// B = 1 - K/K_s, 1/M = (B - phi_f)/K_s + phi_f/K_f, and the mixture body
// force (1 - phi_f) rho_s g + phi_f rho_f g. Infinite grain or fluid
// stiffness may be passed as +inf. Throws if the resulting 1/M is negative.
BiotConstants compute_biot(double K, double K_s, double K_f, double phi_f, double rho_s,
                           double rho_f, const Eigen::VectorXd &g);

enum class PlaneCondition { PlaneStrain, ThreeD };

struct HookeParams {
  double E = 1.0;
  double nu = 0.0;
  PlaneCondition condition = PlaneCondition::PlaneStrain;
};

struct BlendParams {
  double kappa = 1.0;  // bulk modulus (Pa)
  double G = 1.0;      // shear modulus (Pa)

  double lambda() const { return kappa - 2.0 * G / 3.0; }
};

struct BorjaParams {
  double p0 = -1.0;    // reference pressure (Pa, negative in compression)
  double c_r = 0.01;   // volumetric compliance
  double c_mu = 1.0;   // shear-to-bulk coupling
  double eps_v0 = 0.0; // volumetric strain at the reference pressure
  double psi0 = 0.0;   // reference energy offset (Pa)
};

struct StressResult {
  SymTensor2 stress;   // effective stress
  SymTensor4 tangent;  // d(stress)/d(strain) in Kelvin form
};

// sigma' = lambda tr(eps) I + 2 mu eps, with the 2D form meaning plane
// strain. The tangent is constant.
StressResult hooke_stress(const SymTensor2 &eps, const HookeParams &p);

// q = -(1/mu_f) k (grad_p + gamma_f).
Eigen::VectorXd darcy_flux(const Eigen::VectorXd &grad_p, const Eigen::MatrixXd &k_tensor,
                           double mu_f, const Eigen::VectorXd &gamma_f);

// Volumetric Saint-Venant/Neo-Hookean blend (2D plane strain):
// sigma' = G [1 - 1/(1+tr eps)] I + lambda ln(1+tr eps)/(1+tr eps) I + 2 G eps.
// Throws std::domain_error when 1 + tr(eps) <= 0.
StressResult blend_stress(const SymTensor2 &eps, const BlendParams &p);

// Stored energy of the blend law (with psi(0) = 0), for work-consistency
// checks.
double blend_energy(const SymTensor2 &eps, const BlendParams &p);

// Pressure-dependent hyperelastic law in exponential form. The deviatoric
// direction enters through a product that vanishes smoothly at eps_s = 0.
StressResult borja_stress(const SymTensor2 &eps, const BorjaParams &p);

// Energy psi(eps_v, eps_s) of the same law (psi0 offset included).
double borja_energy(const SymTensor2 &eps, const BorjaParams &p);

// Tangent bulk and shear moduli as functions of the strain invariants.
void borja_moduli(double eps_v, double eps_s, const BorjaParams &p, double &kappa_out,
                  double &mu_out);

struct ModuliRow {
  double phi = 0.0;    // porosity
  double kappa = 0.0;  // bulk modulus (Pa)
  double mu = 0.0;     // shear modulus (Pa)
};

// Fits the exponential moduli law to a porosity-moduli table mapped through
// eps_v = phi/phi0 - 1, at eps_s = 0. ln(kappa) and ln(mu) are linear in
// eps_v with a shared slope, so the fit is a three-parameter linear least
// squares followed by parameter recovery (eps_v0 fixed to 0 as gauge).
// Throws when fewer than 4 usable rows exist or the fitted slope is
// degenerate (constant-moduli table).
BorjaParams calibrate_borja(double phi0, const std::vector<ModuliRow> &table);

// Reads a (phi, kappa, mu) CSV table with a header row.
std::vector<ModuliRow> load_moduli_table(const std::string &path);
void save_moduli_table(const std::vector<ModuliRow> &table, const std::string &path);

// Runtime-polymorphic solid law used by the hybrid formulations.
class SolidModel {
 public:
  virtual ~SolidModel() = default;
  virtual int dim() const = 0;
  virtual StressResult evaluate(const SymTensor2 &eps) const = 0;
  // True when the tangent is strain-independent (one Newton step suffices).
  virtual bool linear() const { return false; }
  // M(eps, w) with M : d_eps = (d C(eps)/d_eps [d_eps]) : w, the curvature
  // term needed for exact Newton linearization of C(eps) : w products.
  // Default implementation is a central finite difference on C(eps) : w.
  virtual SymTensor4 tangent_derivative(const SymTensor2 &eps, const SymTensor2 &w) const;
};

class HookeModel final : public SolidModel {
 public:
  HookeModel(int dim, HookeParams p) : dim_(dim), p_(p) {}
  int dim() const override { return dim_; }
  StressResult evaluate(const SymTensor2 &eps) const override { return hooke_stress(eps, p_); }
  bool linear() const override { return true; }
  SymTensor4 tangent_derivative(const SymTensor2 &, const SymTensor2 &) const override {
    return SymTensor4(dim_);
  }
  const HookeParams &params() const { return p_; }

 private:
  int dim_;
  HookeParams p_;
};

class BlendModel final : public SolidModel {
 public:
  explicit BlendModel(BlendParams p) : p_(p) {}
  int dim() const override { return 2; }
  StressResult evaluate(const SymTensor2 &eps) const override { return blend_stress(eps, p_); }
  SymTensor4 tangent_derivative(const SymTensor2 &eps, const SymTensor2 &w) const override;
  const BlendParams &params() const { return p_; }

 private:
  BlendParams p_;
};

// 2D evaluation is the plane-strain reduction of the 3D law.
class BorjaModel final : public SolidModel {
 public:
  BorjaModel(int dim, BorjaParams p) : dim_(dim), p_(p) {}
  int dim() const override { return dim_; }
  StressResult evaluate(const SymTensor2 &eps) const override;
  const BorjaParams &params() const { return p_; }

 private:
  int dim_;
  BorjaParams p_;
};

// Linear Darcy law with constant permeability, used by the hybrid-solid and
// model-based formulations and for data generation.
struct DarcyModel {
  Eigen::MatrixXd k;       // intrinsic permeability (m^2)
  double mu_f = 1.0;       // dynamic viscosity (Pa s)
  Eigen::VectorXd gamma_f; // fluid weight (N/m^3)

  Eigen::VectorXd flux(const Eigen::VectorXd &grad_p) const {
    return darcy_flux(grad_p, k, mu_f, gamma_f);
  }
  // d(flux)/d(grad_p) = -k/mu_f.
  Eigen::MatrixXd tangent() const { return -k / mu_f; }
};

}  // namespace ddporo
