// Material phase space for the data-driven solver: solid states are
// (strain, effective stress) pairs, fluid states are (pressure gradient,
// flux) pairs. A metric built from SPD weighting tensors defines distances
// between states and an isometric embedding into Euclidean coordinates so
// nearest-neighbor structures can work on plain vectors.

#pragma once

#include <Eigen/Dense>

#include "ddporo/kelvin.hpp"

namespace ddporo {

struct SolidPoint {
  SymTensor2 strain;
  SymTensor2 stress;  // effective stress

  SolidPoint() = default;
  SolidPoint(SymTensor2 e, SymTensor2 s) : strain(std::move(e)), stress(std::move(s)) {}
  static SolidPoint zero(int dim) { return {SymTensor2(dim), SymTensor2(dim)}; }
};

struct FluidPoint {
  Eigen::VectorXd grad_p;
  Eigen::VectorXd flux;

  FluidPoint() = default;
  FluidPoint(Eigen::VectorXd r, Eigen::VectorXd q) : grad_p(std::move(r)), flux(std::move(q)) {}
  static FluidPoint zero(int dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  }
};

// Embedded phase-space coordinates. The embedding satisfies
// |embed(a) - embed(b)|^2 = 2 * distance_sq(a, b).
using EmbeddedPoint = Eigen::VectorXd;

// Weighting tensors of the phase-space metric and their factorizations.
// C_s weighs strain, S_s stress, C_f pressure gradient, S_f flux; dt_scale
// multiplies the fluid part inside the coupled distance.
struct MetricSpec {
  int dim = 2;
  SymTensor4 C_s;
  SymTensor4 S_s;
  Eigen::MatrixXd C_f;
  Eigen::MatrixXd S_f;
  double dt_scale = 1.0;
  SPDFactor factor_Cs;
  SPDFactor factor_Ss;
  SPDFactor factor_Cf;
  SPDFactor factor_Sf;

  int solid_embed_size() const { return 2 * kelvin_size(dim); }
  int fluid_embed_size() const { return 2 * dim; }
};

// Builds a metric from the strain and gradient weights; the stress and flux
// weights default to their inverses (in Kelvin form for the solid part).
MetricSpec make_metric(const SymTensor4 &C_s, const Eigen::MatrixXd &C_f, double dt_scale = 1.0,
                       FactorKind kind = FactorKind::SymmetricSqrt);

// Same, with all four weights given explicitly.
MetricSpec make_metric(const SymTensor4 &C_s, const SymTensor4 &S_s, const Eigen::MatrixXd &C_f,
                       const Eigen::MatrixXd &S_f, double dt_scale = 1.0,
                       FactorKind kind = FactorKind::SymmetricSqrt);

// 1/2 de : C_s : de + 1/2 ds : S_s : ds for the component differences.
double solid_distance_sq(const MetricSpec &m, const SolidPoint &a, const SolidPoint &b);

// 1/2 dr . C_f dr + 1/2 dq . S_f dq for the component differences.
double fluid_distance_sq(const MetricSpec &m, const FluidPoint &a, const FluidPoint &b);

// solid_distance_sq + dt_scale * fluid_distance_sq.
double coupled_distance_sq(const MetricSpec &m, const SolidPoint &sa, const FluidPoint &fa,
                           const SolidPoint &sb, const FluidPoint &fb);

EmbeddedPoint embed_solid(const MetricSpec &m, const SolidPoint &p);
EmbeddedPoint embed_fluid(const MetricSpec &m, const FluidPoint &p);
SolidPoint unembed_solid(const MetricSpec &m, const EmbeddedPoint &e);
FluidPoint unembed_fluid(const MetricSpec &m, const EmbeddedPoint &e);

}  // namespace ddporo
