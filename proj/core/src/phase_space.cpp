#include "ddporo/phase_space.hpp"

#include <stdexcept>

namespace ddporo {

MetricSpec make_metric(const SymTensor4 &C_s, const SymTensor4 &S_s, const Eigen::MatrixXd &C_f,
                       const Eigen::MatrixXd &S_f, double dt_scale, FactorKind kind) {
  MetricSpec m;
  m.dim = C_s.dim;
  if (C_f.rows() != m.dim || S_s.dim != m.dim || S_f.rows() != m.dim)
    throw std::invalid_argument("make_metric: weight dimensions disagree");
  m.C_s = C_s;
  m.S_s = S_s;
  m.C_f = C_f;
  m.S_f = S_f;
  m.dt_scale = dt_scale;
  m.factor_Cs = spd_factorize(m.C_s, kind);
  m.factor_Ss = spd_factorize(m.S_s, kind);
  m.factor_Cf = spd_factorize_matrix(m.dim, m.C_f, kind);
  m.factor_Sf = spd_factorize_matrix(m.dim, m.S_f, kind);
  return m;
}

MetricSpec make_metric(const SymTensor4 &C_s, const Eigen::MatrixXd &C_f, double dt_scale,
                       FactorKind kind) {
  SymTensor4 S_s(C_s.dim, C_s.k.inverse());
  return make_metric(C_s, S_s, C_f, C_f.inverse(), dt_scale, kind);
}

double solid_distance_sq(const MetricSpec &m, const SolidPoint &a, const SolidPoint &b) {
  const SymTensor2 de = a.strain - b.strain;
  const SymTensor2 ds = a.stress - b.stress;
  return 0.5 * quadratic_form(m.C_s, de) + 0.5 * quadratic_form(m.S_s, ds);
}

double fluid_distance_sq(const MetricSpec &m, const FluidPoint &a, const FluidPoint &b) {
  const Eigen::VectorXd dr = a.grad_p - b.grad_p;
  const Eigen::VectorXd dq = a.flux - b.flux;
  return 0.5 * dr.dot(m.C_f * dr) + 0.5 * dq.dot(m.S_f * dq);
}

double coupled_distance_sq(const MetricSpec &m, const SolidPoint &sa, const FluidPoint &fa,
                           const SolidPoint &sb, const FluidPoint &fb) {
  return solid_distance_sq(m, sa, sb) + m.dt_scale * fluid_distance_sq(m, fa, fb);
}

EmbeddedPoint embed_solid(const MetricSpec &m, const SolidPoint &p) {
  const int n = kelvin_size(m.dim);
  EmbeddedPoint e(2 * n);
  e.head(n) = m.factor_Cs.forward(kelvin_vector(p.strain));
  e.tail(n) = m.factor_Ss.forward(kelvin_vector(p.stress));
  return e;
}

EmbeddedPoint embed_fluid(const MetricSpec &m, const FluidPoint &p) {
  EmbeddedPoint e(2 * m.dim);
  e.head(m.dim) = m.factor_Cf.forward(p.grad_p);
  e.tail(m.dim) = m.factor_Sf.forward(p.flux);
  return e;
}

SolidPoint unembed_solid(const MetricSpec &m, const EmbeddedPoint &e) {
  const int n = kelvin_size(m.dim);
  if (e.size() != 2 * n) throw std::invalid_argument("unembed_solid: wrong embedded size");
  SolidPoint p;
  p.strain = kelvin_inverse(m.dim, m.factor_Cs.backward(e.head(n)));
  p.stress = kelvin_inverse(m.dim, m.factor_Ss.backward(e.tail(n)));
  return p;
}

FluidPoint unembed_fluid(const MetricSpec &m, const EmbeddedPoint &e) {
  if (e.size() != 2 * m.dim) throw std::invalid_argument("unembed_fluid: wrong embedded size");
  FluidPoint p;
  p.grad_p = m.factor_Cf.backward(e.head(m.dim));
  p.flux = m.factor_Sf.backward(e.tail(m.dim));
  return p;
}

}  // namespace ddporo
