#include "ddporo/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace ddporo {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxTerms = 1 << 20;

// Sums term(i) for i = 0, 1, ... with at least n_terms terms, doubling the
// count until the last term is below 1e-12 of the running sum.
template <class Term>
double summed(int n_terms, Term term) {
  if (n_terms < 1) throw std::invalid_argument("series: n_terms must be >= 1");
  double sum = 0.0;
  double last = 0.0;
  int n = n_terms;
  int i = 0;
  while (true) {
    for (; i < n; ++i) {
      last = term(i);
      sum += last;
    }
    if (std::abs(last) < 1e-12 * std::abs(sum) || n >= kMaxTerms) return sum;
    n *= 2;
  }
}

}  // namespace

double terzaghi_pressure(double y, double t, const TerzaghiParams &p, int n_terms) {
  const double denom = p.E + p.b * p.b * p.M;
  const double amp = 4.0 * p.b * p.M * p.t_bar_y / (kPi * denom);
  const double lam = kPi * kPi * p.c_f() / (4.0 * p.H * p.H);
  return amp * summed(n_terms, [&](int i) {
           const double m = 2.0 * i + 1.0;
           const double sign = (i % 2 == 0) ? -1.0 : 1.0;  // (-1)^(i+1)
           return sign / m * std::exp(-m * m * lam * t) * std::cos(m * kPi * y / (2.0 * p.H));
         });
}

double terzaghi_pressure_grad(double y, double t, const TerzaghiParams &p, int n_terms) {
  const double denom = p.E + p.b * p.b * p.M;
  const double amp = 4.0 * p.b * p.M * p.t_bar_y / (kPi * denom);
  const double lam = kPi * kPi * p.c_f() / (4.0 * p.H * p.H);
  return amp * summed(n_terms, [&](int i) {
           const double m = 2.0 * i + 1.0;
           const double sign = (i % 2 == 0) ? -1.0 : 1.0;
           return -sign * (kPi / (2.0 * p.H)) * std::exp(-m * m * lam * t) *
                  std::sin(m * kPi * y / (2.0 * p.H));
         });
}

double terzaghi_flux(double y, double t, const TerzaghiParams &p, int n_terms) {
  return -p.k * terzaghi_pressure_grad(y, t, p, n_terms);
}

double terzaghi_displacement(double y, double t, const TerzaghiParams &p, int n_terms) {
  const double denom = p.E + p.b * p.b * p.M;
  const double lam = kPi * kPi * p.c_f() / (4.0 * p.H * p.H);
  const double series = summed(n_terms, [&](int i) {
    const double m = 2.0 * i + 1.0;
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;  // (-1)^i
    return sign / (m * m) * std::exp(-m * m * lam * t) * std::sin(m * kPi * y / (2.0 * p.H));
  });
  // The series sign is chosen so the bracket vanishes at t = 0, matching the
  // instantaneous (undrained) response y t / (E + b^2 M).
  const double bracket = y - (8.0 * p.H / (kPi * kPi)) * series;
  return y * p.t_bar_y / denom + (p.b * p.b * p.M * p.t_bar_y / (p.E * denom)) * bracket;
}

double terzaghi_strain(double y, double t, const TerzaghiParams &p, int n_terms) {
  const double denom = p.E + p.b * p.b * p.M;
  const double lam = kPi * kPi * p.c_f() / (4.0 * p.H * p.H);
  const double series = summed(n_terms, [&](int i) {
    const double m = 2.0 * i + 1.0;
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    return sign / m * std::exp(-m * m * lam * t) * std::cos(m * kPi * y / (2.0 * p.H));
  });
  return p.t_bar_y / denom +
         (p.b * p.b * p.M * p.t_bar_y / (p.E * denom)) * (1.0 - (4.0 / kPi) * series);
}

double terzaghi_total_stress(double, double, const TerzaghiParams &p) { return p.t_bar_y; }

namespace {

// S(tau) = sum_{i>=1} exp(-a_i tau) / (i^2 pi^2). The tau = 0 value is the
// exact zeta(2) limit 1/6; for tau > 0 the series converges exponentially.
double relaxation_decay_sum(double tau, const RelaxationParams &p, int n_terms) {
  if (tau <= 0.0) return 1.0 / 6.0;
  double sum = 0.0;
  double last = 0.0;
  int n = n_terms;
  int i = 1;
  while (true) {
    for (; i <= n; ++i) {
      last = std::exp(-p.a(i) * tau) / (static_cast<double>(i) * i * kPi * kPi);
      sum += last;
    }
    if (last < 1e-12 * sum + 1e-300 || n >= kMaxTerms) return sum;
    n *= 2;
  }
}

}  // namespace

double relaxation_traction(double t, const RelaxationParams &p, int n_terms) {
  if (t < 0.0) throw std::invalid_argument("relaxation_traction: t must be >= 0");
  const double stiff = 2.0 * p.G + p.lambda;
  const double coef = 2.0 * p.u_dot * p.H / p.k;
  if (t <= p.t_ramp) {
    // Ramp phase: sum (1 - exp(-a_i t)) / (i^2 pi^2) = 1/6 - S(t).
    return p.u_dot * stiff / p.H * t + coef * (1.0 / 6.0 - relaxation_decay_sum(t, p, n_terms));
  }
  return p.u_dot * stiff / p.H * p.t_ramp +
         coef * (relaxation_decay_sum(t - p.t_ramp, p, n_terms) -
                 relaxation_decay_sum(t, p, n_terms));
}

PoissonManufactured poisson_manufactured(double x, double y, double z, double k) {
  PoissonManufactured m;
  m.p = x * x + y * y + z * z;
  m.grad_p = 2.0 * Eigen::Vector3d(x, y, z);
  m.source = 6.0 * k;
  return m;
}

ErrValue err_space(const std::vector<double> &dd, const std::vector<double> &ref,
                   const Mesh &mesh, const QuadRule &quad) {
  const std::size_t expected =
      static_cast<std::size_t>(mesh.n_elems()) * static_cast<std::size_t>(quad.size());
  if (dd.size() != expected || ref.size() != expected)
    throw std::invalid_argument("err_space: sample count does not match mesh and rule");

  double num = 0.0, den = 0.0;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int q = 0; q < quad.size(); ++q) {
      const ShapeEval s = shape_eval(mesh, e, quad.points[static_cast<std::size_t>(q)]);
      const double w = quad.weights[static_cast<std::size_t>(q)] * s.detJ;
      const std::size_t idx =
          static_cast<std::size_t>(e) * static_cast<std::size_t>(quad.size()) +
          static_cast<std::size_t>(q);
      num += w * std::abs(dd[idx] - ref[idx]);
      den += w * std::abs(ref[idx]);
    }
  }
  ErrValue r;
  if (den <= 1e-300) {
    r.value = num;
    r.absolute = true;
  } else {
    r.value = num / den;
  }
  return r;
}

ErrValue err_space_time(const std::vector<ErrValue> &per_step, double dt, double t_end) {
  ErrValue r;
  for (const auto &e : per_step) {
    r.value += e.value;
    r.absolute = r.absolute || e.absolute;
  }
  r.value *= dt / t_end;
  return r;
}

}  // namespace ddporo
