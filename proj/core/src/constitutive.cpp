#include "ddporo/constitutive.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddporo {

BiotConstants compute_biot(double K, double K_s, double K_f, double phi_f, double rho_s,
                           double rho_f, const Eigen::VectorXd &g) {
  if (!(K_s > 0.0) || !(K_f > 0.0))
    throw std::invalid_argument("compute_biot: K_s and K_f must be positive");
  if (phi_f < 0.0 || phi_f > 1.0)
    throw std::invalid_argument("compute_biot: porosity outside [0, 1]");

  BiotConstants b;
  b.B = std::isinf(K_s) ? 1.0 : 1.0 - K / K_s;
  const double t_grain = std::isinf(K_s) ? 0.0 : (b.B - phi_f) / K_s;
  const double t_fluid = std::isinf(K_f) ? 0.0 : phi_f / K_f;
  b.inv_M = t_grain + t_fluid;
  if (b.inv_M < 0.0) throw std::invalid_argument("compute_biot: negative storage 1/M");
  b.gamma = ((1.0 - phi_f) * rho_s + phi_f * rho_f) * g;
  b.gamma_f = rho_f * g;
  b.K = K;
  b.K_s = K_s;
  b.K_f = K_f;
  b.phi_f = phi_f;
  b.rho_s = rho_s;
  b.rho_f = rho_f;
  return b;
}

StressResult hooke_stress(const SymTensor2 &eps, const HookeParams &p) {
  const double lambda = p.E * p.nu / ((1.0 + p.nu) * (1.0 - 2.0 * p.nu));
  const double mu = p.E / (2.0 * (1.0 + p.nu));
  StressResult r;
  r.tangent = lambda * SymTensor4::identity_dyad(eps.dim) + 2.0 * mu * SymTensor4::identity(eps.dim);
  r.stress = r.tangent.apply(eps);
  return r;
}

Eigen::VectorXd darcy_flux(const Eigen::VectorXd &grad_p, const Eigen::MatrixXd &k_tensor,
                           double mu_f, const Eigen::VectorXd &gamma_f) {
  if (!(mu_f > 0.0)) throw std::invalid_argument("darcy_flux: viscosity must be positive");
  return -(k_tensor * (grad_p + gamma_f)) / mu_f;
}

namespace {

// Coefficient of I in the blend stress and its theta-derivative.
double blend_pressure(double theta, const BlendParams &p) {
  const double a = 1.0 + theta;
  return p.G * (1.0 - 1.0 / a) + p.lambda() * std::log(a) / a;
}

double blend_pressure_deriv(double theta, const BlendParams &p) {
  const double a = 1.0 + theta;
  return p.G / (a * a) + p.lambda() * (1.0 - std::log(a)) / (a * a);
}

double blend_pressure_deriv2(double theta, const BlendParams &p) {
  const double a = 1.0 + theta;
  return -2.0 * p.G / (a * a * a) + p.lambda() * (2.0 * std::log(a) - 3.0) / (a * a * a);
}

}  // namespace

StressResult blend_stress(const SymTensor2 &eps, const BlendParams &p) {
  const double theta = eps.trace();
  if (!(1.0 + theta > 0.0)) throw std::domain_error("blend_stress: 1 + tr(eps) <= 0");
  StressResult r;
  r.stress = blend_pressure(theta, p) * SymTensor2::identity(eps.dim) + 2.0 * p.G * eps;
  r.tangent = blend_pressure_deriv(theta, p) * SymTensor4::identity_dyad(eps.dim) +
              2.0 * p.G * SymTensor4::identity(eps.dim);
  return r;
}

double blend_energy(const SymTensor2 &eps, const BlendParams &p) {
  const double theta = eps.trace();
  if (!(1.0 + theta > 0.0)) throw std::domain_error("blend_energy: 1 + tr(eps) <= 0");
  const double lna = std::log(1.0 + theta);
  return p.G * (theta - lna) + 0.5 * p.lambda() * lna * lna + p.G * double_contract(eps, eps);
}

SymTensor4 BlendModel::tangent_derivative(const SymTensor2 &eps, const SymTensor2 &w) const {
  // C(eps):w = g(theta) tr(w) I + 2G w, so the derivative along d_eps is
  // g'(theta) tr(w) tr(d_eps) I.
  const double theta = eps.trace();
  if (!(1.0 + theta > 0.0)) throw std::domain_error("blend tangent: 1 + tr(eps) <= 0");
  return (blend_pressure_deriv2(theta, p_) * w.trace()) * SymTensor4::identity_dyad(2);
}

namespace {

StressResult borja_stress_3d(const SymTensor2 &eps, const BorjaParams &p) {
  const double eps_v = eps.trace();
  const SymTensor2 dev = eps.deviator();
  const double X = std::exp((p.eps_v0 - eps_v) / p.c_r);
  const double c = 3.0 * p.c_mu / (2.0 * p.c_r);
  const double eps_s_sq = (2.0 / 3.0) * double_contract(dev, dev);

  const double pbar = p.p0 * X * (1.0 + c * eps_s_sq);
  const double two_mu = -2.0 * p.c_mu * p.p0 * X;

  StressResult r;
  r.stress = pbar * SymTensor2::identity(3) + two_mu * dev;

  const double kappa = -(p.p0 / p.c_r) * X * (1.0 + c * eps_s_sq);
  const double a2 = 2.0 * p.c_mu * p.p0 * X / p.c_r;
  const SymTensor2 id = SymTensor2::identity(3);
  r.tangent = kappa * SymTensor4::identity_dyad(3) + two_mu * SymTensor4::deviatoric_projector(3) +
              a2 * (SymTensor4::dyad(id, dev) + SymTensor4::dyad(dev, id));
  return r;
}

SymTensor2 promote_plane_strain(const SymTensor2 &eps2) {
  SymTensor2 e(3);
  e.set(0, 0, eps2(0, 0));
  e.set(1, 1, eps2(1, 1));
  e.set(0, 1, eps2(0, 1));
  return e;
}

}  // namespace

double borja_energy(const SymTensor2 &eps, const BorjaParams &p) {
  const SymTensor2 e = eps.dim == 2 ? promote_plane_strain(eps) : eps;
  const double eps_v = e.trace();
  const SymTensor2 dev = e.deviator();
  const double X = std::exp((p.eps_v0 - eps_v) / p.c_r);
  const double c = 3.0 * p.c_mu / (2.0 * p.c_r);
  const double eps_s_sq = (2.0 / 3.0) * double_contract(dev, dev);
  return p.psi0 - p.p0 * p.c_r * X * (1.0 + c * eps_s_sq);
}

StressResult borja_stress(const SymTensor2 &eps, const BorjaParams &p) {
  if (eps.dim == 3) return borja_stress_3d(eps, p);

  // Plane strain: evaluate in 3D with eps_zz = 0 and restrict stress and
  // tangent to the in-plane components (3D Kelvin slots 0, 1, 3).
  const StressResult full = borja_stress_3d(promote_plane_strain(eps), p);
  StressResult r;
  r.stress = SymTensor2(2);
  r.stress.set(0, 0, full.stress(0, 0));
  r.stress.set(1, 1, full.stress(1, 1));
  r.stress.set(0, 1, full.stress(0, 1));
  r.tangent = SymTensor4(2);
  const int slots[3] = {0, 1, 3};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.tangent.k(i, j) = full.tangent.k(slots[i], slots[j]);
  return r;
}

void borja_moduli(double eps_v, double eps_s, const BorjaParams &p, double &kappa_out,
                  double &mu_out) {
  const double X = std::exp((p.eps_v0 - eps_v) / p.c_r);
  const double c = 3.0 * p.c_mu / (2.0 * p.c_r);
  kappa_out = -(p.p0 / p.c_r) * X * (1.0 + c * eps_s * eps_s);
  mu_out = -p.c_mu * p.p0 * X;
}

StressResult BorjaModel::evaluate(const SymTensor2 &eps) const { return borja_stress(eps, p_); }

SymTensor4 SolidModel::tangent_derivative(const SymTensor2 &eps, const SymTensor2 &w) const {
  // Central finite difference of eps -> C(eps) : w, column by column in
  // Kelvin coordinates.
  const int n = kelvin_size(dim());
  const double h = 1e-7;
  SymTensor4 m(dim());
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd ek = kelvin_vector(eps);
    ek[j] += h;
    const SymTensor2 ep = kelvin_inverse(dim(), ek);
    ek[j] -= 2.0 * h;
    const SymTensor2 em = kelvin_inverse(dim(), ek);
    const Eigen::VectorXd fp = kelvin_vector(evaluate(ep).tangent.apply(w));
    const Eigen::VectorXd fm = kelvin_vector(evaluate(em).tangent.apply(w));
    m.k.col(j) = (fp - fm) / (2.0 * h);
  }
  return m;
}

BorjaParams calibrate_borja(double phi0, const std::vector<ModuliRow> &table) {
  if (!(phi0 > 0.0)) throw std::invalid_argument("calibrate_borja: phi0 must be positive");

  // ln(kappa) and ln(mu) are both affine in eps_v with a shared slope
  // s = -1/c_r; fit (A_kappa, A_mu, s) by linear least squares.
  std::vector<double> ev, lnk, lnm;
  for (const auto &row : table) {
    if (!(row.phi > 0.0) || !(row.kappa > 0.0) || !(row.mu > 0.0)) continue;
    ev.push_back(row.phi / phi0 - 1.0);
    lnk.push_back(std::log(row.kappa));
    lnm.push_back(std::log(row.mu));
  }
  const int m = static_cast<int>(ev.size());
  if (m < 4) throw std::invalid_argument("calibrate_borja: fewer than 4 usable table rows");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * m, 3);
  Eigen::VectorXd rhs(2 * m);
  for (int i = 0; i < m; ++i) {
    A(i, 0) = 1.0;
    A(i, 2) = ev[static_cast<std::size_t>(i)];
    rhs[i] = lnk[static_cast<std::size_t>(i)];
    A(m + i, 1) = 1.0;
    A(m + i, 2) = ev[static_cast<std::size_t>(i)];
    rhs[m + i] = lnm[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
  const double A_kappa = sol[0];
  const double A_mu = sol[1];
  const double slope = sol[2];

  double ev_span = 0.0;
  for (int i = 0; i < m; ++i)
    ev_span = std::max(ev_span, std::abs(ev[static_cast<std::size_t>(i)] - ev[0]));
  if (std::abs(slope) * std::max(ev_span, 1.0) < 1e-6)
    throw std::invalid_argument("calibrate_borja: moduli do not vary with porosity (degenerate fit)");
  if (slope > 0.0)
    throw std::invalid_argument("calibrate_borja: moduli grow with volumetric strain (c_r < 0)");

  BorjaParams p;
  p.eps_v0 = 0.0;  // gauge: only eps_v0/c_r + ln(-p0/c_r) is identifiable
  p.c_r = -1.0 / slope;
  p.p0 = -p.c_r * std::exp(A_kappa);
  p.c_mu = std::exp(A_mu) / (p.c_r * std::exp(A_kappa));
  p.psi0 = 0.0;
  return p;
}

std::vector<ModuliRow> load_moduli_table(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_moduli_table: cannot open " + path);
  std::vector<ModuliRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) continue;  // header
    std::istringstream is(line);
    ModuliRow r;
    char c1 = 0, c2 = 0;
    if (!(is >> r.phi >> c1 >> r.kappa >> c2 >> r.mu) || c1 != ',' || c2 != ',') {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected 'phi,kappa,mu'";
      throw std::runtime_error(os.str());
    }
    rows.push_back(r);
  }
  return rows;
}

void save_moduli_table(const std::vector<ModuliRow> &table, const std::string &path) {
  std::FILE *f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_moduli_table: cannot open " + path);
  std::fprintf(f, "phi,kappa,mu\n");
  for (const auto &r : table) std::fprintf(f, "%.17g,%.17g,%.17g\n", r.phi, r.kappa, r.mu);
  std::fclose(f);
}

}  // namespace ddporo
