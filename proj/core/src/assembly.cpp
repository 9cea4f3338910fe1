// Element-loop assemblies of the four formulations, the shape-data cache
// they share, the point-wise closure updates, and the conservation
// re-evaluation used to verify converged steps.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ddporo/solver.hpp"

namespace ddporo {

namespace {

using Triplet = Eigen::Triplet<double>;

// Global DOF ids of one element, grouped by field.
struct ElemDofs {
  std::vector<int> u, p, bm, bM;
};

ElemDofs elem_dofs(const AssemblyContext &ctx, int e) {
  const Mesh &mesh = *ctx.mesh;
  const DofMap &dofs = *ctx.dofs;
  const int n = mesh.nodes_per_elem();
  const int dim = mesh.dim;
  ElemDofs d;
  d.u.resize(static_cast<std::size_t>(n) * dim);
  d.p.resize(n);
  d.bm.resize(static_cast<std::size_t>(n) * dim);
  d.bM.resize(n);
  for (int a = 0; a < n; ++a) {
    const int node = mesh.elements(e, a);
    for (int c = 0; c < dim; ++c) {
      d.u[static_cast<std::size_t>(a) * dim + c] = dofs.dof(node, Field::U, c);
      d.bm[static_cast<std::size_t>(a) * dim + c] = dofs.dof(node, Field::BetaMom, c);
    }
    d.p[a] = dofs.dof(node, Field::P);
    d.bM[a] = dofs.dof(node, Field::BetaMass);
  }
  return d;
}

// Row vector of div(N_a e_c) in the element displacement ordering.
Eigen::RowVectorXd div_row(const Eigen::MatrixXd &dNdx) {
  const int n = static_cast<int>(dNdx.rows());
  const int dim = static_cast<int>(dNdx.cols());
  Eigen::RowVectorXd bd(n * dim);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < dim; ++c) bd[a * dim + c] = dNdx(a, c);
  return bd;
}

void scatter(std::vector<Triplet> &out, const std::vector<int> &rows,
             const std::vector<int> &cols, const Eigen::MatrixXd &block) {
  for (int i = 0; i < block.rows(); ++i)
    for (int j = 0; j < block.cols(); ++j)
      out.emplace_back(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)],
                       block(i, j));
}

void scatter_vec(Eigen::VectorXd &out, const std::vector<int> &rows,
                 const Eigen::VectorXd &f) {
  for (int i = 0; i < f.size(); ++i) out[rows[static_cast<std::size_t>(i)]] += f[i];
}

const std::vector<FaceQpData> &face_cache(const AssemblyContext &ctx,
                                          const std::string &name) {
  const auto it = ctx.face_qp.find(name);
  if (it == ctx.face_qp.end())
    throw std::invalid_argument("boundary condition references unknown face set '" + name +
                                "'");
  return it->second;
}

// sign * integral of N t(t) over the face set, into one vector field.
void add_traction(const AssemblyContext &ctx, const TractionBC &bc, double t, Field field,
                  double sign, Eigen::VectorXd &out) {
  const DofMap &dofs = *ctx.dofs;
  const int dim = ctx.dim();
  const Eigen::VectorXd tv = bc.value(t);
  if (tv.size() != dim) throw std::invalid_argument("traction dimension mismatch");
  for (const FaceQpData &fq : face_cache(ctx, bc.face_set)) {
    for (int a = 0; a < fq.n_nodes; ++a)
      for (int c = 0; c < dim; ++c)
        out[dofs.dof(fq.nodes[static_cast<std::size_t>(a)], field, c)] +=
            sign * fq.w * fq.N[a] * tv[c];
  }
}

// sign * dt * integral of N qbar(t) over the face set, into one scalar field.
void add_flux(const AssemblyContext &ctx, const FluxBC &bc, double t, double dt, Field field,
              double sign, Eigen::VectorXd &out) {
  const DofMap &dofs = *ctx.dofs;
  const double qv = bc.value(t);
  for (const FaceQpData &fq : face_cache(ctx, bc.face_set)) {
    for (int a = 0; a < fq.n_nodes; ++a)
      out[dofs.dof(fq.nodes[static_cast<std::size_t>(a)], field)] +=
          sign * dt * fq.w * fq.N[a] * qv;
  }
}

Eigen::SparseMatrix<double> from_triplets(int n, std::vector<Triplet> &trips) {
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

// Element vectors of the four fields at the current iterate.
struct ElemFields {
  Eigen::MatrixXd u;   // n x dim
  Eigen::VectorXd p;   // n
  Eigen::MatrixXd bm;  // n x dim
  Eigen::VectorXd bM;  // n
};

ElemFields gather_elem(const AssemblyContext &ctx, const Eigen::VectorXd &x, int e) {
  const Mesh &mesh = *ctx.mesh;
  const DofMap &dofs = *ctx.dofs;
  const int dim = mesh.dim;
  ElemFields f;
  f.u = gather_field(mesh, dofs, x, e, Field::U, dim);
  f.p = gather_field(mesh, dofs, x, e, Field::P, 1).col(0);
  f.bm = gather_field(mesh, dofs, x, e, Field::BetaMom, dim);
  f.bM = gather_field(mesh, dofs, x, e, Field::BetaMass, 1).col(0);
  return f;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd &nodal) {
  const int n = static_cast<int>(nodal.rows());
  const int dim = static_cast<int>(nodal.cols());
  Eigen::VectorXd v(n * dim);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < dim; ++c) v[a * dim + c] = nodal(a, c);
  return v;
}

}  // namespace

bool uses_solid_data(FormulationKind kind) {
  return kind == FormulationKind::FullyDD || kind == FormulationKind::HybridSolidDD;
}

bool uses_fluid_data(FormulationKind kind) {
  return kind == FormulationKind::FullyDD || kind == FormulationKind::HybridFluidDD;
}

Eigen::MatrixXd kelvin_strain_matrix(int dim, const Eigen::MatrixXd &dNdx) {
  const int n = static_cast<int>(dNdx.rows());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXd Bk = Eigen::MatrixXd::Zero(kelvin_size(dim), n * dim);
  for (int a = 0; a < n; ++a) {
    for (int c = 0; c < dim; ++c) Bk(c, a * dim + c) = dNdx(a, c);
    if (dim == 2) {
      Bk(2, a * dim + 0) = inv_sqrt2 * dNdx(a, 1);
      Bk(2, a * dim + 1) = inv_sqrt2 * dNdx(a, 0);
    } else {
      Bk(3, a * dim + 0) = inv_sqrt2 * dNdx(a, 1);
      Bk(3, a * dim + 1) = inv_sqrt2 * dNdx(a, 0);
      Bk(4, a * dim + 1) = inv_sqrt2 * dNdx(a, 2);
      Bk(4, a * dim + 2) = inv_sqrt2 * dNdx(a, 1);
      Bk(5, a * dim + 0) = inv_sqrt2 * dNdx(a, 2);
      Bk(5, a * dim + 2) = inv_sqrt2 * dNdx(a, 0);
    }
  }
  return Bk;
}

AssemblyContext make_context(const Mesh &mesh, const DofMap &dofs, const QuadRule &quad) {
  AssemblyContext ctx;
  ctx.mesh = &mesh;
  ctx.dofs = &dofs;
  ctx.quad = quad;
  ctx.qp.reserve(static_cast<std::size_t>(mesh.n_elems()) * quad.size());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int k = 0; k < quad.size(); ++k) {
      const ShapeEval se = shape_eval(mesh, e, quad.points[static_cast<std::size_t>(k)]);
      QpData q;
      q.N = se.N;
      q.dNdx = se.B;
      q.Bk = kelvin_strain_matrix(mesh.dim, se.B);
      q.w = se.detJ * quad.weights[static_cast<std::size_t>(k)];
      q.x = se.x;
      ctx.qp.push_back(std::move(q));
    }
  }
  const QuadRule frule = face_quad_rule(mesh.dim);
  for (const auto &[name, faces] : mesh.face_sets) {
    std::vector<FaceQpData> cache;
    cache.reserve(faces.size() * frule.size());
    for (const Face &face : faces) {
      for (int k = 0; k < frule.size(); ++k) {
        const FaceEval fe =
            face_shape_eval(mesh, face, frule.points[static_cast<std::size_t>(k)]);
        FaceQpData fq;
        fq.N = fe.N;
        fq.w = fe.detJ * frule.weights[static_cast<std::size_t>(k)];
        fq.x = fe.x;
        fq.nodes = face.nodes;
        fq.n_nodes = face.n_nodes;
        cache.push_back(std::move(fq));
      }
    }
    ctx.face_qp.emplace(name, std::move(cache));
  }
  return ctx;
}

std::vector<QuadPointState> make_states(const AssemblyContext &ctx, double phi0,
                                        double source) {
  const int dim = ctx.dim();
  QuadPointState proto;
  proto.solid = SolidPoint::zero(dim);
  proto.fluid = FluidPoint::zero(dim);
  proto.solid_data = SolidPoint::zero(dim);
  proto.fluid_data = FluidPoint::zero(dim);
  proto.phi0 = phi0;
  proto.phi = phi0;
  proto.source = source;
  return std::vector<QuadPointState>(static_cast<std::size_t>(ctx.n_qp()), proto);
}

void advance_history(std::vector<QuadPointState> &states) {
  for (QuadPointState &s : states) {
    s.p_prev = s.p;
    s.eps_vol_prev = s.eps_vol;
  }
}

void apply_dirichlet(const DofMap &dofs, double t, Eigen::VectorXd &x) {
  const Eigen::VectorXd vals = dofs.constrained_values(t);
  const std::vector<int> &cd = dofs.constrained_dofs();
  for (std::size_t i = 0; i < cd.size(); ++i) x[cd[i]] = vals[static_cast<int>(i)];
}

Eigen::SparseMatrix<double> assemble_fully_dd_matrix(const AssemblyContext &ctx,
                                                     const MetricSpec &metric,
                                                     const BiotConstants &biot, double dt) {
  const int dim = ctx.dim();
  const int n = ctx.mesh->nodes_per_elem();
  const int nd = n * dim;
  const SymTensor4 Ssinv(dim, metric.S_s.k.inverse());
  const Eigen::MatrixXd Sfinv = metric.S_f.inverse();

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(ctx.n_elems()) *
                static_cast<std::size_t>(2 * nd * nd + 4 * n * nd + 4 * n * n));
  for (int e = 0; e < ctx.n_elems(); ++e) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nd, nd);
    Eigen::MatrixXd Buf = Eigen::MatrixXd::Zero(nd, n);
    Eigen::MatrixXd Kcf = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, nd);
    Eigen::MatrixXd CpM = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Dss = Eigen::MatrixXd::Zero(nd, nd);
    Eigen::MatrixXd Dsf = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const Eigen::RowVectorXd bd = div_row(q.dNdx);
      A.noalias() += q.w * q.Bk.transpose() * metric.C_s.k * q.Bk;
      Buf.noalias() += (q.w * biot.B) * bd.transpose() * q.N.transpose();
      Kcf.noalias() += (dt * q.w) * q.dNdx * metric.C_f * q.dNdx.transpose();
      G.noalias() += (q.w * biot.B) * q.N * bd;
      CpM.noalias() += (q.w * biot.inv_M) * q.N * q.N.transpose();
      Dss.noalias() += q.w * q.Bk.transpose() * Ssinv.k * q.Bk;
      Dsf.noalias() += (dt * q.w) * q.dNdx * Sfinv * q.dNdx.transpose();
    }
    const ElemDofs d = elem_dofs(ctx, e);
    scatter(trips, d.u, d.u, A);
    scatter(trips, d.u, d.bM, Buf);
    scatter(trips, d.p, d.p, Kcf);
    scatter(trips, d.p, d.bm, G);
    scatter(trips, d.p, d.bM, CpM);
    scatter(trips, d.bm, d.p, G.transpose());
    scatter(trips, d.bm, d.bm, -Dss);
    scatter(trips, d.bM, d.u, Buf.transpose());
    scatter(trips, d.bM, d.p, CpM.transpose());
    scatter(trips, d.bM, d.bM, -Dsf);
  }
  return from_triplets(ctx.dofs->n_dofs(), trips);
}

Eigen::VectorXd assemble_fully_dd_rhs(const AssemblyContext &ctx, const MetricSpec &metric,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, double dt,
                                      const ProblemBCs &bcs, double t) {
  const int dim = ctx.dim();
  const int n = ctx.mesh->nodes_per_elem();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ctx.dofs->n_dofs());
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const ElemDofs d = elem_dofs(ctx, e);
    Eigen::VectorXd fu = Eigen::VectorXd::Zero(n * dim);
    Eigen::VectorXd fp = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd fbm = Eigen::VectorXd::Zero(n * dim);
    Eigen::VectorXd fbM = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      fu.noalias() +=
          q.w * q.Bk.transpose() * (metric.C_s.k * kelvin_vector(s.solid_data.strain));
      fp.noalias() += (dt * q.w) * q.dNdx * (metric.C_f * s.fluid_data.grad_p);
      fbm.noalias() += q.w * q.Bk.transpose() * kelvin_vector(s.solid_data.stress);
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < dim; ++c) fbm[a * dim + c] -= q.w * q.N[a] * biot.gamma[c];
      fbM.noalias() +=
          (q.w * (biot.inv_M * s.p_prev + biot.B * s.eps_vol_prev - s.source * dt)) * q.N;
      fbM.noalias() += (dt * q.w) * q.dNdx * s.fluid_data.flux;
    }
    scatter_vec(rhs, d.u, fu);
    scatter_vec(rhs, d.p, fp);
    scatter_vec(rhs, d.bm, fbm);
    scatter_vec(rhs, d.bM, fbM);
  }
  for (const TractionBC &bc : bcs.tractions) add_traction(ctx, bc, t, Field::BetaMom, -1.0, rhs);
  for (const FluxBC &bc : bcs.fluxes) add_flux(ctx, bc, t, dt, Field::BetaMass, -1.0, rhs);
  return rhs;
}

AssembledSystem assemble_fully_dd(const AssemblyContext &ctx, const MetricSpec &metric,
                                  const std::vector<QuadPointState> &states,
                                  const BiotConstants &biot, double dt, const ProblemBCs &bcs,
                                  double t) {
  return {assemble_fully_dd_matrix(ctx, metric, biot, dt),
          assemble_fully_dd_rhs(ctx, metric, states, biot, dt, bcs, t)};
}

Eigen::SparseMatrix<double> assemble_hybrid_solid_matrix(const AssemblyContext &ctx,
                                                         const MetricSpec &metric,
                                                         const BiotConstants &biot,
                                                         const DarcyModel &darcy, double dt) {
  const int dim = ctx.dim();
  const int n = ctx.mesh->nodes_per_elem();
  const int nd = n * dim;
  const SymTensor4 Ssinv(dim, metric.S_s.k.inverse());
  const Eigen::MatrixXd k_over_mu = darcy.k / darcy.mu_f;

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(ctx.n_elems()) *
                static_cast<std::size_t>(2 * nd * nd + 4 * n * nd + 2 * n * n));
  for (int e = 0; e < ctx.n_elems(); ++e) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nd, nd);
    Eigen::MatrixXd Buf = Eigen::MatrixXd::Zero(nd, n);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, nd);
    Eigen::MatrixXd CpM = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Dss = Eigen::MatrixXd::Zero(nd, nd);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const Eigen::RowVectorXd bd = div_row(q.dNdx);
      A.noalias() += q.w * q.Bk.transpose() * metric.C_s.k * q.Bk;
      Buf.noalias() += (q.w * biot.B) * bd.transpose() * q.N.transpose();
      G.noalias() += (q.w * biot.B) * q.N * bd;
      CpM.noalias() += (q.w * biot.inv_M) * q.N * q.N.transpose();
      CpM.noalias() += (dt * q.w) * q.dNdx * k_over_mu * q.dNdx.transpose();
      Dss.noalias() += q.w * q.Bk.transpose() * Ssinv.k * q.Bk;
    }
    const ElemDofs d = elem_dofs(ctx, e);
    scatter(trips, d.u, d.u, A);
    scatter(trips, d.u, d.bM, Buf);
    scatter(trips, d.p, d.bm, G);
    scatter(trips, d.p, d.bM, CpM);
    scatter(trips, d.bm, d.p, G.transpose());
    scatter(trips, d.bm, d.bm, -Dss);
    scatter(trips, d.bM, d.u, Buf.transpose());
    scatter(trips, d.bM, d.p, CpM.transpose());
  }
  return from_triplets(ctx.dofs->n_dofs(), trips);
}

Eigen::VectorXd assemble_hybrid_solid_rhs(const AssemblyContext &ctx, const MetricSpec &metric,
                                          const std::vector<QuadPointState> &states,
                                          const BiotConstants &biot, const DarcyModel &darcy,
                                          double dt, const ProblemBCs &bcs, double t) {
  const int dim = ctx.dim();
  const int n = ctx.mesh->nodes_per_elem();
  const Eigen::VectorXd k_gamma_over_mu = darcy.k * darcy.gamma_f / darcy.mu_f;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ctx.dofs->n_dofs());
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const ElemDofs d = elem_dofs(ctx, e);
    Eigen::VectorXd fu = Eigen::VectorXd::Zero(n * dim);
    Eigen::VectorXd fbm = Eigen::VectorXd::Zero(n * dim);
    Eigen::VectorXd fbM = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      fu.noalias() +=
          q.w * q.Bk.transpose() * (metric.C_s.k * kelvin_vector(s.solid_data.strain));
      fbm.noalias() += q.w * q.Bk.transpose() * kelvin_vector(s.solid_data.stress);
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < dim; ++c) fbm[a * dim + c] -= q.w * q.N[a] * biot.gamma[c];
      fbM.noalias() +=
          (q.w * (biot.inv_M * s.p_prev + biot.B * s.eps_vol_prev - s.source * dt)) * q.N;
      fbM.noalias() -= (dt * q.w) * q.dNdx * k_gamma_over_mu;
    }
    scatter_vec(rhs, d.u, fu);
    scatter_vec(rhs, d.bm, fbm);
    scatter_vec(rhs, d.bM, fbM);
  }
  for (const TractionBC &bc : bcs.tractions) add_traction(ctx, bc, t, Field::BetaMom, -1.0, rhs);
  for (const FluxBC &bc : bcs.fluxes) add_flux(ctx, bc, t, dt, Field::BetaMass, -1.0, rhs);
  return rhs;
}

AssembledSystem assemble_hybrid_solid(const AssemblyContext &ctx, const MetricSpec &metric,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, const DarcyModel &darcy,
                                      double dt, const ProblemBCs &bcs, double t) {
  return {assemble_hybrid_solid_matrix(ctx, metric, biot, darcy, dt),
          assemble_hybrid_solid_rhs(ctx, metric, states, biot, darcy, dt, bcs, t)};
}

AssembledSystem assemble_hybrid_fluid(const AssemblyContext &ctx, const MetricSpec &metric,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, const SolidLawField &laws,
                                      double dt, const ProblemBCs &bcs, double t,
                                      const Eigen::VectorXd &x) {
  const int dim = ctx.dim();
  const int n = ctx.mesh->nodes_per_elem();
  const int nd = n * dim;
  const Eigen::MatrixXd Sfinv = metric.S_f.inverse();
  const Eigen::VectorXd kelvin_id = kelvin_vector(SymTensor2::identity(dim));

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(ctx.n_elems()) *
                static_cast<std::size_t>(3 * nd * nd + 6 * n * nd + 3 * n * n));
  Eigen::VectorXd R = Eigen::VectorXd::Zero(ctx.dofs->n_dofs());

  for (int e = 0; e < ctx.n_elems(); ++e) {
    const SolidModel &law = laws.at(e);
    const ElemFields f = gather_elem(ctx, x, e);
    const Eigen::VectorXd bm_flat = flatten(f.bm);
    Eigen::MatrixXd Juu = Eigen::MatrixXd::Zero(nd, nd);
    Eigen::MatrixXd Jubm = Eigen::MatrixXd::Zero(nd, nd);
    Eigen::MatrixXd Buf = Eigen::MatrixXd::Zero(nd, n);
    Eigen::MatrixXd Kcf = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, nd);
    Eigen::MatrixXd CpM = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Dsf = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd Ru = Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd Rp = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd Rbm = Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd RbM = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const Eigen::RowVectorXd bd = div_row(q.dNdx);

      const SymTensor2 eps = small_strain(f.u, q.dNdx);
      const StressResult sr = law.evaluate(eps);
      const Eigen::VectorXd w_bm = q.Bk * bm_flat;  // kelvin(sym grad beta_mom)
      const SymTensor2 wt = kelvin_inverse(dim, w_bm);
      const double p_val = q.N.dot(f.p);
      const double bM_val = q.N.dot(f.bM);
      const double div_bm = bd.dot(bm_flat);
      const Eigen::VectorXd grad_p = q.dNdx.transpose() * f.p;
      const Eigen::VectorXd grad_bM = q.dNdx.transpose() * f.bM;

      // residuals
      Ru.noalias() += (q.w * biot.B * bM_val) * bd.transpose();
      Ru.noalias() -= q.w * q.Bk.transpose() * (sr.tangent.k * w_bm);
      Rp.noalias() += q.w * q.dNdx * (metric.C_f * (grad_p - s.fluid_data.grad_p));
      Rp.noalias() += (q.w * (biot.inv_M * bM_val + biot.B * div_bm)) * q.N;
      Rbm.noalias() -= q.w * q.Bk.transpose() *
                       (kelvin_vector(sr.stress) - (biot.B * p_val) * kelvin_id);
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < dim; ++c) Rbm[a * dim + c] += q.w * q.N[a] * biot.gamma[c];
      RbM.noalias() += (q.w * (biot.inv_M * (p_val - s.p_prev) +
                               biot.B * (eps.trace() - s.eps_vol_prev) + s.source * dt)) *
                       q.N;
      RbM.noalias() -=
          (dt * q.w) * q.dNdx * (s.fluid_data.flux + dt * (Sfinv * grad_bM));

      // Jacobian
      const SymTensor4 third = law.tangent_derivative(eps, wt);
      Juu.noalias() -= q.w * q.Bk.transpose() * third.k * q.Bk;
      Jubm.noalias() -= q.w * q.Bk.transpose() * sr.tangent.k * q.Bk;
      Buf.noalias() += (q.w * biot.B) * bd.transpose() * q.N.transpose();
      Kcf.noalias() += q.w * q.dNdx * metric.C_f * q.dNdx.transpose();
      G.noalias() += (q.w * biot.B) * q.N * bd;
      CpM.noalias() += (q.w * biot.inv_M) * q.N * q.N.transpose();
      Dsf.noalias() += (dt * dt * q.w) * q.dNdx * Sfinv * q.dNdx.transpose();
    }
    const ElemDofs d = elem_dofs(ctx, e);
    scatter(trips, d.u, d.u, Juu);
    scatter(trips, d.u, d.bm, Jubm);
    scatter(trips, d.u, d.bM, Buf);
    scatter(trips, d.p, d.p, Kcf);
    scatter(trips, d.p, d.bm, G);
    scatter(trips, d.p, d.bM, CpM);
    scatter(trips, d.bm, d.u, Jubm.transpose());
    scatter(trips, d.bm, d.p, G.transpose());
    scatter(trips, d.bM, d.u, Buf.transpose());
    scatter(trips, d.bM, d.p, CpM.transpose());
    scatter(trips, d.bM, d.bM, -Dsf);
    scatter_vec(R, d.u, Ru);
    scatter_vec(R, d.p, Rp);
    scatter_vec(R, d.bm, Rbm);
    scatter_vec(R, d.bM, RbM);
  }
  for (const TractionBC &bc : bcs.tractions) add_traction(ctx, bc, t, Field::BetaMom, 1.0, R);
  for (const FluxBC &bc : bcs.fluxes) add_flux(ctx, bc, t, dt, Field::BetaMass, 1.0, R);
  return {from_triplets(ctx.dofs->n_dofs(), trips), std::move(R)};
}

AssembledSystem assemble_model_based(const AssemblyContext &ctx,
                                     const std::vector<QuadPointState> &states,
                                     const BiotConstants &biot, const SolidLawField &laws,
                                     const DarcyModel &darcy, double dt, const ProblemBCs &bcs,
                                     double t, const Eigen::VectorXd &x) {
  const int dim = ctx.dim();
  const int n = ctx.mesh->nodes_per_elem();
  const int nd = n * dim;
  const Eigen::MatrixXd darcy_tangent = darcy.tangent();  // d(flux)/d(grad p)

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(ctx.n_elems()) *
                static_cast<std::size_t>(nd * nd + 2 * n * nd + n * n));
  Eigen::VectorXd R = Eigen::VectorXd::Zero(ctx.dofs->n_dofs());

  for (int e = 0; e < ctx.n_elems(); ++e) {
    const SolidModel &law = laws.at(e);
    const ElemFields f = gather_elem(ctx, x, e);
    Eigen::MatrixXd Juu = Eigen::MatrixXd::Zero(nd, nd);
    Eigen::MatrixXd Jup = Eigen::MatrixXd::Zero(nd, n);
    Eigen::MatrixXd Jpu = Eigen::MatrixXd::Zero(n, nd);
    Eigen::MatrixXd Jpp = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd Ru = Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd Rp = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const Eigen::RowVectorXd bd = div_row(q.dNdx);

      const SymTensor2 eps = small_strain(f.u, q.dNdx);
      const StressResult sr = law.evaluate(eps);
      const double p_val = q.N.dot(f.p);
      const Eigen::VectorXd grad_p = q.dNdx.transpose() * f.p;
      const Eigen::VectorXd q_flux = darcy.flux(grad_p);

      Ru.noalias() += q.w * q.Bk.transpose() * kelvin_vector(sr.stress);
      Ru.noalias() -= (q.w * biot.B * p_val) * bd.transpose();
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < dim; ++c) Ru[a * dim + c] -= q.w * q.N[a] * biot.gamma[c];
      Rp.noalias() += (q.w * (biot.inv_M * (p_val - s.p_prev) +
                              biot.B * (eps.trace() - s.eps_vol_prev) + s.source * dt)) *
                      q.N;
      Rp.noalias() -= (dt * q.w) * q.dNdx * q_flux;

      Juu.noalias() += q.w * q.Bk.transpose() * sr.tangent.k * q.Bk;
      Jup.noalias() -= (q.w * biot.B) * bd.transpose() * q.N.transpose();
      Jpu.noalias() += (q.w * biot.B) * q.N * bd;
      Jpp.noalias() += (q.w * biot.inv_M) * q.N * q.N.transpose();
      Jpp.noalias() -= (dt * q.w) * q.dNdx * darcy_tangent * q.dNdx.transpose();
    }
    const ElemDofs d = elem_dofs(ctx, e);
    scatter(trips, d.u, d.u, Juu);
    scatter(trips, d.u, d.p, Jup);
    scatter(trips, d.p, d.u, Jpu);
    scatter(trips, d.p, d.p, Jpp);
    scatter_vec(R, d.u, Ru);
    scatter_vec(R, d.p, Rp);
  }
  for (const TractionBC &bc : bcs.tractions) add_traction(ctx, bc, t, Field::U, -1.0, R);
  for (const FluxBC &bc : bcs.fluxes) add_flux(ctx, bc, t, dt, Field::P, 1.0, R);
  return {from_triplets(ctx.dofs->n_dofs(), trips), std::move(R)};
}

namespace {

// Kinematic part shared by every closure: strain, pressure, gradients,
// volumetric strain, and the porosity update.
void closure_kinematics(const AssemblyContext &ctx, const Eigen::VectorXd &x,
                        std::vector<QuadPointState> &states) {
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const ElemFields f = gather_elem(ctx, x, e);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      s.solid.strain = small_strain(f.u, q.dNdx);
      s.eps_vol = s.solid.strain.trace();
      s.p = q.N.dot(f.p);
      s.fluid.grad_p = q.dNdx.transpose() * f.p;
      s.phi = (1.0 + s.eps_vol) * s.phi0;
    }
  }
}

}  // namespace

void closure_fully_dd(const AssemblyContext &ctx, const MetricSpec &metric,
                      const Eigen::VectorXd &x, std::vector<QuadPointState> &states) {
  closure_kinematics(ctx, x, states);
  const SymTensor4 Ssinv(ctx.dim(), metric.S_s.k.inverse());
  const Eigen::MatrixXd Sfinv = metric.S_f.inverse();
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const Eigen::VectorXd bm_flat =
        flatten(gather_field(*ctx.mesh, *ctx.dofs, x, e, Field::BetaMom, ctx.dim()));
    const Eigen::VectorXd bM = gather_field(*ctx.mesh, *ctx.dofs, x, e, Field::BetaMass, 1).col(0);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const Eigen::VectorXd w_bm = q.Bk * bm_flat;
      s.solid.stress = kelvin_inverse(
          ctx.dim(), kelvin_vector(s.solid_data.stress) + Ssinv.k * w_bm);
      s.fluid.flux = s.fluid_data.flux + Sfinv * (q.dNdx.transpose() * bM);
    }
  }
}

void closure_hybrid_fluid(const AssemblyContext &ctx, const MetricSpec &metric,
                          const SolidLawField &laws, double dt, const Eigen::VectorXd &x,
                          std::vector<QuadPointState> &states) {
  closure_kinematics(ctx, x, states);
  const Eigen::MatrixXd Sfinv = metric.S_f.inverse();
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const SolidModel &law = laws.at(e);
    const Eigen::VectorXd bM = gather_field(*ctx.mesh, *ctx.dofs, x, e, Field::BetaMass, 1).col(0);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      s.solid.stress = law.evaluate(s.solid.strain).stress;
      s.fluid.flux = s.fluid_data.flux + dt * (Sfinv * (q.dNdx.transpose() * bM));
    }
  }
}

void closure_hybrid_solid(const AssemblyContext &ctx, const MetricSpec &metric,
                          const DarcyModel &darcy, const Eigen::VectorXd &x,
                          std::vector<QuadPointState> &states) {
  closure_kinematics(ctx, x, states);
  const SymTensor4 Ssinv(ctx.dim(), metric.S_s.k.inverse());
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const Eigen::VectorXd bm_flat =
        flatten(gather_field(*ctx.mesh, *ctx.dofs, x, e, Field::BetaMom, ctx.dim()));
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const Eigen::VectorXd w_bm = q.Bk * bm_flat;
      s.solid.stress = kelvin_inverse(
          ctx.dim(), kelvin_vector(s.solid_data.stress) + Ssinv.k * w_bm);
      s.fluid.flux = darcy.flux(s.fluid.grad_p);
    }
  }
}

void closure_model_based(const AssemblyContext &ctx, const SolidLawField &laws,
                         const DarcyModel &darcy, const Eigen::VectorXd &x,
                         std::vector<QuadPointState> &states) {
  closure_kinematics(ctx, x, states);
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const SolidModel &law = laws.at(e);
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      s.solid.stress = law.evaluate(s.solid.strain).stress;
      s.fluid.flux = darcy.flux(s.fluid.grad_p);
    }
  }
}

void apply_closure(const AssemblyContext &ctx, const MetricSpec &metric,
                   const Formulation &formulation, double dt, const Eigen::VectorXd &x,
                   std::vector<QuadPointState> &states) {
  switch (formulation.kind) {
    case FormulationKind::FullyDD:
      closure_fully_dd(ctx, metric, x, states);
      return;
    case FormulationKind::HybridFluidDD:
      closure_hybrid_fluid(ctx, metric, formulation.solid_law, dt, x, states);
      return;
    case FormulationKind::HybridSolidDD:
      closure_hybrid_solid(ctx, metric, *formulation.darcy, x, states);
      return;
    case FormulationKind::ModelBased:
      closure_model_based(ctx, formulation.solid_law, *formulation.darcy, x, states);
      return;
  }
}

ConservationReport check_conservation(const AssemblyContext &ctx,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, double dt,
                                      const ProblemBCs &bcs, double t,
                                      const Eigen::VectorXd & /*x*/, FormulationKind kind) {
  const int dim = ctx.dim();
  const int n = ctx.mesh->nodes_per_elem();
  const int n_dofs = ctx.dofs->n_dofs();
  const Eigen::VectorXd kelvin_id = kelvin_vector(SymTensor2::identity(dim));
  // Test functions: the multiplier fields for the data-driven formulations,
  // the primal fields for the model-based twin.
  const bool model_based = kind == FormulationKind::ModelBased;
  const Field mom_field = model_based ? Field::U : Field::BetaMom;
  const Field mass_field = model_based ? Field::P : Field::BetaMass;

  Eigen::VectorXd R = Eigen::VectorXd::Zero(n_dofs);      // residual
  Eigen::VectorXd A = Eigen::VectorXd::Zero(n_dofs);      // sum of |contributions|
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const Mesh &mesh = *ctx.mesh;
    const DofMap &dofs = *ctx.dofs;
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const QpData &q = ctx.qp[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const QuadPointState &s = states[static_cast<std::size_t>(ctx.qp_index(e, k))];
      const Eigen::VectorXd stress_term =
          q.w * q.Bk.transpose() *
          (kelvin_vector(s.solid.stress) - (biot.B * s.p) * kelvin_id);
      const double mass_accum = q.w * (biot.inv_M * (s.p - s.p_prev) +
                                       biot.B * (s.eps_vol - s.eps_vol_prev) +
                                       s.source * dt);
      const Eigen::VectorXd mass_flux = (dt * q.w) * q.dNdx * s.fluid.flux;
      for (int a = 0; a < n; ++a) {
        const int node = mesh.elements(e, a);
        for (int c = 0; c < dim; ++c) {
          const int gd = dofs.dof(node, mom_field, c);
          const double body = q.w * q.N[a] * biot.gamma[c];
          R[gd] += stress_term[a * dim + c] - body;
          A[gd] += std::abs(stress_term[a * dim + c]) + std::abs(body);
        }
        const int gm = dofs.dof(node, mass_field);
        R[gm] += mass_accum * q.N[a] - mass_flux[a];
        A[gm] += std::abs(mass_accum * q.N[a]) + std::abs(mass_flux[a]);
      }
    }
  }
  Eigen::VectorXd Rb = Eigen::VectorXd::Zero(n_dofs);
  for (const TractionBC &bc : bcs.tractions) add_traction(ctx, bc, t, mom_field, -1.0, Rb);
  for (const FluxBC &bc : bcs.fluxes) add_flux(ctx, bc, t, dt, mass_field, 1.0, Rb);
  R += Rb;
  A += Rb.cwiseAbs();

  double mom_max = 0.0, mom_scale = 0.0, mass_max = 0.0, mass_scale = 0.0;
  for (int node = 0; node < ctx.mesh->n_nodes(); ++node) {
    for (int c = 0; c < dim; ++c) {
      const int gd = ctx.dofs->dof(node, mom_field, c);
      if (ctx.dofs->is_constrained(gd)) continue;
      mom_max = std::max(mom_max, std::abs(R[gd]));
      mom_scale = std::max(mom_scale, A[gd]);
    }
    const int gm = ctx.dofs->dof(node, mass_field);
    if (ctx.dofs->is_constrained(gm)) continue;
    mass_max = std::max(mass_max, std::abs(R[gm]));
    mass_scale = std::max(mass_scale, A[gm]);
  }
  ConservationReport rep;
  rep.momentum_max = mom_max;
  rep.momentum_scale = mom_scale;
  rep.mass_max = mass_max;
  rep.mass_scale = mass_scale;
  rep.momentum_rel = mom_scale > 0.0 ? mom_max / mom_scale : mom_max;
  rep.mass_rel = mass_scale > 0.0 ? mass_max / mass_scale : mass_max;
  return rep;
}

}  // namespace ddporo
