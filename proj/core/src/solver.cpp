// Dirichlet-reduced linear solves, the Newton loop for the nonlinear
// formulations, nearest-neighbor local search with its init modes, and the
// staggered fixed-point driver for one time step.

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "ddporo/parallel.hpp"
#include "ddporo/solver.hpp"

namespace ddporo {

namespace {

using Triplet = Eigen::Triplet<double>;

double free_norm(const DofMap &dofs, const Eigen::VectorXd &v) {
  double sum = 0.0;
  for (int d : dofs.free_dofs()) sum += v[d] * v[d];
  return std::sqrt(sum);
}

}  // namespace

void ReducedSolver::set_matrix(const Eigen::SparseMatrix<double> &K, const DofMap &dofs) {
  dofs_ = &dofs;
  const int nf = dofs.n_free();
  const int nc = dofs.n_constrained();
  std::vector<Triplet> ff, fc;
  ff.reserve(static_cast<std::size_t>(K.nonZeros()));
  for (int col = 0; col < K.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      const int fi = dofs.free_index(static_cast<int>(it.row()));
      if (fi < 0) continue;
      const int fj = dofs.free_index(static_cast<int>(it.col()));
      if (fj >= 0)
        ff.emplace_back(fi, fj, it.value());
      else
        fc.emplace_back(fi, dofs.constrained_index(static_cast<int>(it.col())), it.value());
    }
  }
  const bool same_pattern = analyzed_ && K_ff_.rows() == nf;
  K_ff_.resize(nf, nf);
  K_ff_.setFromTriplets(ff.begin(), ff.end());
  K_ff_.makeCompressed();
  K_fc_.resize(nf, nc);
  K_fc_.setFromTriplets(fc.begin(), fc.end());
  K_fc_.makeCompressed();

  Eigen::VectorXd row_inf = Eigen::VectorXd::Zero(nf);
  Eigen::VectorXd col_inf = Eigen::VectorXd::Zero(nf);
  for (int col = 0; col < K_ff_.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K_ff_, col); it; ++it) {
      const double a = std::abs(it.value());
      row_inf[static_cast<int>(it.row())] = std::max(row_inf[static_cast<int>(it.row())], a);
      col_inf[col] = std::max(col_inf[col], a);
    }
  }
  row_scale_ = (row_inf.array() > 0.0).select(row_inf.array().sqrt().inverse(), 1.0);
  col_scale_ = (col_inf.array() > 0.0).select(col_inf.array().sqrt().inverse(), 1.0);
  const Eigen::SparseMatrix<double> scaled =
      row_scale_.asDiagonal() * K_ff_ * col_scale_.asDiagonal();

  if (!same_pattern) {
    lu_.analyzePattern(scaled);
    analyzed_ = true;
  }
  lu_.factorize(scaled);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("singular reduced system (" + std::to_string(nf) +
                             " free DOFs): " + lu_.lastErrorMessage() +
                             "; check boundary conditions and metric definiteness");
  ready_ = true;
}

Eigen::VectorXd ReducedSolver::solve(const Eigen::VectorXd &rhs_full,
                                     const Eigen::VectorXd &x_constrained) const {
  if (!ready_) throw std::logic_error("ReducedSolver::solve before set_matrix");
  const DofMap &dofs = *dofs_;
  Eigen::VectorXd rf(dofs.n_free());
  const std::vector<int> &fd = dofs.free_dofs();
  for (std::size_t i = 0; i < fd.size(); ++i) rf[static_cast<int>(i)] = rhs_full[fd[i]];
  if (dofs.n_constrained() > 0) rf.noalias() -= K_fc_ * x_constrained;
  Eigen::VectorXd xf = col_scale_.cwiseProduct(lu_.solve(row_scale_.cwiseProduct(rf)));
  if (lu_.info() != Eigen::Success) throw std::runtime_error("sparse LU solve failed");
  const Eigen::VectorXd resid = rf - K_ff_ * xf;
  xf += col_scale_.cwiseProduct(lu_.solve(row_scale_.cwiseProduct(resid)));
  Eigen::VectorXd x(dofs.n_dofs());
  for (std::size_t i = 0; i < fd.size(); ++i) x[fd[i]] = xf[static_cast<int>(i)];
  const std::vector<int> &cd = dofs.constrained_dofs();
  for (std::size_t i = 0; i < cd.size(); ++i) x[cd[i]] = x_constrained[static_cast<int>(i)];
  return x;
}

GlobalSolver::GlobalSolver(const AssemblyContext &ctx, MetricSpec metric, BiotConstants biot,
                           Formulation formulation, ProblemBCs bcs, double dt,
                           NewtonOptions newton)
    : ctx_(&ctx),
      metric_(std::move(metric)),
      biot_(std::move(biot)),
      formulation_(std::move(formulation)),
      bcs_(std::move(bcs)),
      dt_(dt),
      newton_(newton) {
  if (dt_ <= 0.0) throw std::invalid_argument("time step must be positive");
  const FormulationKind kind = formulation_.kind;
  if ((kind == FormulationKind::HybridFluidDD || kind == FormulationKind::ModelBased) &&
      formulation_.solid_law.empty())
    throw std::invalid_argument("formulation requires a solid law");
  const auto &per_elem = formulation_.solid_law.per_element;
  if (!per_elem.empty()) {
    if (per_elem.size() != static_cast<std::size_t>(ctx_->n_elems()))
      throw std::invalid_argument("per-element solid law table does not match mesh");
    for (const auto &law : per_elem)
      if (!law) throw std::invalid_argument("per-element solid law table holds a null entry");
  }
  if ((kind == FormulationKind::HybridSolidDD || kind == FormulationKind::ModelBased) &&
      !formulation_.darcy)
    throw std::invalid_argument("formulation requires Darcy parameters");
  if (kind == FormulationKind::ModelBased) {
    // The multiplier fields are absent from the two-field system; they must
    // be pinned so the reduced operator stays square and regular.
    const DofMap &dofs = *ctx_->dofs;
    for (int node = 0; node < ctx_->mesh->n_nodes(); ++node) {
      for (int c = 0; c < ctx_->dim(); ++c)
        if (!dofs.is_constrained(dofs.dof(node, Field::BetaMom, c)))
          throw std::invalid_argument(
              "model-based runs must constrain every multiplier DOF to zero");
      if (!dofs.is_constrained(dofs.dof(node, Field::BetaMass)))
        throw std::invalid_argument(
            "model-based runs must constrain every multiplier DOF to zero");
    }
  }
}

void GlobalSolver::ensure_constant_operator() {
  if (factorized_) return;
  if (formulation_.kind == FormulationKind::FullyDD)
    K_ = assemble_fully_dd_matrix(*ctx_, metric_, biot_, dt_);
  else
    K_ = assemble_hybrid_solid_matrix(*ctx_, metric_, biot_, *formulation_.darcy, dt_);
  reduced_.set_matrix(K_, *ctx_->dofs);
  factorized_ = true;
}

const Eigen::SparseMatrix<double> &GlobalSolver::matrix() {
  if (formulation_.kind != FormulationKind::FullyDD &&
      formulation_.kind != FormulationKind::HybridSolidDD)
    throw std::logic_error("operator is only constant for the fully-DD and hybrid-solid "
                           "formulations");
  ensure_constant_operator();
  return K_;
}

SolveInfo GlobalSolver::solve(double t, Eigen::VectorXd &x,
                              std::vector<QuadPointState> &states) {
  const DofMap &dofs = *ctx_->dofs;
  if (static_cast<int>(states.size()) != ctx_->n_qp())
    throw std::invalid_argument("state count does not match quadrature points");

  if (formulation_.kind == FormulationKind::FullyDD ||
      formulation_.kind == FormulationKind::HybridSolidDD) {
    ensure_constant_operator();
    const Eigen::VectorXd rhs =
        formulation_.kind == FormulationKind::FullyDD
            ? assemble_fully_dd_rhs(*ctx_, metric_, states, biot_, dt_, bcs_, t)
            : assemble_hybrid_solid_rhs(*ctx_, metric_, states, biot_, *formulation_.darcy,
                                        dt_, bcs_, t);
    x = reduced_.solve(rhs, dofs.constrained_values(t));
    apply_closure(*ctx_, metric_, formulation_, dt_, x, states);
    return SolveInfo{1, {}};
  }

  if (x.size() != dofs.n_dofs()) x = Eigen::VectorXd::Zero(dofs.n_dofs());
  apply_dirichlet(dofs, t, x);
  SolveInfo info;
  info.iterations = 0;
  double r0 = 0.0;
  bool done = false;
  const Eigen::VectorXd zero_c = Eigen::VectorXd::Zero(dofs.n_constrained());
  for (int it = 0; it <= newton_.max_iters; ++it) {
    const AssembledSystem sys =
        formulation_.kind == FormulationKind::HybridFluidDD
            ? assemble_hybrid_fluid(*ctx_, metric_, states, biot_, formulation_.solid_law,
                                    dt_, bcs_, t, x)
            : assemble_model_based(*ctx_, states, biot_, formulation_.solid_law,
                                   *formulation_.darcy, dt_, bcs_, t, x);
    const double rn = free_norm(dofs, sys.rhs);
    if (!std::isfinite(rn)) throw std::runtime_error("Newton residual is not finite");
    info.residual_norms.push_back(rn);
    if (it == 0) r0 = rn;
    if (rn <= newton_.rtol * r0) {
      done = true;
      break;
    }
    if (it == newton_.max_iters) break;
    reduced_.set_matrix(sys.matrix, dofs);
    const Eigen::VectorXd dx = reduced_.solve(-sys.rhs, zero_c);
    x += dx;
    info.iterations = it + 1;
    x_scale_ = std::max(x_scale_, free_norm(dofs, x));
    if (dx.norm() <= newton_.stol * (x_scale_ + 1.0)) {
      done = true;
      break;
    }
  }
  if (!done)
    throw std::runtime_error("Newton did not converge in " +
                             std::to_string(newton_.max_iters) + " iterations");
  apply_closure(*ctx_, metric_, formulation_, dt_, x, states);
  return info;
}

SearchSpace single_search_space(const PhaseDataset *solid, const KdTree *solid_tree,
                                const PhaseDataset *fluid, const KdTree *fluid_tree) {
  SearchSpace space;
  if (solid != nullptr) {
    space.solid.push_back(solid);
    space.solid_trees.push_back(solid_tree);
  }
  if (fluid != nullptr) {
    space.fluid.push_back(fluid);
    space.fluid_trees.push_back(fluid_tree);
  }
  return space;
}

SearchSpace family_search_space(const PhaseDataset *solid, const KdTree *solid_tree,
                                const DatasetFamily &fluid_family,
                                const std::vector<KdTree> &fluid_trees) {
  if (fluid_family.members.size() != fluid_trees.size())
    throw std::invalid_argument("one tree per family member required");
  SearchSpace space;
  if (solid != nullptr) {
    space.solid.push_back(solid);
    space.solid_trees.push_back(solid_tree);
  }
  for (std::size_t i = 0; i < fluid_family.members.size(); ++i) {
    space.fluid.push_back(&fluid_family.members[i]);
    space.fluid_trees.push_back(&fluid_trees[i]);
  }
  space.fluid_family = &fluid_family;
  return space;
}

namespace {

void require_space(const SearchSpace &space, FormulationKind kind) {
  if (uses_solid_data(kind) && (space.solid.empty() || space.solid.front()->empty()))
    throw std::invalid_argument("solid dataset required but empty");
  if (uses_fluid_data(kind) && (space.fluid.empty() || space.fluid.front()->empty()))
    throw std::invalid_argument("fluid dataset required but empty");
}

NnResult run_query(const PhaseDataset &ds, const KdTree *tree, SearchBackend backend,
                   const EmbeddedPoint &q) {
  if (backend == SearchBackend::Tree) return tree->query(q);
  return brute_force_query(ds.embedded, q);
}

}  // namespace

LocalSearchResult local_search(const AssemblyContext &ctx, const MetricSpec &metric,
                               const SearchSpace &space, FormulationKind kind,
                               std::vector<QuadPointState> &states, SearchBackend backend,
                               int n_threads) {
  require_space(space, kind);
  const bool search_solid = uses_solid_data(kind) && !space.solid.empty();
  const bool search_fluid = uses_fluid_data(kind) && !space.fluid.empty();
  const int threads = resolve_thread_count(n_threads);
  const int n = static_cast<int>(states.size());

  std::vector<LocalSearchResult> partial(static_cast<std::size_t>(threads < 1 ? 1 : threads));
  parallel_for_chunks(n, threads, [&](int chunk, int begin, int end) {
    LocalSearchResult &acc = partial[static_cast<std::size_t>(chunk)];
    for (int i = begin; i < end; ++i) {
      QuadPointState &s = states[static_cast<std::size_t>(i)];
      const double w = ctx.qp[static_cast<std::size_t>(i)].w;
      bool changed = false;
      if (search_solid) {
        const int m = 0;
        const NnResult nn = run_query(*space.solid[static_cast<std::size_t>(m)],
                                      space.solid_trees[static_cast<std::size_t>(m)], backend,
                                      embed_solid(metric, s.solid));
        if (m != s.solid_member || nn.index != s.solid_index) {
          changed = true;
          s.solid_member = m;
          s.solid_index = nn.index;
          s.solid_data =
              space.solid[static_cast<std::size_t>(m)]->solid_points[static_cast<std::size_t>(
                  nn.index)];
        }
        acc.solid_metric += w * solid_distance_sq(metric, s.solid, s.solid_data);
      }
      if (search_fluid) {
        const int m =
            space.fluid_family ? select_dataset_by_porosity(*space.fluid_family, s.phi) : 0;
        const NnResult nn = run_query(*space.fluid[static_cast<std::size_t>(m)],
                                      space.fluid_trees[static_cast<std::size_t>(m)], backend,
                                      embed_fluid(metric, s.fluid));
        if (m != s.fluid_member || nn.index != s.fluid_index) {
          changed = true;
          s.fluid_member = m;
          s.fluid_index = nn.index;
          s.fluid_data =
              space.fluid[static_cast<std::size_t>(m)]->fluid_points[static_cast<std::size_t>(
                  nn.index)];
        }
        acc.fluid_metric += w * fluid_distance_sq(metric, s.fluid, s.fluid_data);
      }
      if (changed) ++acc.change_count;
    }
  });

  LocalSearchResult total;
  for (const LocalSearchResult &p : partial) {
    total.change_count += p.change_count;
    total.solid_metric += p.solid_metric;
    total.fluid_metric += p.fluid_metric;
  }
  total.coupled_metric = total.solid_metric + metric.dt_scale * total.fluid_metric;
  return total;
}

void init_assignments(const MetricSpec &metric, const SearchSpace &space,
                      FormulationKind kind, const InitSpec &init,
                      std::vector<QuadPointState> &states) {
  require_space(space, kind);
  const bool solid_on = uses_solid_data(kind) && !space.solid.empty();
  const bool fluid_on = uses_fluid_data(kind) && !space.fluid.empty();

  if (init.mode == InitMode::CarryOver) {
    for (QuadPointState &s : states) {
      if (solid_on && s.solid_index < 0)
        throw std::invalid_argument("carry_over without prior solid assignments");
      if (fluid_on && s.fluid_index < 0)
        throw std::invalid_argument("carry_over without prior fluid assignments");
    }
    return;
  }

  if (init.mode == InitMode::Random) {
    // Modulo draw instead of a distribution object: the raw engine output is
    // fully specified, so assignments reproduce across standard libraries.
    std::mt19937_64 rng(init.seed);
    for (QuadPointState &s : states) {
      if (solid_on) {
        const PhaseDataset &ds = *space.solid.front();
        s.solid_member = 0;
        s.solid_index = static_cast<int>(rng() % static_cast<std::uint64_t>(ds.size()));
        s.solid_data = ds.solid_points[static_cast<std::size_t>(s.solid_index)];
      }
      if (fluid_on) {
        const int m =
            space.fluid_family ? select_dataset_by_porosity(*space.fluid_family, s.phi) : 0;
        const PhaseDataset &ds = *space.fluid[static_cast<std::size_t>(m)];
        s.fluid_member = m;
        s.fluid_index = static_cast<int>(rng() % static_cast<std::uint64_t>(ds.size()));
        s.fluid_data = ds.fluid_points[static_cast<std::size_t>(s.fluid_index)];
      }
    }
    return;
  }

  // Homogeneous: the data point nearest the given prototype, everywhere.
  if (solid_on && !init.solid_point)
    throw std::invalid_argument("homogeneous init requires a solid prototype point");
  if (fluid_on && !init.fluid_point)
    throw std::invalid_argument("homogeneous init requires a fluid prototype point");
  int solid_idx = -1;
  std::vector<int> fluid_idx(space.fluid.size(), -1);
  if (solid_on)
    solid_idx =
        brute_force_query(space.solid.front()->embedded, embed_solid(metric, *init.solid_point))
            .index;
  for (QuadPointState &s : states) {
    if (solid_on) {
      s.solid_member = 0;
      s.solid_index = solid_idx;
      s.solid_data = space.solid.front()->solid_points[static_cast<std::size_t>(solid_idx)];
    }
    if (fluid_on) {
      const int m =
          space.fluid_family ? select_dataset_by_porosity(*space.fluid_family, s.phi) : 0;
      if (fluid_idx[static_cast<std::size_t>(m)] < 0)
        fluid_idx[static_cast<std::size_t>(m)] =
            brute_force_query(space.fluid[static_cast<std::size_t>(m)]->embedded,
                              embed_fluid(metric, *init.fluid_point))
                .index;
      s.fluid_member = m;
      s.fluid_index = fluid_idx[static_cast<std::size_t>(m)];
      s.fluid_data = space.fluid[static_cast<std::size_t>(m)]
                         ->fluid_points[static_cast<std::size_t>(s.fluid_index)];
    }
  }
}

StepReport run_time_step(GlobalSolver &solver, const SearchSpace &space,
                         std::vector<QuadPointState> &states, Eigen::VectorXd &x, int step,
                         double t, const FixedPointOptions &options) {
  StepReport report;
  const FormulationKind kind = solver.formulation().kind;
  using Clock = std::chrono::steady_clock;
  const auto seconds_since = [](Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  if (kind == FormulationKind::ModelBased) {
    const auto t0 = Clock::now();
    report.solves.push_back(solver.solve(t, x, states));
    report.solve_seconds = seconds_since(t0);
    report.rows.push_back(IterationRow{step, 1, 0.0, 0.0, 0.0, 0});
    report.iterations = 1;
    report.converged = true;
    return report;
  }

  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto t0 = Clock::now();
    report.solves.push_back(solver.solve(t, x, states));
    report.solve_seconds += seconds_since(t0);
    const auto t1 = Clock::now();
    const LocalSearchResult res =
        local_search(solver.context(), solver.metric(), space, kind, states, options.backend,
                     options.n_threads);
    report.search_seconds += seconds_since(t1);
    report.rows.push_back(IterationRow{step, it, res.solid_metric, res.fluid_metric,
                                       res.coupled_metric, res.change_count});
    report.iterations = it;
    if (res.change_count == 0) {
      report.converged = true;
      break;
    }
    if (it == options.max_iterations) {
      if (res.change_count <= options.oscillation_tolerance) {
        report.converged = true;
        report.oscillation_accepted = true;
      } else {
        throw std::runtime_error("fixed point did not converge at step " +
                                 std::to_string(step) + ": " +
                                 std::to_string(res.change_count) +
                                 " assignments still changing after " +
                                 std::to_string(options.max_iterations) + " iterations");
      }
    }
  }
  return report;
}

}  // namespace ddporo
