// Global minimization assemblies for the data-driven and model-based
// poroelastic formulations, the point-wise closure updates, the
// nearest-neighbor local search, and the staggered fixed-point time step
// driver.

#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ddporo/constitutive.hpp"
#include "ddporo/dataset.hpp"
#include "ddporo/dofmap.hpp"
#include "ddporo/kdtree.hpp"
#include "ddporo/mesh.hpp"
#include "ddporo/phase_space.hpp"

namespace ddporo {

enum class FormulationKind { FullyDD, HybridFluidDD, HybridSolidDD, ModelBased };

// Which phases take their constitutive response from a dataset.
bool uses_solid_data(FormulationKind kind);
bool uses_fluid_data(FormulationKind kind);

// Solid law per element: one shared law for homogeneous problems, or a
// per-element table for heterogeneous ones (a law calibrated per element).
struct SolidLawField {
  std::shared_ptr<const SolidModel> shared;
  // Overrides `shared` when non-empty; must then hold one entry per element.
  std::vector<std::shared_ptr<const SolidModel>> per_element;

  SolidLawField() = default;
  SolidLawField(std::shared_ptr<const SolidModel> s) : shared(std::move(s)) {}

  bool empty() const { return shared == nullptr && per_element.empty(); }
  const SolidModel &at(int elem) const {
    return per_element.empty() ? *shared : *per_element[static_cast<std::size_t>(elem)];
  }
};

// Formulation plus the model-based laws it needs: a solid law for
// HybridFluidDD/ModelBased, Darcy parameters for HybridSolidDD/ModelBased.
struct Formulation {
  FormulationKind kind = FormulationKind::FullyDD;
  SolidLawField solid_law;
  std::optional<DarcyModel> darcy;
};

// Traction on a face set, ramped like the Dirichlet constraints:
// value(t) = offset + rate * min(t, t_hold).
struct TractionBC {
  std::string face_set;
  Eigen::VectorXd offset;
  Eigen::VectorXd rate;
  double t_hold = std::numeric_limits<double>::infinity();

  Eigen::VectorXd value(double t) const {
    return offset + rate * (t < t_hold ? t : t_hold);
  }
};

// Prescribed outward normal flux on a face set (m/s), same ramp rule.
struct FluxBC {
  std::string face_set;
  double offset = 0.0;
  double rate = 0.0;
  double t_hold = std::numeric_limits<double>::infinity();

  double value(double t) const { return offset + rate * (t < t_hold ? t : t_hold); }
};

struct ProblemBCs {
  std::vector<TractionBC> tractions;
  std::vector<FluxBC> fluxes;
};

// Per-quadrature-point record: the physical (conservation-satisfying) solid
// and fluid states, the assigned material data point of each phase, the
// mass-balance history, and the tracked porosity.
struct QuadPointState {
  SolidPoint solid;  // physical response after closure
  FluidPoint fluid;

  int solid_member = 0;  // dataset member within a family
  int solid_index = -1;  // point index inside that member
  int fluid_member = 0;
  int fluid_index = -1;
  SolidPoint solid_data;  // assigned data point
  FluidPoint fluid_data;

  double p = 0.0;        // pressure at the point (Pa)
  double eps_vol = 0.0;  // volumetric strain
  double p_prev = 0.0;   // converged previous-step values (history terms)
  double eps_vol_prev = 0.0;

  double phi0 = 0.0;  // reference porosity
  double phi = 0.0;   // current porosity, (1 + eps_vol) * phi0
  double source = 0.0;  // distributed fluid source s (1/s)
};

// Kelvin strain-displacement matrix: maps the element displacement vector
// (node-major, then component) to the Kelvin strain vector.
Eigen::MatrixXd kelvin_strain_matrix(int dim, const Eigen::MatrixXd &dNdx);

// Cached shape data of one interior quadrature point; w already includes
// detJ and the rule weight.
struct QpData {
  Eigen::VectorXd N;
  Eigen::MatrixXd dNdx;  // nodes_per_elem x dim
  Eigen::MatrixXd Bk;    // kelvin_size x (nodes_per_elem * dim)
  double w = 0.0;
  Eigen::VectorXd x;
};

// Cached shape data of one boundary-face quadrature point.
struct FaceQpData {
  Eigen::VectorXd N;
  double w = 0.0;
  Eigen::VectorXd x;
  std::array<int, 4> nodes{-1, -1, -1, -1};
  int n_nodes = 0;
};

// Precomputed shape data for every interior quadrature point (element-major)
// and every face-set quadrature point. All assemblies, closures, and error
// integrals run off this cache.
struct AssemblyContext {
  const Mesh *mesh = nullptr;
  const DofMap *dofs = nullptr;
  QuadRule quad;
  std::vector<QpData> qp;
  std::map<std::string, std::vector<FaceQpData>> face_qp;

  int dim() const { return mesh->dim; }
  int n_elems() const { return mesh->n_elems(); }
  int n_qp_per_elem() const { return quad.size(); }
  int n_qp() const { return static_cast<int>(qp.size()); }
  int qp_index(int elem, int k) const { return elem * quad.size() + k; }
};

AssemblyContext make_context(const Mesh &mesh, const DofMap &dofs, const QuadRule &quad);

// One default-initialized state per quadrature point.
std::vector<QuadPointState> make_states(const AssemblyContext &ctx, double phi0 = 0.0,
                                        double source = 0.0);

// Copies p -> p_prev and eps_vol -> eps_vol_prev on every point; call after
// a converged step before advancing time.
void advance_history(std::vector<QuadPointState> &states);

// Sets the constrained entries of x to their prescribed values at time t.
void apply_dirichlet(const DofMap &dofs, double t, Eigen::VectorXd &x);

struct AssembledSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

// Fully data-driven four-field system in (u, p, beta_mom, beta_mass). The
// matrix depends only on mesh, metric, coupling constants, and dt; assigned
// data enters the right-hand side alone, and the matrix is symmetric.
Eigen::SparseMatrix<double> assemble_fully_dd_matrix(const AssemblyContext &ctx,
                                                     const MetricSpec &metric,
                                                     const BiotConstants &biot, double dt);
Eigen::VectorXd assemble_fully_dd_rhs(const AssemblyContext &ctx, const MetricSpec &metric,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, double dt,
                                      const ProblemBCs &bcs, double t);
AssembledSystem assemble_fully_dd(const AssemblyContext &ctx, const MetricSpec &metric,
                                  const std::vector<QuadPointState> &states,
                                  const BiotConstants &biot, double dt, const ProblemBCs &bcs,
                                  double t);

// Data-driven solid with model-based Darcy flow; same four unknown fields,
// constant symmetric matrix.
Eigen::SparseMatrix<double> assemble_hybrid_solid_matrix(const AssemblyContext &ctx,
                                                         const MetricSpec &metric,
                                                         const BiotConstants &biot,
                                                         const DarcyModel &darcy, double dt);
Eigen::VectorXd assemble_hybrid_solid_rhs(const AssemblyContext &ctx, const MetricSpec &metric,
                                          const std::vector<QuadPointState> &states,
                                          const BiotConstants &biot, const DarcyModel &darcy,
                                          double dt, const ProblemBCs &bcs, double t);
AssembledSystem assemble_hybrid_solid(const AssemblyContext &ctx, const MetricSpec &metric,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, const DarcyModel &darcy,
                                      double dt, const ProblemBCs &bcs, double t);

// Model-based solid with data-driven flow. Returns the Newton Jacobian and
// residual at the iterate x; the Jacobian is symmetric and, for a linear
// solid law, constant.
AssembledSystem assemble_hybrid_fluid(const AssemblyContext &ctx, const MetricSpec &metric,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, const SolidLawField &laws,
                                      double dt, const ProblemBCs &bcs, double t,
                                      const Eigen::VectorXd &x);

// Classic two-field u-p formulation with both laws model-based; Newton
// Jacobian and residual at x. Nonsymmetric. The beta multiplier DOFs must be
// constrained to zero by the caller.
AssembledSystem assemble_model_based(const AssemblyContext &ctx,
                                     const std::vector<QuadPointState> &states,
                                     const BiotConstants &biot, const SolidLawField &laws,
                                     const DarcyModel &darcy, double dt, const ProblemBCs &bcs,
                                     double t, const Eigen::VectorXd &x);

// Point-wise closure updates after a global solve: recover strain, pressure,
// pressure gradient, and the physical stress / flux of each quadrature point
// from the solution vector, and refresh the tracked porosity.
void closure_fully_dd(const AssemblyContext &ctx, const MetricSpec &metric,
                      const Eigen::VectorXd &x, std::vector<QuadPointState> &states);
void closure_hybrid_fluid(const AssemblyContext &ctx, const MetricSpec &metric,
                          const SolidLawField &laws, double dt, const Eigen::VectorXd &x,
                          std::vector<QuadPointState> &states);
void closure_hybrid_solid(const AssemblyContext &ctx, const MetricSpec &metric,
                          const DarcyModel &darcy, const Eigen::VectorXd &x,
                          std::vector<QuadPointState> &states);
void closure_model_based(const AssemblyContext &ctx, const SolidLawField &laws,
                         const DarcyModel &darcy, const Eigen::VectorXd &x,
                         std::vector<QuadPointState> &states);
void apply_closure(const AssemblyContext &ctx, const MetricSpec &metric,
                   const Formulation &formulation, double dt, const Eigen::VectorXd &x,
                   std::vector<QuadPointState> &states);

// Weak-form momentum and mass residuals re-evaluated with the closed
// physical states, reduced to free test-function DOFs and normalized by the
// magnitude of the contributing terms. Both should be at roundoff level for
// a converged step. The _max/_scale pairs carry the absolute values so a
// run can normalize a quiescent step against its own peak activity.
struct ConservationReport {
  double momentum_rel = 0.0;
  double mass_rel = 0.0;
  double momentum_max = 0.0;
  double momentum_scale = 0.0;
  double mass_max = 0.0;
  double mass_scale = 0.0;
};
ConservationReport check_conservation(const AssemblyContext &ctx,
                                      const std::vector<QuadPointState> &states,
                                      const BiotConstants &biot, double dt,
                                      const ProblemBCs &bcs, double t,
                                      const Eigen::VectorXd &x, FormulationKind kind);

// Dirichlet-reduced sparse LU solve. The sparsity pattern is analyzed once;
// repeated set_matrix calls with the same pattern only refactorize. The
// reduced matrix is equilibrated (symmetric row/column scaling by inverse
// square roots of the row and column infinity norms) before factorization
// and each solve finishes with one step of iterative refinement; the mass
// conservation rows sit many orders of magnitude below the momentum rows,
// and without this their solution error is far above their own scale.
class ReducedSolver {
 public:
  void set_matrix(const Eigen::SparseMatrix<double> &K, const DofMap &dofs);

  // Solves K_ff x_f = rhs_f - K_fc x_c and returns the full-length vector
  // with the constrained entries set to x_constrained.
  Eigen::VectorXd solve(const Eigen::VectorXd &rhs_full,
                        const Eigen::VectorXd &x_constrained) const;

  bool ready() const { return ready_; }

 private:
  const DofMap *dofs_ = nullptr;
  Eigen::SparseMatrix<double> K_ff_, K_fc_;
  Eigen::VectorXd row_scale_, col_scale_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
  bool ready_ = false;
};

// Convergence is judged on the Newton update, not the residual norm: the
// momentum and mass rows of the coupled system differ by many orders of
// magnitude, so a single residual norm tracks only the momentum block and
// goes blind to the mass equation that drives the transient. An iterate is
// accepted once ||dx|| <= stol * (scale + 1) over the free dofs, where scale
// is the largest solution norm this solver has produced; referencing the
// peak rather than the current iterate keeps decayed late-time states from
// demanding precision below the factorization floor. A residual drop by
// rtol relative to the start of the solve also counts as converged.
struct NewtonOptions {
  int max_iters = 30;
  double rtol = 1e-10;
  double stol = 1e-10;
};

struct SolveInfo {
  int iterations = 1;                  // Newton iterations (1 for linear solves)
  std::vector<double> residual_norms;  // free-DOF residual per Newton iteration
};

// One global minimization solve: a single factorized solve for the
// constant-operator formulations, a Newton loop for the others. Applies the
// matching closure to the states afterwards.
class GlobalSolver {
 public:
  GlobalSolver(const AssemblyContext &ctx, MetricSpec metric, BiotConstants biot,
               Formulation formulation, ProblemBCs bcs, double dt,
               NewtonOptions newton = {});

  SolveInfo solve(double t, Eigen::VectorXd &x, std::vector<QuadPointState> &states);

  // Assembled operator of the constant-matrix formulations (for diagnostics).
  const Eigen::SparseMatrix<double> &matrix();

  double dt() const { return dt_; }
  const AssemblyContext &context() const { return *ctx_; }
  const MetricSpec &metric() const { return metric_; }
  const BiotConstants &biot() const { return biot_; }
  const Formulation &formulation() const { return formulation_; }
  const ProblemBCs &bcs() const { return bcs_; }

 private:
  void ensure_constant_operator();

  const AssemblyContext *ctx_;
  MetricSpec metric_;
  BiotConstants biot_;
  Formulation formulation_;
  ProblemBCs bcs_;
  double dt_;
  NewtonOptions newton_;
  Eigen::SparseMatrix<double> K_;
  ReducedSolver reduced_;
  bool factorized_ = false;
  double x_scale_ = 0.0;  // largest free-dof solution norm produced so far
};

enum class SearchBackend { Tree, Brute };

// Datasets and search trees of the active phases. Members are parallel
// vectors; plain problems have one member per phase. When fluid_family is
// set, the member is re-selected every search from the point's porosity.
struct SearchSpace {
  std::vector<const PhaseDataset *> solid;
  std::vector<const KdTree *> solid_trees;
  std::vector<const PhaseDataset *> fluid;
  std::vector<const KdTree *> fluid_trees;
  const DatasetFamily *fluid_family = nullptr;
};

SearchSpace single_search_space(const PhaseDataset *solid, const KdTree *solid_tree,
                                const PhaseDataset *fluid, const KdTree *fluid_tree);
SearchSpace family_search_space(const PhaseDataset *solid, const KdTree *solid_tree,
                                const DatasetFamily &fluid_family,
                                const std::vector<KdTree> &fluid_trees);

struct LocalSearchResult {
  int change_count = 0;
  double solid_metric = 0.0;
  double fluid_metric = 0.0;
  double coupled_metric = 0.0;
};

// Reassigns every quadrature point to its exact nearest data point and
// accumulates the quadrature-weighted distance totals against the new
// assignments. change_count counts points whose assignment changed.
LocalSearchResult local_search(const AssemblyContext &ctx, const MetricSpec &metric,
                               const SearchSpace &space, FormulationKind kind,
                               std::vector<QuadPointState> &states,
                               SearchBackend backend = SearchBackend::Tree,
                               int n_threads = 1);

enum class InitMode { Random, Homogeneous, CarryOver };

struct InitSpec {
  InitMode mode = InitMode::Random;
  std::uint64_t seed = 0;
  // Homogeneous mode assigns the data point nearest these prototypes.
  std::optional<SolidPoint> solid_point;
  std::optional<FluidPoint> fluid_point;
};

void init_assignments(const MetricSpec &metric, const SearchSpace &space,
                      FormulationKind kind, const InitSpec &init,
                      std::vector<QuadPointState> &states);

struct FixedPointOptions {
  int max_iterations = 200;
  int oscillation_tolerance = 5;
  SearchBackend backend = SearchBackend::Tree;
  int n_threads = 1;
};

struct IterationRow {
  int step = 0;
  int iteration = 0;
  double solid_metric = 0.0;
  double fluid_metric = 0.0;
  double coupled_metric = 0.0;
  int change_count = 0;
};

struct StepReport {
  bool converged = false;
  bool oscillation_accepted = false;
  int iterations = 0;
  std::vector<IterationRow> rows;
  std::vector<SolveInfo> solves;
  double solve_seconds = 0.0;   // wall time in global solves
  double search_seconds = 0.0;  // wall time in nearest-neighbor searches
};

// Staggered fixed point for one time step: global solve, closure, local
// search, repeated until no assignment changes. Hitting the iteration cap
// with at most oscillation_tolerance lingering changes is accepted with a
// warning flag; more is a nonconvergence error.
StepReport run_time_step(GlobalSolver &solver, const SearchSpace &space,
                         std::vector<QuadPointState> &states, Eigen::VectorXd &x, int step,
                         double t, const FixedPointOptions &options = {});

}  // namespace ddporo
