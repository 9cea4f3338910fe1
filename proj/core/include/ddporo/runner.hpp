// Full-run orchestration: the time loop with file outputs and oracle error
// tracking, the consolidation convergence study, and the nearest-neighbor
// timing study.
#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddporo/analytic.hpp"
#include "ddporo/problems.hpp"
#include "ddporo/solver.hpp"

namespace ddporo {

// Wall-clock totals in seconds.
struct PhaseTimings {
  double build = 0.0;   // problem and search-structure construction
  double solve = 0.0;   // global solves
  double search = 0.0;  // nearest-neighbor searches
  double total = 0.0;
};

// Called after every converged step with the end-of-step solution and closed
// states (history not yet advanced).
using StepCallback = std::function<void(int step, double t, const Eigen::VectorXd &x,
                                        const std::vector<QuadPointState> &states,
                                        const StepReport &report)>;

struct RunResult {
  std::vector<StepReport> steps;
  Eigen::VectorXd x;  // end-of-run solution vector
  PhaseTimings timings;
  // Space-time errors against the closed-form reference, when the problem
  // has one: the six monitored consolidation fields for terzaghi, the
  // traction history for relaxation, the pressure field for poisson_cube.
  std::map<std::string, double> oracle_errors;
  // Per-step oracle table (written to errors.csv); empty without an oracle.
  std::vector<std::string> table_columns;
  std::vector<std::vector<double>> table_rows;
  // Conservation residuals aggregated over the run: the largest per-step
  // residual normalized by the largest per-step term scale, so quiescent
  // late steps are judged against the run's peak activity.
  ConservationReport conservation;
  bool oscillation_accepted = false;  // any step ended via the tolerance
};

// The consolidation fields monitored by the studies, in column order:
// p, dp/dy, q_y, u_y, eps_yy, total sigma_yy.
inline constexpr int kTerzaghiFields = 6;
extern const std::array<const char *, kTerzaghiFields> kTerzaghiFieldNames;

// Samples of the monitored fields at every quadrature point (element-major)
// from the solution vector and closed states.
std::array<std::vector<double>, kTerzaghiFields> terzaghi_field_samples(
    const AssemblyContext &ctx, const Eigen::VectorXd &x,
    const std::vector<QuadPointState> &states, double B);

// The same fields from the closed-form series at time t.
std::array<std::vector<double>, kTerzaghiFields> terzaghi_exact_samples(
    const AssemblyContext &ctx, double t, const TerzaghiParams &params);

// Oracle parameter structs derived from a run configuration.
TerzaghiParams terzaghi_params_from(const ProblemConfig &config);
RelaxationParams relaxation_params_from(const ProblemConfig &config);

// Quadrature-averaged total stress (Kelvin component `comp`) of the closed
// states; the traction functional of the relaxation run.
double mean_total_stress(const AssemblyContext &ctx,
                         const std::vector<QuadPointState> &states, double B, int comp);

// Runs a built problem start to finish. With write_outputs set, writes the
// per-step VTK files, iterations.csv, errors.csv (oracle problems),
// summary.json, and the effective config into config.run.out_dir.
// setup_seconds is added to the reported build phase.
RunResult run_problem(Problem &problem, bool write_outputs, double setup_seconds = 0.0,
                      const StepCallback &callback = {});

// Builds the configured problem and runs it; the build phase timing covers
// the construction.
RunResult run_config(const ProblemConfig &config, bool write_outputs,
                     const StepCallback &callback = {});

// Space-time errors of the consolidation run against the series and against
// the model-based twin on the same mesh, one row per dataset size (every
// sampling axis with more than one point is resized to `size`).
struct ConvergenceRow {
  int n_points = 0;
  std::array<double, kTerzaghiFields> err_exact{};
  std::array<double, kTerzaghiFields> err_fem{};
};
std::vector<ConvergenceRow> convergence_study(const ProblemConfig &base,
                                              const std::vector<int> &sizes);
void save_convergence_csv(const std::vector<ConvergenceRow> &rows, const std::string &path);

// Search timing on the manufactured diffusion cube: one row per (dataset
// size, backend, repeat), with repeats seeded seed + repeat. Build time is
// the tree construction (zero for brute force); total adds the in-run
// search time.
struct TimingRow {
  int n_points = 0;
  std::string backend;
  int repeat = 0;
  double build_seconds = 0.0;
  double total_seconds = 0.0;
};
std::vector<TimingRow> timing_study(const ProblemConfig &base,
                                    const std::vector<int> &axis_counts, int repeats);
void save_timing_csv(const std::vector<TimingRow> &rows, const std::string &path);

// Closed-form reference dump (17 significant digits) for the problems that
// have one; throws std::invalid_argument otherwise.
void save_oracle_csv(const ProblemConfig &config, const std::string &path);

}  // namespace ddporo
