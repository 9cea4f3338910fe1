// Time-loop orchestration with CSV/VTK/JSON outputs, the consolidation
// convergence study, and the nearest-neighbor timing study.
#include "ddporo/runner.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ddporo/kelvin.hpp"
#include "ddporo/parallel.hpp"
#include "ddporo/vtk.hpp"

namespace ddporo {

const std::array<const char *, kTerzaghiFields> kTerzaghiFieldNames = {
    "p", "dp_dy", "q_y", "u_y", "eps_yy", "sig_yy"};

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct FileCloser {
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::string &path) {
  FilePtr f(std::fopen(path.c_str(), "w"));
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

const std::array<const char *, 6> &component_names(int dim) {
  static const std::array<const char *, 6> two{"xx", "yy", "xy", "", "", ""};
  static const std::array<const char *, 6> three{"xx", "yy", "zz", "xy", "yz", "xz"};
  return dim == 2 ? two : three;
}

void write_step_vtk(const std::filesystem::path &dir, int step, const Problem &p,
                    const Eigen::VectorXd &x) {
  const Mesh &mesh = *p.mesh;
  const DofMap &dofs = *p.dofs;
  const AssemblyContext &ctx = *p.ctx;
  const int dim = mesh.dim;
  const int nn = mesh.n_nodes();
  const int ne = mesh.n_elems();
  const int ks = kelvin_size(dim);

  Eigen::MatrixXd u(nn, dim), bm(nn, dim), pr(nn, 1), bM(nn, 1);
  for (int i = 0; i < nn; ++i) {
    for (int c = 0; c < dim; ++c) {
      u(i, c) = x[dofs.dof(i, Field::U, c)];
      bm(i, c) = x[dofs.dof(i, Field::BetaMom, c)];
    }
    pr(i, 0) = x[dofs.dof(i, Field::P)];
    bM(i, 0) = x[dofs.dof(i, Field::BetaMass)];
  }

  Eigen::MatrixXd stress = Eigen::MatrixXd::Zero(ne, ks);
  Eigen::MatrixXd strain = Eigen::MatrixXd::Zero(ne, ks);
  Eigen::MatrixXd flux = Eigen::MatrixXd::Zero(ne, dim);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(ne);
  Eigen::VectorXd assigned = Eigen::VectorXd::Zero(ne);
  const bool family = p.space.fluid_family != nullptr;
  for (int e = 0; e < ne; ++e) {
    double wsum = 0.0;
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const int idx = ctx.qp_index(e, k);
      const QpData &q = ctx.qp[static_cast<std::size_t>(idx)];
      const QuadPointState &s = p.states[static_cast<std::size_t>(idx)];
      wsum += q.w;
      for (int c = 0; c < ks; ++c) {
        stress(e, c) += q.w * s.solid.stress[c];
        strain(e, c) += q.w * s.solid.strain[c];
      }
      flux.row(e) += q.w * s.fluid.flux.transpose();
      phi[e] += q.w * s.phi;
      if (family)
        assigned[e] +=
            q.w *
            *p.space.fluid_family->members[static_cast<std::size_t>(s.fluid_member)].label;
    }
    stress.row(e) /= wsum;
    strain.row(e) /= wsum;
    flux.row(e) /= wsum;
    phi[e] /= wsum;
    assigned[e] /= wsum;
  }

  std::vector<VtkField> point;
  point.push_back(VtkField{"displacement", u});
  point.push_back(VtkField{"pressure", pr});
  point.push_back(VtkField{"beta_momentum", bm});
  point.push_back(VtkField{"beta_mass", bM});
  std::vector<VtkField> cell;
  const auto &comp = component_names(dim);
  for (int c = 0; c < ks; ++c)
    cell.push_back(VtkField{std::string("effective_stress_") + comp[static_cast<std::size_t>(c)],
                            stress.col(c)});
  for (int c = 0; c < ks; ++c)
    cell.push_back(
        VtkField{std::string("strain_") + comp[static_cast<std::size_t>(c)], strain.col(c)});
  cell.push_back(VtkField{"flux", flux});
  if (family) {
    cell.push_back(VtkField{"porosity", phi});
    cell.push_back(VtkField{"assigned_porosity", assigned});
  }

  char name[32];
  std::snprintf(name, sizeof name, "step_%04d.vtk", step);
  write_vtk((dir / name).string(), mesh, point, cell);
}

void write_iterations_csv(const std::string &path, const std::vector<StepReport> &steps) {
  FilePtr f = open_for_write(path);
  std::fprintf(f.get(), "step,iteration,solid_metric,fluid_metric,coupled_metric,change_count\n");
  for (const StepReport &r : steps)
    for (const IterationRow &row : r.rows)
      std::fprintf(f.get(), "%d,%d,%.17g,%.17g,%.17g,%d\n", row.step, row.iteration,
                   row.solid_metric, row.fluid_metric, row.coupled_metric, row.change_count);
}

void write_table_csv(const std::string &path, const std::vector<std::string> &columns,
                     const std::vector<std::vector<double>> &rows) {
  FilePtr f = open_for_write(path);
  for (std::size_t i = 0; i < columns.size(); ++i)
    std::fprintf(f.get(), "%s%s", i ? "," : "", columns[i].c_str());
  std::fprintf(f.get(), "\n");
  for (const std::vector<double> &row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      std::fprintf(f.get(), "%s%.17g", i ? "," : "", row[i]);
    std::fprintf(f.get(), "\n");
  }
}

void write_summary_json(const std::string &path, const Problem &p, const RunResult &r,
                        int n_threads) {
  nlohmann::json j;
  j["problem"] = p.config.problem;
  j["formulation"] = p.config.formulation;
  j["backend"] = p.config.run.backend;
  j["threads"] = n_threads;
  j["seed"] = p.config.seed;
  j["dt"] = p.dt;
  j["n_steps"] = p.n_steps;
  int iters = 0;
  for (const StepReport &s : r.steps) iters += s.iterations;
  j["iterations_total"] = iters;
  j["oscillation_accepted"] = r.oscillation_accepted;
  j["wall_seconds"] = r.timings.total;
  j["timings"] = {{"build_seconds", r.timings.build},
                  {"solve_seconds", r.timings.solve},
                  {"search_seconds", r.timings.search}};
  if (p.formulation.kind != FormulationKind::ModelBased && !r.steps.empty() &&
      !r.steps.back().rows.empty()) {
    const IterationRow &last = r.steps.back().rows.back();
    j["final_metric"] = {{"solid", last.solid_metric},
                         {"fluid", last.fluid_metric},
                         {"coupled", last.coupled_metric}};
  }
  j["errors"] = r.oracle_errors;
  j["conservation"] = {{"momentum_rel", r.conservation.momentum_rel},
                       {"mass_rel", r.conservation.mass_rel}};
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
}

}  // namespace

TerzaghiParams terzaghi_params_from(const ProblemConfig &config) {
  TerzaghiParams tp;
  tp.E = config.material.E;
  tp.b = config.material.B;
  // M <= 0 encodes incompressible constituents; a huge storage modulus
  // reproduces the 1/M = 0 limit in the series coefficients.
  tp.M = config.material.M > 0.0 ? config.material.M : 1e30;
  tp.k = config.material.k / config.material.mu_f;
  tp.H = 1.0;
  tp.t_bar_y = config.loads.traction;
  return tp;
}

RelaxationParams relaxation_params_from(const ProblemConfig &config) {
  RelaxationParams rp;
  const double E = config.material.E;
  const double nu = config.material.nu;
  rp.G = E / (2.0 * (1.0 + nu));
  rp.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  rp.H = 10.0;
  rp.k = config.material.k / config.material.mu_f;
  rp.u_dot = config.loads.u_rate;
  rp.t_ramp = config.loads.t_hold > 0.0 ? config.loads.t_hold : config.time.t_end;
  return rp;
}

std::array<std::vector<double>, kTerzaghiFields> terzaghi_field_samples(
    const AssemblyContext &ctx, const Eigen::VectorXd &x,
    const std::vector<QuadPointState> &states, double B) {
  std::array<std::vector<double>, kTerzaghiFields> out;
  for (auto &v : out) v.reserve(static_cast<std::size_t>(ctx.n_qp()));
  const Mesh &mesh = *ctx.mesh;
  for (int e = 0; e < ctx.n_elems(); ++e) {
    const Eigen::MatrixXd u_elem = gather_field(mesh, *ctx.dofs, x, e, Field::U, ctx.dim());
    for (int k = 0; k < ctx.n_qp_per_elem(); ++k) {
      const int idx = ctx.qp_index(e, k);
      const QpData &q = ctx.qp[static_cast<std::size_t>(idx)];
      const QuadPointState &s = states[static_cast<std::size_t>(idx)];
      out[0].push_back(s.p);
      out[1].push_back(s.fluid.grad_p[1]);
      out[2].push_back(s.fluid.flux[1]);
      out[3].push_back(q.N.dot(u_elem.col(1)));
      out[4].push_back(s.solid.strain[1]);
      out[5].push_back(s.solid.stress[1] - B * s.p);
    }
  }
  return out;
}

std::array<std::vector<double>, kTerzaghiFields> terzaghi_exact_samples(
    const AssemblyContext &ctx, double t, const TerzaghiParams &params) {
  std::array<std::vector<double>, kTerzaghiFields> out;
  for (auto &v : out) v.reserve(static_cast<std::size_t>(ctx.n_qp()));
  for (const QpData &q : ctx.qp) {
    const double y = q.x[1];
    out[0].push_back(terzaghi_pressure(y, t, params));
    out[1].push_back(terzaghi_pressure_grad(y, t, params));
    out[2].push_back(terzaghi_flux(y, t, params));
    out[3].push_back(terzaghi_displacement(y, t, params));
    out[4].push_back(terzaghi_strain(y, t, params));
    out[5].push_back(terzaghi_total_stress(y, t, params));
  }
  return out;
}

double mean_total_stress(const AssemblyContext &ctx,
                         const std::vector<QuadPointState> &states, double B, int comp) {
  double num = 0.0;
  double den = 0.0;
  const bool diagonal = comp < ctx.dim();  // Kelvin order lists the diagonal first
  for (int i = 0; i < ctx.n_qp(); ++i) {
    const QpData &q = ctx.qp[static_cast<std::size_t>(i)];
    const QuadPointState &s = states[static_cast<std::size_t>(i)];
    double v = s.solid.stress[comp];
    if (diagonal) v -= B * s.p;
    num += q.w * v;
    den += q.w;
  }
  return num / den;
}

RunResult run_problem(Problem &p, bool write_outputs, double setup_seconds,
                      const StepCallback &callback) {
  const auto t_start = Clock::now();
  RunResult result;
  const ProblemConfig &config = p.config;
  const FormulationKind kind = p.formulation.kind;

  GlobalSolver solver(*p.ctx, p.metric, p.biot, p.formulation, p.bcs, p.dt);
  if (kind != FormulationKind::ModelBased)
    init_assignments(p.metric, p.space, kind, p.init, p.states);
  result.timings.build = setup_seconds + seconds_since(t_start);

  FixedPointOptions fp;
  fp.max_iterations = config.run.fixed_point_max_iters;
  fp.oscillation_tolerance = config.run.oscillation_tolerance;
  fp.backend = parse_backend(config.run.backend);
  fp.n_threads = resolve_thread_count(config.run.threads);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(p.dofs->n_dofs());

  const bool is_terzaghi = config.problem == "terzaghi";
  const bool is_relaxation = config.problem == "relaxation";
  const bool is_poisson = config.problem == "poisson_cube";
  TerzaghiParams terzaghi;
  RelaxationParams relaxation;
  std::array<std::vector<ErrValue>, kTerzaghiFields> terzaghi_errs;
  std::vector<ErrValue> poisson_errs;
  std::vector<double> traction_dd, traction_ref;
  if (is_terzaghi) {
    terzaghi = terzaghi_params_from(config);
    result.table_columns = {"step", "t"};
    for (const char *name : kTerzaghiFieldNames)
      result.table_columns.push_back(std::string("err_") + name);
  } else if (is_relaxation) {
    relaxation = relaxation_params_from(config);
    result.table_columns = {"step", "t", "traction", "traction_exact", "lateral_stress"};
  } else if (is_poisson) {
    result.table_columns = {"step", "t", "err_p"};
  }

  std::filesystem::path out_dir;
  if (write_outputs) {
    out_dir = config.run.out_dir;
    std::filesystem::create_directories(out_dir);
    save_config(config, (out_dir / "config.json").string());
  }

  for (int step = 1; step <= p.n_steps; ++step) {
    const double t = step * p.dt;
    StepReport report = run_time_step(solver, p.space, p.states, x, step, t, fp);
    if (report.oscillation_accepted) {
      result.oscillation_accepted = true;
      std::fprintf(stderr, "warning: step %d accepted with %d assignments still changing\n",
                   step, report.rows.empty() ? 0 : report.rows.back().change_count);
    }
    result.timings.solve += report.solve_seconds;
    result.timings.search += report.search_seconds;

    if (is_terzaghi) {
      const auto dd = terzaghi_field_samples(*p.ctx, x, p.states, config.material.B);
      const auto exact = terzaghi_exact_samples(*p.ctx, t, terzaghi);
      std::vector<double> row{static_cast<double>(step), t};
      for (int f = 0; f < kTerzaghiFields; ++f) {
        const ErrValue e = err_space(dd[static_cast<std::size_t>(f)],
                                     exact[static_cast<std::size_t>(f)], *p.mesh, p.ctx->quad);
        terzaghi_errs[static_cast<std::size_t>(f)].push_back(e);
        row.push_back(e.value);
      }
      result.table_rows.push_back(std::move(row));
    } else if (is_relaxation) {
      const double dd = mean_total_stress(*p.ctx, p.states, config.material.B, 2);
      const double exact = relaxation_traction(t, relaxation);
      const double lateral = mean_total_stress(*p.ctx, p.states, config.material.B, 0);
      traction_dd.push_back(dd);
      traction_ref.push_back(exact);
      result.table_rows.push_back({static_cast<double>(step), t, dd, exact, lateral});
    } else if (is_poisson) {
      std::vector<double> dd, exact;
      dd.reserve(static_cast<std::size_t>(p.ctx->n_qp()));
      exact.reserve(static_cast<std::size_t>(p.ctx->n_qp()));
      const double kappa = config.material.k / config.material.mu_f;
      for (int i = 0; i < p.ctx->n_qp(); ++i) {
        const QpData &q = p.ctx->qp[static_cast<std::size_t>(i)];
        dd.push_back(p.states[static_cast<std::size_t>(i)].p);
        exact.push_back(poisson_manufactured(q.x[0], q.x[1], q.x[2], kappa).p);
      }
      const ErrValue e = err_space(dd, exact, *p.mesh, p.ctx->quad);
      poisson_errs.push_back(e);
      result.table_rows.push_back({static_cast<double>(step), t, e.value});
    }

    const bool last = step == p.n_steps;
    {
      const ConservationReport rep =
          check_conservation(*p.ctx, p.states, p.biot, p.dt, p.bcs, t, x, kind);
      ConservationReport &agg = result.conservation;
      agg.momentum_max = std::max(agg.momentum_max, rep.momentum_max);
      agg.momentum_scale = std::max(agg.momentum_scale, rep.momentum_scale);
      agg.mass_max = std::max(agg.mass_max, rep.mass_max);
      agg.mass_scale = std::max(agg.mass_scale, rep.mass_scale);
      agg.momentum_rel = agg.momentum_scale > 0.0 ? agg.momentum_max / agg.momentum_scale
                                                  : agg.momentum_max;
      agg.mass_rel = agg.mass_scale > 0.0 ? agg.mass_max / agg.mass_scale : agg.mass_max;
    }
    if (callback) callback(step, t, x, p.states, report);
    if (write_outputs && config.run.vtk_every > 0 &&
        (step % config.run.vtk_every == 0 || last))
      write_step_vtk(out_dir, step, p, x);
    advance_history(p.states);
    result.steps.push_back(std::move(report));
  }

  result.x = x;
  const double t_end = p.n_steps * p.dt;
  if (is_terzaghi) {
    for (int f = 0; f < kTerzaghiFields; ++f)
      result.oracle_errors[kTerzaghiFieldNames[static_cast<std::size_t>(f)]] =
          err_space_time(terzaghi_errs[static_cast<std::size_t>(f)], p.dt, t_end).value;
  } else if (is_relaxation) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < traction_dd.size(); ++i) {
      num += (traction_dd[i] - traction_ref[i]) * (traction_dd[i] - traction_ref[i]);
      den += traction_ref[i] * traction_ref[i];
    }
    result.oracle_errors["traction"] = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  } else if (is_poisson) {
    result.oracle_errors["p"] = err_space_time(poisson_errs, p.dt, t_end).value;
  }
  result.timings.total = setup_seconds + seconds_since(t_start);

  if (write_outputs) {
    write_iterations_csv((out_dir / "iterations.csv").string(), result.steps);
    if (!result.table_columns.empty())
      write_table_csv((out_dir / "errors.csv").string(), result.table_columns,
                      result.table_rows);
    write_summary_json((out_dir / "summary.json").string(), p, result, fp.n_threads);
  }
  return result;
}

RunResult run_config(const ProblemConfig &config, bool write_outputs,
                     const StepCallback &callback) {
  const auto t0 = Clock::now();
  std::unique_ptr<Problem> p = build_problem(config);
  const double setup = seconds_since(t0);
  return run_problem(*p, write_outputs, setup, callback);
}

std::vector<ConvergenceRow> convergence_study(const ProblemConfig &base,
                                              const std::vector<int> &sizes) {
  if (base.problem != "terzaghi")
    throw std::invalid_argument("the convergence study is defined for the terzaghi problem");

  ProblemConfig twin_cfg = base;
  twin_cfg.formulation = "model_based";
  std::unique_ptr<Problem> twin = build_problem(twin_cfg);
  std::vector<std::array<std::vector<double>, kTerzaghiFields>> fem_fields;
  fem_fields.reserve(static_cast<std::size_t>(twin->n_steps));
  const double B = base.material.B;
  run_problem(*twin, false, 0.0,
              [&](int, double, const Eigen::VectorXd &x,
                  const std::vector<QuadPointState> &states, const StepReport &) {
                fem_fields.push_back(terzaghi_field_samples(*twin->ctx, x, states, B));
              });

  const TerzaghiParams params = terzaghi_params_from(base);
  std::vector<std::array<std::vector<double>, kTerzaghiFields>> exact_fields;
  exact_fields.reserve(static_cast<std::size_t>(twin->n_steps));
  for (int step = 1; step <= twin->n_steps; ++step)
    exact_fields.push_back(terzaghi_exact_samples(*twin->ctx, step * twin->dt, params));

  std::vector<ConvergenceRow> rows;
  rows.reserve(sizes.size());
  for (int size : sizes) {
    ProblemConfig cfg = base;
    for (AxisConfig &a : cfg.data.solid_axes)
      if (a.count > 1) a.count = size;
    for (AxisConfig &a : cfg.data.fluid_axes)
      if (a.count > 1) a.count = size;
    std::unique_ptr<Problem> prob = build_problem(cfg);
    std::array<std::vector<ErrValue>, kTerzaghiFields> vs_exact, vs_fem;
    run_problem(*prob, false, 0.0,
                [&](int step, double, const Eigen::VectorXd &x,
                    const std::vector<QuadPointState> &states, const StepReport &) {
                  const auto dd = terzaghi_field_samples(*prob->ctx, x, states, B);
                  const std::size_t s = static_cast<std::size_t>(step - 1);
                  for (std::size_t f = 0; f < static_cast<std::size_t>(kTerzaghiFields); ++f) {
                    vs_exact[f].push_back(
                        err_space(dd[f], exact_fields[s][f], *prob->mesh, prob->ctx->quad));
                    vs_fem[f].push_back(
                        err_space(dd[f], fem_fields[s][f], *prob->mesh, prob->ctx->quad));
                  }
                });
    ConvergenceRow row;
    row.n_points = size;
    const double t_end = prob->n_steps * prob->dt;
    for (std::size_t f = 0; f < static_cast<std::size_t>(kTerzaghiFields); ++f) {
      row.err_exact[f] = err_space_time(vs_exact[f], prob->dt, t_end).value;
      row.err_fem[f] = err_space_time(vs_fem[f], prob->dt, t_end).value;
    }
    rows.push_back(row);
  }
  return rows;
}

void save_convergence_csv(const std::vector<ConvergenceRow> &rows, const std::string &path) {
  FilePtr f = open_for_write(path);
  std::fprintf(f.get(), "n_points");
  for (const char *name : kTerzaghiFieldNames) std::fprintf(f.get(), ",%s_vs_exact", name);
  for (const char *name : kTerzaghiFieldNames) std::fprintf(f.get(), ",%s_vs_fem", name);
  std::fprintf(f.get(), "\n");
  for (const ConvergenceRow &row : rows) {
    std::fprintf(f.get(), "%d", row.n_points);
    for (double v : row.err_exact) std::fprintf(f.get(), ",%.17g", v);
    for (double v : row.err_fem) std::fprintf(f.get(), ",%.17g", v);
    std::fprintf(f.get(), "\n");
  }
}

std::vector<TimingRow> timing_study(const ProblemConfig &base,
                                    const std::vector<int> &axis_counts, int repeats) {
  if (base.problem != "poisson_cube")
    throw std::invalid_argument("the timing study is defined for the poisson_cube problem");
  std::vector<TimingRow> rows;
  for (int count : axis_counts) {
    ProblemConfig size_cfg = base;
    for (AxisConfig &a : size_cfg.data.fluid_axes) a.count = count;
    for (int rep = 0; rep < repeats; ++rep) {
      for (const char *backend : {"kdtree", "brute_force"}) {
        ProblemConfig cfg = size_cfg;
        cfg.seed = base.seed + static_cast<std::uint64_t>(rep);
        cfg.run.backend = backend;
        cfg.run.vtk_every = 0;
        std::unique_ptr<Problem> prob = build_problem(cfg);
        TimingRow row;
        row.n_points = static_cast<int>(prob->fluid_data.size());
        row.backend = backend;
        row.repeat = rep;
        if (cfg.run.backend == "kdtree") {
          const auto t0 = Clock::now();
          const KdTree rebuilt = build_dataset_tree(prob->fluid_data);
          row.build_seconds = seconds_since(t0);
          (void)rebuilt;
        }
        const RunResult res = run_problem(*prob, false);
        row.total_seconds = row.build_seconds + res.timings.search;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void save_timing_csv(const std::vector<TimingRow> &rows, const std::string &path) {
  FilePtr f = open_for_write(path);
  std::fprintf(f.get(), "n_points,backend,repeat,build_seconds,total_seconds\n");
  for (const TimingRow &row : rows)
    std::fprintf(f.get(), "%d,%s,%d,%.17g,%.17g\n", row.n_points, row.backend.c_str(),
                 row.repeat, row.build_seconds, row.total_seconds);
}

void save_oracle_csv(const ProblemConfig &config, const std::string &path) {
  FilePtr f = open_for_write(path);
  const int n_steps =
      std::max(1, static_cast<int>(std::llround(config.time.t_end / config.time.dt)));
  if (config.problem == "terzaghi") {
    const TerzaghiParams tp = terzaghi_params_from(config);
    const int ny = 101;
    std::fprintf(f.get(), "t,y,p,dp_dy,q_y,u_y,eps_yy,sig_yy\n");
    for (int step = 1; step <= n_steps; ++step) {
      const double t = step * config.time.dt;
      for (int i = 0; i < ny; ++i) {
        const double y = tp.H * i / static_cast<double>(ny - 1);
        std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t, y,
                     terzaghi_pressure(y, t, tp), terzaghi_pressure_grad(y, t, tp),
                     terzaghi_flux(y, t, tp), terzaghi_displacement(y, t, tp),
                     terzaghi_strain(y, t, tp), terzaghi_total_stress(y, t, tp));
      }
    }
  } else if (config.problem == "relaxation") {
    const RelaxationParams rp = relaxation_params_from(config);
    std::fprintf(f.get(), "t,traction\n");
    for (int step = 1; step <= n_steps; ++step) {
      const double t = step * config.time.dt;
      std::fprintf(f.get(), "%.17g,%.17g\n", t, relaxation_traction(t, rp));
    }
  } else if (config.problem == "poisson_cube") {
    const double kappa = config.material.k / config.material.mu_f;
    const int n = 11;
    std::fprintf(f.get(), "x,y,z,p,dp_dx,dp_dy,dp_dz,source\n");
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj)
        for (int kk = 0; kk < n; ++kk) {
          const double xx = -0.5 + i / static_cast<double>(n - 1);
          const double yy = -0.5 + jj / static_cast<double>(n - 1);
          const double zz = -0.5 + kk / static_cast<double>(n - 1);
          const PoissonManufactured m = poisson_manufactured(xx, yy, zz, kappa);
          std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", xx, yy,
                       zz, m.p, m.grad_p[0], m.grad_p[1], m.grad_p[2], m.source);
        }
  } else {
    throw std::invalid_argument("no closed-form reference for problem '" + config.problem +
                                "'");
  }
}

}  // namespace ddporo
