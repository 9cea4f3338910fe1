// Command-line driver: run problems, generate datasets, and produce the
// convergence / timing / reference-solution tables.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddporo/runner.hpp"

namespace {

namespace fs = std::filesystem;

// Options shared by every subcommand. A configuration comes from --config or
// from the defaults of --problem; --seed / --backend / --threads override it.
struct Common {
  std::string config_path, problem, backend, out;
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::Option *config_opt = nullptr;
  CLI::Option *problem_opt = nullptr;
  CLI::Option *seed_opt = nullptr;
  CLI::Option *backend_opt = nullptr;
  CLI::Option *threads_opt = nullptr;
  CLI::Option *out_opt = nullptr;

  void attach(CLI::App *sub, const char *out_help) {
    config_opt = sub->add_option("--config", config_path, "JSON run configuration file");
    problem_opt = sub->add_option(
        "--problem", problem,
        "built-in problem: terzaghi, relaxation, footing, plate_hole, berea_like, "
        "poisson_cube");
    config_opt->excludes(problem_opt);
    seed_opt = sub->add_option("--seed", seed, "override the configured seed");
    backend_opt = sub->add_option("--backend", backend, "search backend: kdtree | brute_force");
    threads_opt = sub->add_option("--threads", threads,
                                  "search threads (0: DDPORO_THREADS environment variable)");
    out_opt = sub->add_option("--out", out, out_help);
  }

  ddporo::ProblemConfig resolve(const std::string &fallback_problem = "") const {
    ddporo::ProblemConfig cfg;
    if (config_opt->count())
      cfg = ddporo::load_config(config_path);
    else if (problem_opt->count())
      cfg = ddporo::default_config(problem);
    else if (!fallback_problem.empty())
      cfg = ddporo::default_config(fallback_problem);
    else
      throw std::runtime_error("either --config or --problem is required");
    if (seed_opt->count()) cfg.seed = seed;
    if (backend_opt->count()) cfg.run.backend = backend;
    if (threads_opt->count()) cfg.run.threads = threads;
    ddporo::parse_backend(cfg.run.backend);  // reject unknown names early
    return cfg;
  }
};

void run_command(const Common &c) {
  ddporo::ProblemConfig cfg = c.resolve();
  if (c.out_opt->count()) cfg.run.out_dir = c.out;
  const ddporo::RunResult res = ddporo::run_config(cfg, true);
  int iterations = 0;
  for (const ddporo::StepReport &s : res.steps) iterations += s.iterations;
  std::printf("%s (%s): %zu steps, %d fixed-point iterations, %.3f s "
              "(build %.3f, solve %.3f, search %.3f)\n",
              cfg.problem.c_str(), cfg.formulation.c_str(), res.steps.size(), iterations,
              res.timings.total, res.timings.build, res.timings.solve, res.timings.search);
  for (const auto &[name, value] : res.oracle_errors)
    std::printf("  Err(%s) = %.6g\n", name.c_str(), value);
  std::printf("outputs written to %s\n", cfg.run.out_dir.c_str());
}

void gen_data_command(const Common &c) {
  const ddporo::ProblemConfig cfg = c.resolve();
  const fs::path dir = c.out_opt->count() ? c.out : std::string("data");
  fs::create_directories(dir);
  const ddporo::GeneratedData g = ddporo::generate_datasets(cfg);
  if (g.has_solid) {
    const std::string path = (dir / "solid.csv").string();
    ddporo::save_dataset(g.solid, path);
    std::printf("wrote %s (%d points)\n", path.c_str(), g.solid.size());
  }
  if (g.has_fluid) {
    const std::string path = (dir / "fluid.csv").string();
    ddporo::save_dataset(g.fluid, path);
    std::printf("wrote %s (%d points)\n", path.c_str(), g.fluid.size());
  }
  if (g.has_family) {
    for (std::size_t i = 0; i < g.family.members.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "fluid_%03zu.csv", i);
      ddporo::save_dataset(g.family.members[i], (dir / name).string());
    }
    std::printf("wrote %zu family members to %s\n", g.family.members.size(),
                dir.string().c_str());
  }
}

void convergence_command(const Common &c, const std::vector<int> &sizes) {
  const ddporo::ProblemConfig cfg = c.resolve("terzaghi");
  const std::vector<ddporo::ConvergenceRow> rows = ddporo::convergence_study(cfg, sizes);
  const std::string path = c.out_opt->count() ? c.out : std::string("convergence.csv");
  ddporo::save_convergence_csv(rows, path);
  std::printf("%8s", "N");
  for (const char *name : ddporo::kTerzaghiFieldNames) std::printf("  %10s", name);
  std::printf("   (error vs the model-based twin)\n");
  for (const ddporo::ConvergenceRow &row : rows) {
    std::printf("%8d", row.n_points);
    for (double v : row.err_fem) std::printf("  %10.3e", v);
    std::printf("\n");
  }
  std::printf("wrote %s\n", path.c_str());
}

void timing_command(const Common &c, const std::vector<int> &counts, int repeats) {
  const ddporo::ProblemConfig cfg = c.resolve("poisson_cube");
  const std::vector<ddporo::TimingRow> rows = ddporo::timing_study(cfg, counts, repeats);
  const std::string path = c.out_opt->count() ? c.out : std::string("timing.csv");
  ddporo::save_timing_csv(rows, path);
  std::printf("%10s  %-12s  %6s  %12s  %12s\n", "N", "backend", "repeat", "build (s)",
              "total (s)");
  for (const ddporo::TimingRow &row : rows)
    std::printf("%10d  %-12s  %6d  %12.4g  %12.4g\n", row.n_points, row.backend.c_str(),
                row.repeat, row.build_seconds, row.total_seconds);
  std::printf("wrote %s\n", path.c_str());
}

void oracle_dump_command(const Common &c) {
  const ddporo::ProblemConfig cfg = c.resolve();
  const std::string path = c.out_opt->count() ? c.out : std::string("oracle.csv");
  ddporo::save_oracle_csv(cfg, path);
  std::printf("wrote %s\n", path.c_str());
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Data-driven poroelasticity solver"};
  app.require_subcommand(1);

  CLI::App *run = app.add_subcommand("run", "run a problem and write its outputs");
  Common run_opts;
  run_opts.attach(run, "output directory (overrides the configured one)");
  run->callback([&run_opts]() { run_command(run_opts); });

  CLI::App *gen = app.add_subcommand("gen-data", "sample datasets from the reference laws");
  Common gen_opts;
  gen_opts.attach(gen, "output directory (default: data)");
  gen->callback([&gen_opts]() { gen_data_command(gen_opts); });

  CLI::App *conv = app.add_subcommand(
      "convergence", "dataset-size convergence of the consolidation benchmark");
  Common conv_opts;
  conv_opts.attach(conv, "output CSV (default: convergence.csv)");
  std::vector<int> sizes{129, 513, 2049, 8193, 16385};
  conv->add_option("--sizes", sizes, "dataset sizes per sampling axis");
  conv->callback([&conv_opts, &sizes]() { convergence_command(conv_opts, sizes); });

  CLI::App *timing = app.add_subcommand(
      "timing", "nearest-neighbor search timing on the manufactured diffusion cube");
  Common timing_opts;
  timing_opts.attach(timing, "output CSV (default: timing.csv)");
  std::vector<int> counts{2, 4, 8, 16, 32, 64};
  int repeats = 3;
  timing->add_option("--counts", counts, "grid points per gradient axis");
  timing->add_option("--repeats", repeats, "seeded repeats per size");
  timing->callback([&timing_opts, &counts, &repeats]() {
    timing_command(timing_opts, counts, repeats);
  });

  CLI::App *oracle = app.add_subcommand("oracle-dump", "closed-form reference solution CSV");
  Common oracle_opts;
  oracle_opts.attach(oracle, "output CSV (default: oracle.csv)");
  oracle->callback([&oracle_opts]() { oracle_dump_command(oracle_opts); });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
