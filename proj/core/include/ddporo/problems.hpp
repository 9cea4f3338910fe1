// Benchmark problem definitions: the JSON-backed run configuration, dataset
// generation for each benchmark, and construction of ready-to-run problem
// instances (mesh, constraints, metric, datasets, search space).
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ddporo/constitutive.hpp"
#include "ddporo/dataset.hpp"
#include "ddporo/dofmap.hpp"
#include "ddporo/kdtree.hpp"
#include "ddporo/mesh.hpp"
#include "ddporo/solver.hpp"

namespace ddporo {

// One sampling axis of a dataset grid; count == 1 pins the axis at min.
struct AxisConfig {
  double min = 0.0;
  double max = 0.0;
  int count = 1;
};

struct MeshConfig {
  int nx = 1;
  int ny = 1;
  int nz = 1;  // 3D problems only
};

struct TimeConfig {
  double dt = 0.1;   // s
  double t_end = 10.0;  // s; the number of steps is round(t_end / dt)
};

// Material constants in Pa / m^2 / Pa.s. `M <= 0` means incompressible
// constituents (1/M = 0). kappa and G are the blend-law moduli and are only
// read for the plate_hole problem.
struct MaterialConfig {
  double E = 0.0;
  double nu = 0.0;
  double k = 0.0;     // intrinsic permeability, m^2
  double mu_f = 1e-3;  // fluid viscosity, Pa.s
  double B = 1.0;
  double M = 0.0;     // Biot modulus, Pa (<= 0: incompressible)
  double kappa = 0.0;  // blend bulk-like modulus, Pa
  double G = 0.0;      // blend shear modulus, Pa
};

// Distance weights. The solid weight is an isotropic Hooke tensor except for
// kind "blend_point", which uses the blend-law tangent at `blend_eps`
// (tensor strain components). C_f is the isotropic fluid weight in
// m^2/(Pa.s); the time-step factor multiplying the fluid distance is always
// the run's dt.
struct MetricConfig {
  std::string solid = "hooke";  // hooke | blend_point
  double E = 0.0;
  double nu = 0.0;
  std::vector<double> blend_eps;
  double C_f = 0.0;
};

// Synthetic porosity-labeled dataset family for the heterogeneous rock run.
// `csv_path`, when set, replaces the synthetic porosity-permeability map with
// an external table (one "porosity,permeability" row per label).
struct BereaConfig {
  int n_labels = 84;
  double phi_min = 0.22;
  double phi_max = 0.28;
  double k_ref = 1.5e-23;  // permeability at the mean porosity, m^2
  double phi_mean = 0.25;
  double phi_std = 0.02;
  std::string csv_path;
};

// Dataset specification: either sampling grids over the input phase (strain
// components for the solid, pressure-gradient components for the fluid) with
// outputs from the problem's reference law, or CSV paths to load instead.
struct DataConfig {
  std::vector<AxisConfig> solid_axes;
  std::vector<AxisConfig> fluid_axes;
  std::string solid_path;
  std::string fluid_path;
  BereaConfig berea;
};

// First-step assignment initialization. Prototype vectors hold tensor strain
// components / gradient components and are only read in homogeneous mode.
struct InitConfig {
  std::string mode = "random";  // random | homogeneous
  std::vector<double> solid_strain;
  std::vector<double> fluid_grad;
};

// Load schedule knobs; which ones apply depends on the problem (see the
// per-problem builders). t_hold <= 0 means the ramp never stops.
struct LoadConfig {
  double traction = 0.0;       // step traction magnitude, Pa
  double traction_rate = 0.0;  // traction ramp rate, Pa/s
  double u_rate = 0.0;         // prescribed displacement rate, m/s
  double t_hold = 0.0;         // ramp hold time, s (<= 0: no hold)
  double confining = 0.0;      // lateral confining traction magnitude, Pa
};

struct RunConfig {
  std::string backend = "kdtree";  // kdtree | brute_force
  int threads = 0;  // 0: take the DDPORO_THREADS environment variable, else 1
  std::string out_dir = "out";
  int vtk_every = 1;  // write fields every k-th step (0: never; last step always)
  int fixed_point_max_iters = 200;
  int oscillation_tolerance = 5;
};

struct ProblemConfig {
  int schema_version = 1;
  std::string problem = "terzaghi";
  // fully_dd | hybrid_fluid | hybrid_solid | model_based
  std::string formulation = "fully_dd";
  std::uint64_t seed = 0;
  MeshConfig mesh;
  TimeConfig time;
  MaterialConfig material;
  MetricConfig metric;
  DataConfig data;
  InitConfig init;
  LoadConfig loads;
  RunConfig run;
};

// Fully populated defaults for one of: terzaghi, relaxation, footing,
// plate_hole, berea_like, poisson_cube. Throws std::invalid_argument for
// anything else.
ProblemConfig default_config(const std::string &problem);

// Reads a JSON config: defaults for the named problem overlaid with the
// file's values. Unknown keys and type mismatches are errors naming the
// offending field path. A schema_version other than 1 is rejected.
ProblemConfig load_config(const std::string &path);
ProblemConfig parse_config(const std::string &json_text);
std::string config_to_json(const ProblemConfig &config);
void save_config(const ProblemConfig &config, const std::string &path);

FormulationKind parse_formulation(const std::string &name);
std::string formulation_name(FormulationKind kind);
SearchBackend parse_backend(const std::string &name);

// A constructed problem instance. Addresses of the members are stable (the
// search space points into the dataset members), so instances live behind
// unique_ptr and are not movable.
struct Problem {
  ProblemConfig config;

  std::unique_ptr<Mesh> mesh;
  std::unique_ptr<DofMap> dofs;
  std::unique_ptr<AssemblyContext> ctx;

  MetricSpec metric;
  BiotConstants biot;
  Formulation formulation;
  ProblemBCs bcs;
  double dt = 0.0;
  int n_steps = 0;

  std::vector<QuadPointState> states;
  InitSpec init;

  // Datasets of the data-driven phases; empty when a phase is model-based.
  PhaseDataset solid_data;
  PhaseDataset fluid_data;
  DatasetFamily fluid_family;  // porosity-labeled family (berea_like)
  KdTree solid_tree;
  KdTree fluid_tree;
  std::vector<KdTree> family_trees;
  SearchSpace space;

  // Reference laws of the problem (used for the model twin and to sample
  // datasets); set for every problem regardless of formulation.
  std::shared_ptr<const SolidModel> reference_solid;
  DarcyModel reference_darcy;

  // Per-element reference porosity of the heterogeneous run, else empty.
  Eigen::VectorXd phi0_elem;

  Problem() = default;
  Problem(const Problem &) = delete;
  Problem &operator=(const Problem &) = delete;
};

// Builds mesh, constraints, laws, metric, datasets (generated or loaded),
// search structures, and initial states for the configured problem.
std::unique_ptr<Problem> build_problem(const ProblemConfig &config);

// Dataset grids of the configured problem sampled from its reference laws,
// without building the rest of the run. Members: the solid set (when the
// problem has one), the fluid set or family members. Used by gen-data.
struct GeneratedData {
  PhaseDataset solid;
  PhaseDataset fluid;
  DatasetFamily family;
  bool has_solid = false;
  bool has_fluid = false;
  bool has_family = false;
};
GeneratedData generate_datasets(const ProblemConfig &config);

// Porosity-permeability map of the synthetic family: Kozeny-Carman scaling
// around (phi_mean, k_ref) with a seeded, deliberately oscillatory
// log-multiplier so that neighboring labels do not order monotonically.
Eigen::VectorXd berea_label_porosities(const BereaConfig &berea);
Eigen::VectorXd berea_label_permeabilities(const BereaConfig &berea, std::uint64_t seed);

// Synthetic porosity-to-moduli table of the heterogeneous run: log-linear in
// porosity with a shared slope, which the pressure-dependent solid law
// represents exactly, so per-element calibration round-trips the table.
std::vector<ModuliRow> berea_moduli_table(const BereaConfig &berea);

// Elementwise reference porosity sample: independent Gaussian draws
// (Box-Muller on the raw engine stream) with the configured mean and
// standard deviation, clamped to (0, 1). Spatial correlation is not modeled.
Eigen::VectorXd sample_porosity_field(int n_elems, double mean, double stddev,
                                      std::uint64_t seed);

}  // namespace ddporo
