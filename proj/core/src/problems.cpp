// Benchmark problem construction: per-problem defaults, dataset generation
// from the reference laws, meshes, boundary conditions, and search
// structures.
#include "ddporo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "ddporo/analytic.hpp"

namespace ddporo {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

int problem_dim(const std::string &problem) {
  return (problem == "relaxation" || problem == "poisson_cube") ? 3 : 2;
}

std::vector<GridAxis> to_axes(const std::vector<AxisConfig> &axes) {
  std::vector<GridAxis> out;
  out.reserve(axes.size());
  for (const AxisConfig &a : axes)
    out.push_back(a.count == 1 ? GridAxis::fixed(a.min) : GridAxis{a.min, a.max, a.count});
  return out;
}

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

// Uniform draw in [0, 1) from the raw engine words; the modulo keeps the
// sequence identical across standard libraries.
double unit_draw(std::mt19937_64 &rng) {
  constexpr std::uint64_t mod = std::uint64_t{1} << 53;
  return static_cast<double>(rng() % mod) / static_cast<double>(mod);
}

std::shared_ptr<const SolidModel> hooke_model(int dim, double E, double nu) {
  return std::make_shared<HookeModel>(
      dim, HookeParams{E, nu, dim == 3 ? PlaneCondition::ThreeD : PlaneCondition::PlaneStrain});
}

std::shared_ptr<const SolidModel> make_reference_solid(const ProblemConfig &c, int dim) {
  if (c.problem == "plate_hole")
    return std::make_shared<BlendModel>(BlendParams{c.material.kappa, c.material.G});
  if (c.problem == "berea_like")
    return std::make_shared<BorjaModel>(
        2, calibrate_borja(c.data.berea.phi_mean, berea_moduli_table(c.data.berea)));
  return hooke_model(dim, c.material.E, c.material.nu);
}

DarcyModel make_reference_darcy(const ProblemConfig &c, int dim) {
  return DarcyModel{c.material.k * Eigen::MatrixXd::Identity(dim, dim), c.material.mu_f,
                    Eigen::VectorXd::Zero(dim)};
}

MetricSpec make_problem_metric(const ProblemConfig &c, int dim, double dt) {
  SymTensor4 C_s;
  if (c.metric.solid == "blend_point") {
    if (c.metric.blend_eps.size() != 3)
      throw std::invalid_argument(
          "metric 'blend_point' needs the three in-plane strain components in blend_eps");
    SymTensor2 eps(2);
    for (int i = 0; i < 3; ++i) eps[i] = c.metric.blend_eps[static_cast<std::size_t>(i)];
    C_s = BlendModel(BlendParams{c.material.kappa, c.material.G}).evaluate(eps).tangent;
  } else {
    C_s = HookeModel(dim, HookeParams{c.metric.E, c.metric.nu,
                                      dim == 3 ? PlaneCondition::ThreeD
                                               : PlaneCondition::PlaneStrain})
              .evaluate(SymTensor2::zero(dim))
              .tangent;
  }
  const Eigen::MatrixXd C_f = c.metric.C_f * Eigen::MatrixXd::Identity(dim, dim);
  return make_metric(C_s, C_f, dt);
}

// "porosity,permeability" rows, optional header, sorted ascending by
// porosity.
std::vector<std::pair<double, double>> load_phi_k_csv(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open porosity-permeability table '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    double phi = 0.0, k = 0.0;
    char comma = 0;
    if (!(is >> phi >> comma >> k) || comma != ',') {
      if (line_no == 1) continue;  // header row
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'porosity,permeability'");
    }
    if (!(phi > 0.0 && phi < 1.0) || !(k > 0.0))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": porosity must lie in (0, 1) and permeability be positive");
    rows.emplace_back(phi, k);
  }
  if (rows.size() < 2)
    throw std::runtime_error(path + ": expected at least two porosity-permeability rows");
  std::sort(rows.begin(), rows.end());
  return rows;
}

DatasetFamily build_berea_family(const ProblemConfig &c) {
  std::vector<double> phis, ks;
  if (!c.data.berea.csv_path.empty()) {
    for (const auto &[phi, k] : load_phi_k_csv(c.data.berea.csv_path)) {
      phis.push_back(phi);
      ks.push_back(k);
    }
  } else {
    const Eigen::VectorXd p = berea_label_porosities(c.data.berea);
    const Eigen::VectorXd k = berea_label_permeabilities(c.data.berea, c.seed + 1);
    phis.assign(p.data(), p.data() + p.size());
    ks.assign(k.data(), k.data() + k.size());
  }
  if (c.data.fluid_axes.size() != 2)
    throw std::invalid_argument("berea_like needs two fluid axes (gradient components)");
  const std::vector<Eigen::VectorXd> coords = generate_grid(to_axes(c.data.fluid_axes));
  std::vector<PhaseDataset> members;
  members.reserve(phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const DarcyModel d{ks[i] * Eigen::MatrixXd::Identity(2, 2), c.material.mu_f,
                       Eigen::VectorXd::Zero(2)};
    PhaseDataset m =
        sample_fluid_law(coords, [&d](const Eigen::VectorXd &r) { return d.flux(r); });
    m.label = phis[i];
    members.push_back(std::move(m));
  }
  return make_family(std::move(members));
}

PhaseDataset generate_solid(const ProblemConfig &c, int dim) {
  if (static_cast<int>(c.data.solid_axes.size()) != kelvin_size(dim))
    throw std::invalid_argument("solid_axes must list one axis per strain component (" +
                                std::to_string(kelvin_size(dim)) + ")");
  const std::shared_ptr<const SolidModel> law = make_reference_solid(c, dim);
  return sample_solid_law(dim, generate_grid(to_axes(c.data.solid_axes)),
                          [&law](const SymTensor2 &e) { return law->evaluate(e).stress; });
}

PhaseDataset generate_fluid(const ProblemConfig &c, int dim) {
  if (static_cast<int>(c.data.fluid_axes.size()) != dim)
    throw std::invalid_argument("fluid_axes must list one axis per gradient component (" +
                                std::to_string(dim) + ")");
  const DarcyModel d = make_reference_darcy(c, dim);
  return sample_fluid_law(generate_grid(to_axes(c.data.fluid_axes)),
                          [&d](const Eigen::VectorXd &r) { return d.flux(r); });
}

}  // namespace

FormulationKind parse_formulation(const std::string &name) {
  if (name == "fully_dd") return FormulationKind::FullyDD;
  if (name == "hybrid_fluid") return FormulationKind::HybridFluidDD;
  if (name == "hybrid_solid") return FormulationKind::HybridSolidDD;
  if (name == "model_based") return FormulationKind::ModelBased;
  throw std::invalid_argument("unknown formulation '" + name +
                              "' (expected fully_dd, hybrid_fluid, hybrid_solid, model_based)");
}

std::string formulation_name(FormulationKind kind) {
  switch (kind) {
    case FormulationKind::FullyDD: return "fully_dd";
    case FormulationKind::HybridFluidDD: return "hybrid_fluid";
    case FormulationKind::HybridSolidDD: return "hybrid_solid";
    case FormulationKind::ModelBased: return "model_based";
  }
  return "unknown";
}

SearchBackend parse_backend(const std::string &name) {
  if (name == "kdtree") return SearchBackend::Tree;
  if (name == "brute_force") return SearchBackend::Brute;
  throw std::invalid_argument("unknown search backend '" + name +
                              "' (expected kdtree or brute_force)");
}

ProblemConfig default_config(const std::string &problem) {
  ProblemConfig c;
  c.problem = problem;
  if (problem == "terzaghi") {
    c.formulation = "fully_dd";
    c.mesh = {1, 20, 1};
    c.time = {0.1, 10.0};
    c.material.E = 70e9;
    c.material.nu = 0.0;
    c.material.k = 6.1224e-16;
    c.material.mu_f = 1e-3;
    c.material.B = 1.0;
    c.material.M = 266.667e9;
    c.metric.E = 70e9;
    c.metric.nu = 0.0;
    c.metric.C_f = 6.1224e-13;
    c.data.solid_axes = {{0.0, 0.0, 1}, {-0.026, 0.013, 16385}, {0.0, 0.0, 1}};
    c.data.fluid_axes = {{0.0, 0.0, 1}, {-8.6e9, 4.3e9, 16385}};
    c.init.mode = "homogeneous";
    c.init.solid_strain = {0.0, 0.013, 0.0};
    c.init.fluid_grad = {0.0, 4.3e9};
    c.loads.traction = -0.9e9;
  } else if (problem == "relaxation") {
    c.formulation = "fully_dd";
    c.mesh = {4, 4, 10};
    c.time = {0.1, 10.0};
    c.material.E = 100e9;  // G = lambda = 40 GPa
    c.material.nu = 0.25;
    c.material.k = 8.33e-13;
    c.material.mu_f = 1e-3;
    c.material.B = 1.0;
    c.material.M = 2e19;
    c.metric.E = 80e9;
    c.metric.nu = 0.225;
    c.metric.C_f = 6.66e-10;
    c.data.solid_axes = {{0.0, 0.0, 1}, {0.0, 0.0, 1}, {-0.0024, 0.0, 1000},
                         {0.0, 0.0, 1}, {0.0, 0.0, 1}, {0.0, 0.0, 1}};
    c.data.fluid_axes = {{0.0, 0.0, 1}, {0.0, 0.0, 1}, {-58e6, 5e2, 1000}};
    c.init.mode = "random";
    c.loads.u_rate = -0.005;
    c.loads.t_hold = 2.0;
  } else if (problem == "footing") {
    c.formulation = "fully_dd";
    c.mesh = {20, 16, 1};
    c.time = {1.0, 20.0};
    c.material.E = 30e9;
    c.material.nu = 0.2;
    c.material.k = 1e-14;
    c.material.mu_f = 1e-3;
    c.material.B = 1.0;
    c.material.M = 0.0;  // incompressible constituents
    c.metric.E = 30e9;
    c.metric.nu = 0.2;
    c.metric.C_f = 8e-12;
    c.data.solid_axes = {{-5.04e-3, 14.3e-3, 61},
                         {-28.7e-3, 5.04e-3, 61},
                         {-0.72e-3, 12.1e-3, 61}};
    c.data.fluid_axes = {{-864e6, 984e6, 401}, {-3740e6, 288e6, 401}};
    c.init.mode = "random";
    c.loads.traction_rate = -50e6;
  } else if (problem == "plate_hole") {
    c.formulation = "hybrid_fluid";
    c.mesh = {8, 6, 1};
    c.time = {0.2, 1.2};
    c.material.E = 30e9;  // small-strain moduli of the blend law
    c.material.nu = 0.35;
    c.material.kappa = 33.333e9;
    c.material.G = 11.111e9;
    c.material.k = 3.0612e-13;
    c.material.mu_f = 1e-3;
    c.material.B = 1.0;
    c.material.M = 600e9;
    c.metric.solid = "blend_point";
    c.metric.blend_eps = {0.1, -0.2, 0.05};
    c.metric.C_f = 8e-11;
    c.data.solid_axes = {{0.0, 0.25, 61}, {-0.42, 0.0, 61}, {-0.135, 0.135, 61}};
    c.data.fluid_axes = {{-4.1e9, 4.1e9, 401}, {-3.7e9, 3.7e9, 401}};
    c.init.mode = "random";
    c.loads.u_rate = -0.2;
  } else if (problem == "berea_like") {
    c.formulation = "hybrid_fluid";
    c.mesh = {15, 15, 1};
    c.time = {43200.0, 4.32e6};  // 12 h steps over 50 days
    c.material.k = 1.5e-23;
    c.material.mu_f = 1e-3;
    c.material.B = 1.0;
    c.material.M = 10e9;
    c.metric.E = 10e9;
    c.metric.nu = 0.2;
    c.metric.C_f = 1e-11;
    c.data.fluid_axes = {{-902e6, 1540e6, 101}, {-3190e6, 1650e6, 101}};
    c.init.mode = "random";
    c.loads.u_rate = -1.2e-3 / 86400.0;  // 1.2 mm/day of settlement
    c.loads.confining = 6.4166e9;
  } else if (problem == "poisson_cube") {
    c.formulation = "fully_dd";
    c.mesh = {16, 16, 16};
    c.time = {1.0, 1.0};
    c.material.E = 1.0;
    c.material.nu = 0.0;
    c.material.k = 1.0;
    c.material.mu_f = 1.0;
    c.material.B = 0.0;
    c.material.M = 0.0;
    c.metric.E = 1.0;
    c.metric.nu = 0.0;
    c.metric.C_f = 1.0;
    // The solid phase is inert (all displacements pinned); a single zero
    // data point keeps the four-field machinery happy at no cost.
    c.data.solid_axes = {{0.0, 0.0, 1}, {0.0, 0.0, 1}, {0.0, 0.0, 1},
                         {0.0, 0.0, 1}, {0.0, 0.0, 1}, {0.0, 0.0, 1}};
    c.data.fluid_axes = {{-2.2, 2.2, 8}, {-2.2, 2.2, 8}, {-2.2, 2.2, 8}};
    c.init.mode = "random";
  } else {
    throw std::invalid_argument("unknown problem '" + problem +
                                "' (expected terzaghi, relaxation, footing, plate_hole, "
                                "berea_like, poisson_cube)");
  }
  return c;
}

Eigen::VectorXd berea_label_porosities(const BereaConfig &b) {
  Eigen::VectorXd phis(b.n_labels);
  for (int i = 0; i < b.n_labels; ++i)
    phis[i] = b.n_labels == 1
                  ? b.phi_min
                  : b.phi_min + (b.phi_max - b.phi_min) * i / static_cast<double>(b.n_labels - 1);
  return phis;
}

Eigen::VectorXd berea_label_permeabilities(const BereaConfig &b, std::uint64_t seed) {
  const Eigen::VectorXd phis = berea_label_porosities(b);
  const auto kozeny = [](double phi) { return phi * phi * phi / ((1.0 - phi) * (1.0 - phi)); };
  const double base = kozeny(b.phi_mean);
  std::mt19937_64 rng(seed);
  Eigen::VectorXd ks(phis.size());
  for (Eigen::Index i = 0; i < phis.size(); ++i) {
    const double u = 2.0 * unit_draw(rng) - 1.0;  // scatter of half a decade
    ks[i] = b.k_ref * (kozeny(phis[i]) / base) * std::pow(10.0, 0.5 * u);
  }
  return ks;
}

std::vector<ModuliRow> berea_moduli_table(const BereaConfig &b) {
  // Shared log-slope in porosity. The bulk level is chosen so the reference
  // pressure at phi_mean equals the confining stress of the default run.
  const double slope = 6.5;                                 // -d ln(modulus) / d phi
  const double kappa_ref = 6.4166e9 * slope * b.phi_mean;   // bulk modulus at phi_mean
  const double mu_ref = 6.5e9;                              // shear modulus at phi_mean
  const int n = 41;
  const double lo = 0.15, hi = 0.35;
  std::vector<ModuliRow> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double phi = lo + (hi - lo) * i / static_cast<double>(n - 1);
    const double scale = std::exp(-slope * (phi - b.phi_mean));
    rows.push_back(ModuliRow{phi, kappa_ref * scale, mu_ref * scale});
  }
  return rows;
}

Eigen::VectorXd sample_porosity_field(int n_elems, double mean, double stddev,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd phi(n_elems);
  for (int i = 0; i < n_elems; ++i) {
    // Box-Muller on modulo-reduced engine words: the draw sequence does not
    // depend on the standard library's normal_distribution implementation.
    const double u1 = 1.0 - unit_draw(rng);  // in (0, 1]
    const double u2 = unit_draw(rng);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    phi[i] = std::clamp(mean + stddev * z, 0.01, 0.99);
  }
  return phi;
}

GeneratedData generate_datasets(const ProblemConfig &config) {
  GeneratedData g;
  const int dim = problem_dim(config.problem);
  if (config.problem == "berea_like") {
    g.family = build_berea_family(config);
    g.has_family = true;
    return g;
  }
  if (!config.data.solid_axes.empty()) {
    g.solid = generate_solid(config, dim);
    g.has_solid = true;
  }
  if (!config.data.fluid_axes.empty()) {
    g.fluid = generate_fluid(config, dim);
    g.has_fluid = true;
  }
  return g;
}

std::unique_ptr<Problem> build_problem(const ProblemConfig &config) {
  auto holder = std::make_unique<Problem>();
  Problem &p = *holder;
  p.config = config;
  const std::string &name = config.problem;
  const int dim = problem_dim(name);
  const FormulationKind kind = parse_formulation(config.formulation);

  p.dt = config.time.dt;
  p.n_steps = std::max(1, static_cast<int>(std::llround(config.time.t_end / config.time.dt)));

  if (name == "terzaghi")
    p.mesh = std::make_unique<Mesh>(mesh_terzaghi(0.1, 1.0, config.mesh.nx, config.mesh.ny));
  else if (name == "relaxation")
    p.mesh = std::make_unique<Mesh>(
        mesh_relaxation_cylinder(10.0, 10.0, config.mesh.nx, config.mesh.nz));
  else if (name == "footing")
    p.mesh = std::make_unique<Mesh>(mesh_footing(10.0, 8.0, 2.0, config.mesh.nx, config.mesh.ny));
  else if (name == "plate_hole")
    p.mesh = std::make_unique<Mesh>(mesh_plate_hole(0.3, 1.0, config.mesh.nx, config.mesh.ny));
  else if (name == "berea_like")
    p.mesh = std::make_unique<Mesh>(mesh_square(5.0, 5.0, config.mesh.nx, config.mesh.ny));
  else if (name == "poisson_cube")
    p.mesh = std::make_unique<Mesh>(mesh_cube(1.0, config.mesh.nx));
  else
    throw std::invalid_argument("unknown problem '" + name + "'");
  validate_mesh(*p.mesh);

  const Mesh &mesh = *p.mesh;
  p.dofs = std::make_unique<DofMap>(dim, mesh.n_nodes());
  DofMap &dofs = *p.dofs;
  const double hold = config.loads.t_hold > 0.0 ? config.loads.t_hold : kInf;

  if (name == "terzaghi") {
    for (const char *side : {"left", "right"}) {
      dofs.constrain_set(mesh.node_set(side), Field::U, 0, 0.0);
      dofs.constrain_set(mesh.node_set(side), Field::BetaMom, 0, 0.0);
    }
    for (int c = 0; c < dim; ++c) {
      dofs.constrain_set(mesh.node_set("bottom"), Field::U, c, 0.0);
      dofs.constrain_set(mesh.node_set("bottom"), Field::BetaMom, c, 0.0);
    }
    dofs.constrain_set(mesh.node_set("top"), Field::P, 0, 0.0);
    dofs.constrain_set(mesh.node_set("top"), Field::BetaMass, 0, 0.0);
    p.bcs.tractions.push_back(
        TractionBC{"top", vec2(0.0, config.loads.traction), Eigen::VectorXd::Zero(2), kInf});
  } else if (name == "relaxation") {
    // Confined column: no lateral displacement anywhere, driven rigid top
    // platen, drainage only through the top.
    for (int node = 0; node < mesh.n_nodes(); ++node)
      for (int c = 0; c < 2; ++c) {
        dofs.constrain(dofs.dof(node, Field::U, c), 0.0);
        dofs.constrain(dofs.dof(node, Field::BetaMom, c), 0.0);
      }
    dofs.constrain_set(mesh.node_set("bottom"), Field::U, 2, 0.0);
    dofs.constrain_set(mesh.node_set("bottom"), Field::BetaMom, 2, 0.0);
    dofs.constrain_set(mesh.node_set("top"), Field::U, 2, 0.0, config.loads.u_rate, hold);
    dofs.constrain_set(mesh.node_set("top"), Field::BetaMom, 2, 0.0);
    dofs.constrain_set(mesh.node_set("top"), Field::P, 0, 0.0);
    dofs.constrain_set(mesh.node_set("top"), Field::BetaMass, 0, 0.0);
  } else if (name == "footing") {
    for (const char *side : {"left", "right"}) {
      dofs.constrain_set(mesh.node_set(side), Field::U, 0, 0.0);
      dofs.constrain_set(mesh.node_set(side), Field::BetaMom, 0, 0.0);
    }
    for (int c = 0; c < dim; ++c) {
      dofs.constrain_set(mesh.node_set("bottom"), Field::U, c, 0.0);
      dofs.constrain_set(mesh.node_set("bottom"), Field::BetaMom, c, 0.0);
    }
    // Drained only outside the strip; the loaded strip itself is undrained.
    dofs.constrain_set(mesh.node_set("top_free"), Field::P, 0, 0.0);
    dofs.constrain_set(mesh.node_set("top_free"), Field::BetaMass, 0, 0.0);
    p.bcs.tractions.push_back(TractionBC{"footing", Eigen::VectorXd::Zero(2),
                                         vec2(0.0, config.loads.traction_rate), kInf});
  } else if (name == "plate_hole") {
    for (const char *side : {"top", "bottom"}) {
      const double rate = side == std::string("top") ? config.loads.u_rate : -config.loads.u_rate;
      dofs.constrain_set(mesh.node_set(side), Field::U, 0, 0.0);
      dofs.constrain_set(mesh.node_set(side), Field::U, 1, 0.0, rate, hold);
      dofs.constrain_set(mesh.node_set(side), Field::BetaMom, 0, 0.0);
      dofs.constrain_set(mesh.node_set(side), Field::BetaMom, 1, 0.0);
    }
    dofs.constrain_set(mesh.node_set("hole"), Field::P, 0, 0.0);
    dofs.constrain_set(mesh.node_set("hole"), Field::BetaMass, 0, 0.0);
  } else if (name == "berea_like") {
    dofs.constrain_set(mesh.node_set("bottom"), Field::U, 1, 0.0);
    dofs.constrain_set(mesh.node_set("bottom"), Field::BetaMom, 1, 0.0);
    dofs.constrain_set(mesh.node_set("top"), Field::U, 1, 0.0, config.loads.u_rate, hold);
    dofs.constrain_set(mesh.node_set("top"), Field::BetaMom, 1, 0.0);
    dofs.constrain_set(mesh.node_set("top"), Field::P, 0, 0.0);
    dofs.constrain_set(mesh.node_set("top"), Field::BetaMass, 0, 0.0);
    // Pin horizontal translation at the origin corner.
    int corner = 0;
    double best = kInf;
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      const double d = mesh.nodes.row(i).squaredNorm();
      if (d < best) {
        best = d;
        corner = i;
      }
    }
    dofs.constrain(dofs.dof(corner, Field::U, 0), 0.0);
    dofs.constrain(dofs.dof(corner, Field::BetaMom, 0), 0.0);
    const double c0 = config.loads.confining;
    p.bcs.tractions.push_back(
        TractionBC{"left", vec2(c0, 0.0), Eigen::VectorXd::Zero(2), kInf});
    p.bcs.tractions.push_back(
        TractionBC{"right", vec2(-c0, 0.0), Eigen::VectorXd::Zero(2), kInf});
  } else {  // poisson_cube
    for (int node = 0; node < mesh.n_nodes(); ++node)
      for (int c = 0; c < dim; ++c) {
        dofs.constrain(dofs.dof(node, Field::U, c), 0.0);
        dofs.constrain(dofs.dof(node, Field::BetaMom, c), 0.0);
      }
    const double kappa = config.material.k / config.material.mu_f;
    for (int nid : mesh.node_set("boundary")) {
      const PoissonManufactured m = poisson_manufactured(
          mesh.nodes(nid, 0), mesh.nodes(nid, 1), mesh.nodes(nid, 2), kappa);
      dofs.constrain(dofs.dof(nid, Field::P), m.p);
      dofs.constrain(dofs.dof(nid, Field::BetaMass), 0.0);
    }
  }

  if (kind == FormulationKind::ModelBased) {
    for (int node = 0; node < mesh.n_nodes(); ++node) {
      for (int c = 0; c < dim; ++c) dofs.constrain(dofs.dof(node, Field::BetaMom, c), 0.0);
      dofs.constrain(dofs.dof(node, Field::BetaMass), 0.0);
    }
  }
  dofs.finalize();

  const QuadRule quad = gauss_rule(dim, name == "poisson_cube" ? 1 : 2);
  p.ctx = std::make_unique<AssemblyContext>(make_context(mesh, dofs, quad));

  const double inv_M = config.material.M > 0.0 ? 1.0 / config.material.M : 0.0;
  p.biot = BiotConstants::simple(dim, config.material.B, inv_M);
  p.metric = make_problem_metric(config, dim, p.dt);
  p.reference_solid = make_reference_solid(config, dim);
  p.reference_darcy = make_reference_darcy(config, dim);

  if (name == "berea_like")
    p.phi0_elem = sample_porosity_field(mesh.n_elems(), config.data.berea.phi_mean,
                                        config.data.berea.phi_std, config.seed + 2);

  p.formulation.kind = kind;
  if (kind == FormulationKind::HybridFluidDD || kind == FormulationKind::ModelBased) {
    if (name == "berea_like") {
      const std::vector<ModuliRow> table = berea_moduli_table(config.data.berea);
      p.formulation.solid_law.per_element.reserve(static_cast<std::size_t>(mesh.n_elems()));
      for (int e = 0; e < mesh.n_elems(); ++e)
        p.formulation.solid_law.per_element.push_back(
            std::make_shared<BorjaModel>(2, calibrate_borja(p.phi0_elem[e], table)));
    } else {
      p.formulation.solid_law = SolidLawField(p.reference_solid);
    }
  }
  if (kind == FormulationKind::HybridSolidDD || kind == FormulationKind::ModelBased)
    p.formulation.darcy = p.reference_darcy;

  const bool need_solid = uses_solid_data(kind);
  const bool need_fluid = uses_fluid_data(kind);
  if (need_solid) {
    if (!config.data.solid_path.empty()) {
      p.solid_data = load_dataset(config.data.solid_path, p.metric);
      if (p.solid_data.kind != DatasetKind::Solid || p.solid_data.dim != dim)
        throw std::invalid_argument("'" + config.data.solid_path +
                                    "' is not a solid dataset of dimension " +
                                    std::to_string(dim));
    } else {
      if (config.data.solid_axes.empty())
        throw std::invalid_argument("formulation '" + config.formulation +
                                    "' needs solid data: set data.solid_axes or solid_path");
      p.solid_data = generate_solid(config, dim);
      embed_dataset(p.solid_data, p.metric);
    }
    p.solid_tree = build_dataset_tree(p.solid_data);
  }
  if (need_fluid && name == "berea_like") {
    p.fluid_family = build_berea_family(config);
    p.family_trees.reserve(p.fluid_family.members.size());
    for (PhaseDataset &m : p.fluid_family.members) {
      embed_dataset(m, p.metric);
      p.family_trees.push_back(build_dataset_tree(m));
    }
    p.space = family_search_space(need_solid ? &p.solid_data : nullptr,
                                  need_solid ? &p.solid_tree : nullptr, p.fluid_family,
                                  p.family_trees);
  } else if (need_fluid) {
    if (!config.data.fluid_path.empty()) {
      p.fluid_data = load_dataset(config.data.fluid_path, p.metric);
      if (p.fluid_data.kind != DatasetKind::Fluid || p.fluid_data.dim != dim)
        throw std::invalid_argument("'" + config.data.fluid_path +
                                    "' is not a fluid dataset of dimension " +
                                    std::to_string(dim));
    } else {
      if (config.data.fluid_axes.empty())
        throw std::invalid_argument("formulation '" + config.formulation +
                                    "' needs fluid data: set data.fluid_axes or fluid_path");
      p.fluid_data = generate_fluid(config, dim);
      embed_dataset(p.fluid_data, p.metric);
    }
    p.fluid_tree = build_dataset_tree(p.fluid_data);
    p.space = single_search_space(need_solid ? &p.solid_data : nullptr,
                                  need_solid ? &p.solid_tree : nullptr, &p.fluid_data,
                                  &p.fluid_tree);
  } else {
    p.space = single_search_space(need_solid ? &p.solid_data : nullptr,
                                  need_solid ? &p.solid_tree : nullptr, nullptr, nullptr);
  }

  const double source =
      name == "poisson_cube" ? 6.0 * config.material.k / config.material.mu_f : 0.0;
  p.states = make_states(*p.ctx, 0.0, source);
  if (name == "berea_like") {
    for (int e = 0; e < p.ctx->n_elems(); ++e)
      for (int k = 0; k < p.ctx->n_qp_per_elem(); ++k) {
        QuadPointState &s = p.states[static_cast<std::size_t>(p.ctx->qp_index(e, k))];
        s.phi0 = p.phi0_elem[e];
        s.phi = s.phi0;
      }
  }

  p.init.mode = config.init.mode == "homogeneous" ? InitMode::Homogeneous : InitMode::Random;
  p.init.seed = config.seed;
  if (p.init.mode == InitMode::Homogeneous) {
    if (need_solid) {
      if (static_cast<int>(config.init.solid_strain.size()) != kelvin_size(dim))
        throw std::invalid_argument("init.solid_strain needs " +
                                    std::to_string(kelvin_size(dim)) + " strain components");
      SymTensor2 eps(dim);
      for (int i = 0; i < kelvin_size(dim); ++i)
        eps[i] = config.init.solid_strain[static_cast<std::size_t>(i)];
      p.init.solid_point = SolidPoint{eps, p.reference_solid->evaluate(eps).stress};
    }
    if (need_fluid) {
      if (static_cast<int>(config.init.fluid_grad.size()) != dim)
        throw std::invalid_argument("init.fluid_grad needs " + std::to_string(dim) +
                                    " gradient components");
      Eigen::VectorXd r(dim);
      for (int i = 0; i < dim; ++i) r[i] = config.init.fluid_grad[static_cast<std::size_t>(i)];
      p.init.fluid_point = FluidPoint{r, p.reference_darcy.flux(r)};
    }
  }

  return holder;
}

}  // namespace ddporo
