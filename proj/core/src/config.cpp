// JSON serialization of ProblemConfig: defaults overlaid with a document,
// unknown keys rejected with full field paths.
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ddporo/problems.hpp"

namespace ddporo {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string &path, const std::string &what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

// Wraps one JSON object: typed reads that overlay onto defaults, plus an
// unknown-key sweep at the end so typos surface as errors.
struct ObjReader {
  const json &j;
  std::string path;
  std::set<std::string> seen;

  ObjReader(const json &jj, std::string p) : j(jj), path(std::move(p)) {
    if (!j.is_object()) fail(path, "expected an object");
  }

  const json *find(const char *key) {
    seen.insert(key);
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  void read(const char *key, double &out) {
    if (const json *v = find(key)) {
      if (!v->is_number()) fail(path + "." + key, "expected a number");
      out = v->get<double>();
    }
  }
  void read(const char *key, int &out) {
    if (const json *v = find(key)) {
      if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
      out = v->get<int>();
    }
  }
  void read(const char *key, std::uint64_t &out) {
    if (const json *v = find(key)) {
      if (!(v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0)))
        fail(path + "." + key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char *key, std::string &out) {
    if (const json *v = find(key)) {
      if (!v->is_string()) fail(path + "." + key, "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const char *key, std::vector<double> &out) {
    if (const json *v = find(key)) {
      if (!v->is_array()) fail(path + "." + key, "expected an array of numbers");
      out.clear();
      for (const json &e : *v) {
        if (!e.is_number()) fail(path + "." + key, "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  const json *object(const char *key) {
    if (const json *v = find(key)) {
      if (!v->is_object()) fail(path + "." + key, "expected an object");
      return v;
    }
    return nullptr;
  }

  void finish() const {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (seen.find(it.key()) == seen.end()) fail(path + "." + it.key(), "unknown key");
  }
};

void read_axes(ObjReader &r, const char *key, std::vector<AxisConfig> &out) {
  const json *v = r.find(key);
  if (v == nullptr) return;
  const std::string path = r.path + "." + key;
  if (!v->is_array()) fail(path, "expected an array of axis objects");
  std::vector<AxisConfig> axes;
  int i = 0;
  for (const json &e : *v) {
    ObjReader ar(e, path + "[" + std::to_string(i++) + "]");
    AxisConfig a;
    ar.read("min", a.min);
    ar.read("max", a.max);
    ar.read("count", a.count);
    ar.finish();
    axes.push_back(a);
  }
  out = std::move(axes);
}

void overlay(const json &j, ProblemConfig &c) {
  ObjReader r(j, "config");
  int version = c.schema_version;
  r.read("schema_version", version);
  if (version != 1) fail("config.schema_version", "unsupported version " + std::to_string(version));
  c.schema_version = version;
  r.read("problem", c.problem);
  r.read("formulation", c.formulation);
  r.read("seed", c.seed);

  if (const json *v = r.object("mesh")) {
    ObjReader m(*v, "config.mesh");
    m.read("nx", c.mesh.nx);
    m.read("ny", c.mesh.ny);
    m.read("nz", c.mesh.nz);
    m.finish();
  }
  if (const json *v = r.object("time")) {
    ObjReader m(*v, "config.time");
    m.read("dt", c.time.dt);
    m.read("t_end", c.time.t_end);
    m.finish();
  }
  if (const json *v = r.object("material")) {
    ObjReader m(*v, "config.material");
    m.read("E", c.material.E);
    m.read("nu", c.material.nu);
    m.read("k", c.material.k);
    m.read("mu_f", c.material.mu_f);
    m.read("B", c.material.B);
    m.read("M", c.material.M);
    m.read("kappa", c.material.kappa);
    m.read("G", c.material.G);
    m.finish();
  }
  if (const json *v = r.object("metric")) {
    ObjReader m(*v, "config.metric");
    m.read("solid", c.metric.solid);
    m.read("E", c.metric.E);
    m.read("nu", c.metric.nu);
    m.read("blend_eps", c.metric.blend_eps);
    m.read("C_f", c.metric.C_f);
    m.finish();
  }
  if (const json *v = r.object("data")) {
    ObjReader m(*v, "config.data");
    read_axes(m, "solid_axes", c.data.solid_axes);
    read_axes(m, "fluid_axes", c.data.fluid_axes);
    m.read("solid_path", c.data.solid_path);
    m.read("fluid_path", c.data.fluid_path);
    if (const json *b = m.object("berea")) {
      ObjReader br(*b, "config.data.berea");
      br.read("n_labels", c.data.berea.n_labels);
      br.read("phi_min", c.data.berea.phi_min);
      br.read("phi_max", c.data.berea.phi_max);
      br.read("k_ref", c.data.berea.k_ref);
      br.read("phi_mean", c.data.berea.phi_mean);
      br.read("phi_std", c.data.berea.phi_std);
      br.read("csv_path", c.data.berea.csv_path);
      br.finish();
    }
    m.finish();
  }
  if (const json *v = r.object("init")) {
    ObjReader m(*v, "config.init");
    m.read("mode", c.init.mode);
    m.read("solid_strain", c.init.solid_strain);
    m.read("fluid_grad", c.init.fluid_grad);
    m.finish();
  }
  if (const json *v = r.object("loads")) {
    ObjReader m(*v, "config.loads");
    m.read("traction", c.loads.traction);
    m.read("traction_rate", c.loads.traction_rate);
    m.read("u_rate", c.loads.u_rate);
    m.read("t_hold", c.loads.t_hold);
    m.read("confining", c.loads.confining);
    m.finish();
  }
  if (const json *v = r.object("run")) {
    ObjReader m(*v, "config.run");
    m.read("backend", c.run.backend);
    m.read("threads", c.run.threads);
    m.read("out_dir", c.run.out_dir);
    m.read("vtk_every", c.run.vtk_every);
    m.read("fixed_point_max_iters", c.run.fixed_point_max_iters);
    m.read("oscillation_tolerance", c.run.oscillation_tolerance);
    m.finish();
  }
  r.finish();
}

void validate(const ProblemConfig &c) {
  if (c.time.dt <= 0.0) fail("config.time.dt", "must be positive");
  if (c.time.t_end < c.time.dt) fail("config.time.t_end", "must be at least dt");
  if (c.mesh.nx < 1 || c.mesh.ny < 1 || c.mesh.nz < 1)
    fail("config.mesh", "element counts must be at least 1");
  parse_formulation(c.formulation);  // throws on bad name
  parse_backend(c.run.backend);
  if (c.metric.solid != "hooke" && c.metric.solid != "blend_point")
    fail("config.metric.solid", "expected 'hooke' or 'blend_point'");
  if (c.init.mode != "random" && c.init.mode != "homogeneous")
    fail("config.init.mode", "expected 'random' or 'homogeneous'");
  auto check_axes = [](const std::vector<AxisConfig> &axes, const std::string &path) {
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const AxisConfig &a = axes[i];
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (a.count < 1) fail(p + ".count", "must be at least 1");
      if (a.count > 1 && a.max <= a.min) fail(p, "max must exceed min when count > 1");
    }
  };
  check_axes(c.data.solid_axes, "config.data.solid_axes");
  check_axes(c.data.fluid_axes, "config.data.fluid_axes");
  const BereaConfig &b = c.data.berea;
  if (b.n_labels < 1) fail("config.data.berea.n_labels", "must be at least 1");
  if (!(b.phi_min > 0.0 && b.phi_max < 1.0 && b.phi_min < b.phi_max))
    fail("config.data.berea", "porosity labels must satisfy 0 < phi_min < phi_max < 1");
  if (c.run.fixed_point_max_iters < 1) fail("config.run.fixed_point_max_iters", "must be positive");
  if (c.run.oscillation_tolerance < 0)
    fail("config.run.oscillation_tolerance", "must be non-negative");
}

json axes_json(const std::vector<AxisConfig> &axes) {
  json arr = json::array();
  for (const AxisConfig &a : axes)
    arr.push_back(json{{"min", a.min}, {"max", a.max}, {"count", a.count}});
  return arr;
}

}  // namespace

ProblemConfig parse_config(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("config", "expected a JSON object");
  const auto it = j.find("problem");
  if (it == j.end() || !it->is_string())
    fail("config.problem", "required string naming the problem");
  ProblemConfig c = default_config(it->get<std::string>());
  overlay(j, c);
  validate(c);
  return c;
}

ProblemConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const ProblemConfig &c) {
  json j{
      {"schema_version", c.schema_version},
      {"problem", c.problem},
      {"formulation", c.formulation},
      {"seed", c.seed},
      {"mesh", {{"nx", c.mesh.nx}, {"ny", c.mesh.ny}, {"nz", c.mesh.nz}}},
      {"time", {{"dt", c.time.dt}, {"t_end", c.time.t_end}}},
      {"material",
       {{"E", c.material.E},
        {"nu", c.material.nu},
        {"k", c.material.k},
        {"mu_f", c.material.mu_f},
        {"B", c.material.B},
        {"M", c.material.M},
        {"kappa", c.material.kappa},
        {"G", c.material.G}}},
      {"metric",
       {{"solid", c.metric.solid},
        {"E", c.metric.E},
        {"nu", c.metric.nu},
        {"blend_eps", c.metric.blend_eps},
        {"C_f", c.metric.C_f}}},
      {"data",
       {{"solid_axes", axes_json(c.data.solid_axes)},
        {"fluid_axes", axes_json(c.data.fluid_axes)},
        {"solid_path", c.data.solid_path},
        {"fluid_path", c.data.fluid_path},
        {"berea",
         {{"n_labels", c.data.berea.n_labels},
          {"phi_min", c.data.berea.phi_min},
          {"phi_max", c.data.berea.phi_max},
          {"k_ref", c.data.berea.k_ref},
          {"phi_mean", c.data.berea.phi_mean},
          {"phi_std", c.data.berea.phi_std},
          {"csv_path", c.data.berea.csv_path}}}}},
      {"init",
       {{"mode", c.init.mode},
        {"solid_strain", c.init.solid_strain},
        {"fluid_grad", c.init.fluid_grad}}},
      {"loads",
       {{"traction", c.loads.traction},
        {"traction_rate", c.loads.traction_rate},
        {"u_rate", c.loads.u_rate},
        {"t_hold", c.loads.t_hold},
        {"confining", c.loads.confining}}},
      {"run",
       {{"backend", c.run.backend},
        {"threads", c.run.threads},
        {"out_dir", c.run.out_dir},
        {"vtk_every", c.run.vtk_every},
        {"fixed_point_max_iters", c.run.fixed_point_max_iters},
        {"oscillation_tolerance", c.run.oscillation_tolerance}}},
  };
  return j.dump(2) + "\n";
}

void save_config(const ProblemConfig &config, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file '" + path + "'");
  out << config_to_json(config);
}

}  // namespace ddporo
