#include "ddporo/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ddporo {

namespace {

using nlohmann::json;

std::vector<std::string> column_names(DatasetKind kind, int dim) {
  std::vector<std::string> cols;
  if (kind == DatasetKind::Solid) {
    const char *suffix2[] = {"11", "22", "12"};
    const char *suffix3[] = {"11", "22", "33", "12", "23", "13"};
    const char **s = dim == 2 ? suffix2 : suffix3;
    const int n = kelvin_size(dim);
    for (int i = 0; i < n; ++i) cols.push_back(std::string("eps_") + s[i]);
    for (int i = 0; i < n; ++i) cols.push_back(std::string("sig_") + s[i]);
  } else {
    const char *axis[] = {"x", "y", "z"};
    for (int i = 0; i < dim; ++i) cols.push_back(std::string("r_") + axis[i]);
    for (int i = 0; i < dim; ++i) cols.push_back(std::string("q_") + axis[i]);
  }
  return cols;
}

double parse_double(const std::string &field, const std::string &path, int line_no) {
  errno = 0;
  char *end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0' || errno == ERANGE) {
    std::ostringstream os;
    os << path << ":" << line_no << ": cannot parse number '" << field << "'";
    throw std::runtime_error(os.str());
  }
  return v;
}

}  // namespace

std::vector<Eigen::VectorXd> generate_grid(const std::vector<GridAxis> &axes) {
  if (axes.empty()) throw std::invalid_argument("generate_grid: no axes");
  std::size_t total = 1;
  for (const auto &a : axes) {
    if (a.count < 1) throw std::invalid_argument("generate_grid: axis count must be >= 1");
    if (a.min > a.max) throw std::invalid_argument("generate_grid: axis min > max");
    total *= static_cast<std::size_t>(a.count);
  }

  const int na = static_cast<int>(axes.size());
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(na), 0);
  Eigen::VectorXd row(na);
  for (std::size_t r = 0; r < total; ++r) {
    for (int a = 0; a < na; ++a) {
      const GridAxis &ax = axes[static_cast<std::size_t>(a)];
      const int j = idx[static_cast<std::size_t>(a)];
      row[a] = ax.count == 1
                   ? ax.min
                   : ax.min + (ax.max - ax.min) * static_cast<double>(j) /
                         static_cast<double>(ax.count - 1);
    }
    rows.push_back(row);
    for (int a = na - 1; a >= 0; --a) {  // last axis fastest
      if (++idx[static_cast<std::size_t>(a)] < axes[static_cast<std::size_t>(a)].count) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return rows;
}

PhaseDataset sample_fluid_law(const std::vector<Eigen::VectorXd> &coords, const FluidLaw &law) {
  PhaseDataset d;
  d.kind = DatasetKind::Fluid;
  if (!coords.empty()) d.dim = static_cast<int>(coords[0].size());
  d.fluid_points.reserve(coords.size());
  for (const auto &r : coords) {
    if (static_cast<int>(r.size()) != d.dim)
      throw std::invalid_argument("sample_fluid_law: inconsistent coordinate length");
    d.fluid_points.emplace_back(r, law(r));
  }
  return d;
}

PhaseDataset sample_solid_law(int dim, const std::vector<Eigen::VectorXd> &coords,
                              const SolidLaw &law) {
  PhaseDataset d;
  d.kind = DatasetKind::Solid;
  d.dim = dim;
  d.solid_points.reserve(coords.size());
  const int n = kelvin_size(dim);
  for (const auto &r : coords) {
    if (static_cast<int>(r.size()) != n)
      throw std::invalid_argument("sample_solid_law: coordinate length != strain components");
    SymTensor2 eps(dim);
    for (int i = 0; i < n; ++i) eps[i] = r[i];
    d.solid_points.emplace_back(eps, law(eps));
  }
  return d;
}

void embed_dataset(PhaseDataset &d, const MetricSpec &m) {
  if (m.dim != d.dim) throw std::invalid_argument("embed_dataset: metric dimension mismatch");
  d.embedded.clear();
  d.embedded.reserve(static_cast<std::size_t>(d.size()));
  if (d.kind == DatasetKind::Solid) {
    for (const auto &p : d.solid_points) d.embedded.push_back(embed_solid(m, p));
  } else {
    for (const auto &p : d.fluid_points) d.embedded.push_back(embed_fluid(m, p));
  }
}

KdTree build_dataset_tree(const PhaseDataset &d, int leaf_capacity) {
  if (d.empty()) throw std::invalid_argument("build_dataset_tree: empty dataset");
  if (static_cast<int>(d.embedded.size()) != d.size())
    throw std::invalid_argument("build_dataset_tree: dataset is not embedded");
  return KdTree::build(d.embedded, leaf_capacity);
}

DatasetFamily make_family(std::vector<PhaseDataset> members) {
  if (members.empty()) throw std::invalid_argument("make_family: no members");
  for (const auto &m : members) {
    if (!m.label) throw std::invalid_argument("make_family: member without porosity label");
    if (m.kind != members[0].kind || m.dim != members[0].dim)
      throw std::invalid_argument("make_family: members disagree in kind or dimension");
  }
  std::sort(members.begin(), members.end(),
            [](const PhaseDataset &a, const PhaseDataset &b) { return *a.label < *b.label; });
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (!(*members[i - 1].label < *members[i].label))
      throw std::invalid_argument("make_family: labels are not strictly increasing");
  }
  DatasetFamily f;
  f.members = std::move(members);
  return f;
}

int select_dataset_by_porosity(const DatasetFamily &f, double phi) {
  if (f.members.empty()) throw std::invalid_argument("select_dataset_by_porosity: empty family");
  if (!(phi > 0.0 && phi < 1.0))
    throw std::invalid_argument("select_dataset_by_porosity: porosity outside (0, 1)");
  int best = 0;
  double best_d = std::abs(*f.members[0].label - phi);
  for (int i = 1; i < static_cast<int>(f.members.size()); ++i) {
    const double d = std::abs(*f.members[static_cast<std::size_t>(i)].label - phi);
    // Strict comparison keeps the lower label on ties (members are sorted).
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::string manifest_path(const std::string &csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".json";
  return csv_path + ".json";
}

void save_dataset(const PhaseDataset &d, const std::string &path) {
  std::FILE *f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_dataset: cannot open " + path);

  const auto cols = column_names(d.kind, d.dim);
  for (std::size_t i = 0; i < cols.size(); ++i)
    std::fprintf(f, "%s%s", cols[i].c_str(), i + 1 < cols.size() ? "," : "\n");

  const int n = d.kind == DatasetKind::Solid ? kelvin_size(d.dim) : d.dim;
  for (int i = 0; i < d.size(); ++i) {
    for (int c = 0; c < 2 * n; ++c) {
      double v;
      if (d.kind == DatasetKind::Solid) {
        const SolidPoint &p = d.solid_points[static_cast<std::size_t>(i)];
        v = c < n ? p.strain[c] : p.stress[c - n];
      } else {
        const FluidPoint &p = d.fluid_points[static_cast<std::size_t>(i)];
        v = c < n ? p.grad_p[c] : p.flux[c - n];
      }
      std::fprintf(f, "%.17g%s", v, c + 1 < 2 * n ? "," : "\n");
    }
  }
  if (std::fclose(f) != 0) throw std::runtime_error("save_dataset: write failed for " + path);

  json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = d.kind == DatasetKind::Solid ? "solid" : "fluid";
  manifest["dim"] = d.dim;
  manifest["count"] = d.size();
  manifest["columns"] = cols;
  if (d.label)
    manifest["label"] = *d.label;
  else
    manifest["label"] = nullptr;

  std::ofstream mf(manifest_path(path));
  if (!mf) throw std::runtime_error("save_dataset: cannot open " + manifest_path(path));
  mf << manifest.dump(2) << "\n";
}

PhaseDataset load_dataset(const std::string &path, const MetricSpec &m) {
  PhaseDataset d;

  {
    std::ifstream mf(manifest_path(path));
    if (!mf) throw std::runtime_error("load_dataset: cannot open " + manifest_path(path));
    json manifest;
    try {
      mf >> manifest;
    } catch (const json::exception &e) {
      throw std::runtime_error("load_dataset: bad manifest " + manifest_path(path) + ": " +
                               e.what());
    }
    const std::string kind = manifest.at("kind").get<std::string>();
    if (kind == "solid")
      d.kind = DatasetKind::Solid;
    else if (kind == "fluid")
      d.kind = DatasetKind::Fluid;
    else
      throw std::runtime_error("load_dataset: unknown kind '" + kind + "'");
    d.dim = manifest.at("dim").get<int>();
    if (d.dim != 2 && d.dim != 3) throw std::runtime_error("load_dataset: dim must be 2 or 3");
    if (manifest.contains("label") && !manifest["label"].is_null())
      d.label = manifest["label"].get<double>();
  }

  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path);

  const auto expect_cols = column_names(d.kind, d.dim);
  const int ncol = static_cast<int>(expect_cols.size());
  std::string line;
  int line_no = 0;
  std::vector<std::string> fields;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    fields.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(fields.size()) != ncol) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected " << ncol << " fields, got " << fields.size();
      throw std::runtime_error(os.str());
    }

    if (line_no == 1) {
      for (int c = 0; c < ncol; ++c) {
        if (fields[static_cast<std::size_t>(c)] != expect_cols[static_cast<std::size_t>(c)]) {
          std::ostringstream os;
          os << path << ":1: expected column '" << expect_cols[static_cast<std::size_t>(c)]
             << "', got '" << fields[static_cast<std::size_t>(c)] << "'";
          throw std::runtime_error(os.str());
        }
      }
      continue;
    }

    const int n = ncol / 2;
    if (d.kind == DatasetKind::Solid) {
      SolidPoint p = SolidPoint::zero(d.dim);
      for (int c = 0; c < n; ++c)
        p.strain[c] = parse_double(fields[static_cast<std::size_t>(c)], path, line_no);
      for (int c = 0; c < n; ++c)
        p.stress[c] = parse_double(fields[static_cast<std::size_t>(n + c)], path, line_no);
      d.solid_points.push_back(std::move(p));
    } else {
      FluidPoint p = FluidPoint::zero(d.dim);
      for (int c = 0; c < n; ++c)
        p.grad_p[c] = parse_double(fields[static_cast<std::size_t>(c)], path, line_no);
      for (int c = 0; c < n; ++c)
        p.flux[c] = parse_double(fields[static_cast<std::size_t>(n + c)], path, line_no);
      d.fluid_points.push_back(std::move(p));
    }
  }
  if (line_no == 0) throw std::runtime_error(path + ":1: missing header row");

  embed_dataset(d, m);
  return d;
}

}  // namespace ddporo
