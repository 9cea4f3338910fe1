// Legacy ASCII VTK writer.
#include "ddporo/vtk.hpp"

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace ddporo {

namespace {

constexpr int kVtkQuad = 9;
constexpr int kVtkHexahedron = 12;

struct FileCloser {
  void operator()(std::FILE *f) const {
    if (f) std::fclose(f);
  }
};

void write_field(std::FILE *f, const VtkField &field) {
  const Eigen::Index rows = field.values.rows();
  const Eigen::Index cols = field.values.cols();
  if (cols == 1) {
    std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", field.name.c_str());
    for (Eigen::Index i = 0; i < rows; ++i) std::fprintf(f, "%.9g\n", field.values(i, 0));
  } else if (cols == 2 || cols == 3) {
    std::fprintf(f, "VECTORS %s double\n", field.name.c_str());
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double z = cols == 3 ? field.values(i, 2) : 0.0;
      std::fprintf(f, "%.9g %.9g %.9g\n", field.values(i, 0), field.values(i, 1), z);
    }
  } else {
    std::fprintf(f, "FIELD %s 1\n%s %d %d double\n", field.name.c_str(), field.name.c_str(),
                 static_cast<int>(cols), static_cast<int>(rows));
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index c = 0; c < cols; ++c)
        std::fprintf(f, "%.9g%s", field.values(i, c), c + 1 < cols ? " " : "\n");
  }
}

void check_rows(const std::vector<VtkField> &fields, Eigen::Index expected, const char *what) {
  for (const VtkField &field : fields) {
    if (field.values.rows() != expected)
      throw std::invalid_argument("vtk field '" + field.name + "' has " +
                                  std::to_string(field.values.rows()) + " rows, expected " +
                                  std::to_string(expected) + " (" + what + ")");
    if (field.values.cols() < 1)
      throw std::invalid_argument("vtk field '" + field.name + "' has no components");
  }
}

}  // namespace

void write_vtk(const std::string &path, const Mesh &mesh,
               const std::vector<VtkField> &point_fields,
               const std::vector<VtkField> &cell_fields, const std::string &title) {
  check_rows(point_fields, mesh.n_nodes(), "point field");
  check_rows(cell_fields, mesh.n_elems(), "cell field");

  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "w"));
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  std::FILE *f = file.get();

  std::fprintf(f, "# vtk DataFile Version 3.0\n%s\nASCII\nDATASET UNSTRUCTURED_GRID\n",
               title.c_str());

  std::fprintf(f, "POINTS %d double\n", mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double z = mesh.dim == 3 ? mesh.nodes(i, 2) : 0.0;
    std::fprintf(f, "%.9g %.9g %.9g\n", mesh.nodes(i, 0), mesh.nodes(i, 1), z);
  }

  const int npe = mesh.nodes_per_elem();
  std::fprintf(f, "CELLS %d %d\n", mesh.n_elems(), mesh.n_elems() * (npe + 1));
  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::fprintf(f, "%d", npe);
    for (int a = 0; a < npe; ++a) std::fprintf(f, " %d", mesh.elements(e, a));
    std::fprintf(f, "\n");
  }
  const int cell_type = mesh.dim == 3 ? kVtkHexahedron : kVtkQuad;
  std::fprintf(f, "CELL_TYPES %d\n", mesh.n_elems());
  for (int e = 0; e < mesh.n_elems(); ++e) std::fprintf(f, "%d\n", cell_type);

  if (!point_fields.empty()) {
    std::fprintf(f, "POINT_DATA %d\n", mesh.n_nodes());
    for (const VtkField &field : point_fields) write_field(f, field);
  }
  if (!cell_fields.empty()) {
    std::fprintf(f, "CELL_DATA %d\n", mesh.n_elems());
    for (const VtkField &field : cell_fields) write_field(f, field);
  }
  if (std::ferror(f)) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace ddporo
