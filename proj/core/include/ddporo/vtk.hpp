// Legacy ASCII VTK export of meshes and nodal/element fields.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddporo/mesh.hpp"

namespace ddporo {

// One named output field. `values` has one row per node (point field) or per
// element (cell field); the column count sets how the field is written:
// 1 column -> SCALARS, 2 or 3 -> VECTORS (z padded with zero), anything
// else -> a FIELD array with that many components.
struct VtkField {
  std::string name;
  Eigen::MatrixXd values;
};

// Writes a legacy ASCII UNSTRUCTURED_GRID file. Row counts of the fields must
// match the mesh; throws std::invalid_argument otherwise and
// std::runtime_error when the file cannot be written.
void write_vtk(const std::string &path, const Mesh &mesh,
               const std::vector<VtkField> &point_fields,
               const std::vector<VtkField> &cell_fields,
               const std::string &title = "ddporo output");

}  // namespace ddporo
