// Structured meshes (quad4 / hex8), Gauss quadrature, isoparametric shape
// functions, and the small-strain operator. Each problem geometry ships as a
// generator that tags the boundary node and face sets its boundary
// conditions refer to.

#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddporo/kelvin.hpp"

namespace ddporo {

// Boundary face of an element: 2 nodes (edge) in 2D, 4 nodes in 3D, listed
// so the face normal points outward.
struct Face {
  int elem = -1;
  std::array<int, 4> nodes{-1, -1, -1, -1};
  int n_nodes = 0;
};

struct Mesh {
  int dim = 2;
  Eigen::MatrixXd nodes;     // n_nodes x dim coordinates (m)
  Eigen::MatrixXi elements;  // n_elems x nodes_per_elem connectivity
  std::map<std::string, std::vector<int>> node_sets;
  std::map<std::string, std::vector<Face>> face_sets;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elems() const { return static_cast<int>(elements.rows()); }
  int nodes_per_elem() const { return static_cast<int>(elements.cols()); }

  const std::vector<int> &node_set(const std::string &name) const;
  const std::vector<Face> &face_set(const std::string &name) const;

  // Coordinates of one element's nodes, nodes_per_elem x dim.
  Eigen::MatrixXd element_coords(int elem) const;
};

struct QuadRule {
  std::vector<Eigen::VectorXd> points;  // reference coordinates
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

// Tensor-product Gauss rule on [-1,1]^dim with 1 or 2 points per axis.
QuadRule gauss_rule(int dim, int points_per_axis);

struct ShapeEval {
  Eigen::VectorXd N;   // shape values
  Eigen::MatrixXd B;   // spatial gradients, nodes_per_elem x dim
  double detJ = 0.0;
  Eigen::VectorXd x;   // physical coordinates of the evaluation point
};

// Shape functions and spatial gradients of one element at a reference
// point. Throws on a non-positive Jacobian determinant.
ShapeEval shape_eval(const Mesh &mesh, int elem, const Eigen::VectorXd &xi);

// Shape values and surface measure on a boundary face at a reference point
// of the face (1D coordinate for edges, 2D for quad faces).
struct FaceEval {
  Eigen::VectorXd N;
  double detJ = 0.0;   // length/area measure
  Eigen::VectorXd x;
};
FaceEval face_shape_eval(const Mesh &mesh, const Face &face, const Eigen::VectorXd &xi);
QuadRule face_quad_rule(int mesh_dim);

// Symmetric gradient of the interpolated displacement; u_elem is
// nodes_per_elem x dim.
SymTensor2 small_strain(const Eigen::MatrixXd &u_elem, const Eigen::MatrixXd &B);

// Checks connectivity ranges and Jacobian positivity at the 2-point Gauss
// locations of every element; throws on violation.
void validate_mesh(const Mesh &mesh);

// Axis-aligned rectangle [x0, x0+W] x [y0, y0+H], nx x ny quads.
// Sets: left, right, bottom, top (nodes and faces).
Mesh mesh_square(double W, double H, int nx, int ny, double x0 = 0.0, double y0 = 0.0);

// Consolidation column, 0.1 m x 1 m by default, 1 x 20 elements.
Mesh mesh_terzaghi(double width = 0.1, double height = 1.0, int nx = 1, int ny = 20);

// Cube of edge L centered at the origin, n^3 hexes. Sets: the six sides
// plus a combined "boundary" set.
Mesh mesh_cube(double L, int n);

// Strip footing domain, W x H rectangle with the loaded strip of width W_l
// on the upper-left edge. Extra sets: footing / top_free (faces and nodes).
Mesh mesh_footing(double W, double H, double W_l, int nx, int ny);

// Square plate (side 2*half) with a central circular hole of radius R,
// meshed as a structured ring (O-grid) with n_t elements per quarter
// circumference and n_r radial layers. Sets: hole, left, right, bottom, top.
Mesh mesh_plate_hole(double R, double half, int n_t, int n_r);

// Circular cylinder of radius R and height H, meshed by mapping a
// structured square grid onto the cross-section, n_xy^2 x n_z hexes.
// Sets: bottom, top, lateral.
Mesh mesh_relaxation_cylinder(double R, double H, int n_xy, int n_z);

}  // namespace ddporo
