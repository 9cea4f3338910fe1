#include "ddporo/mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace ddporo {

namespace {

constexpr double kGauss1 = 0.5773502691896257;  // 1/sqrt(3)

// Reference-node coordinates, VTK ordering.
const double kQuadRef[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
const double kHexRef[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                              {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};

// Local faces with outward orientation.
const int kQuadEdges[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
const int kHexFaces[6][4] = {{0, 3, 2, 1},   // z-
                             {4, 5, 6, 7},   // z+
                             {0, 1, 5, 4},   // y-
                             {2, 3, 7, 6},   // y+
                             {1, 2, 6, 5},   // x+
                             {3, 0, 4, 7}};  // x-

void shape_ref(int dim, const Eigen::VectorXd &xi, Eigen::VectorXd &N, Eigen::MatrixXd &dN) {
  if (dim == 2) {
    N.resize(4);
    dN.resize(4, 2);
    for (int a = 0; a < 4; ++a) {
      const double sx = kQuadRef[a][0], sy = kQuadRef[a][1];
      N[a] = 0.25 * (1.0 + sx * xi[0]) * (1.0 + sy * xi[1]);
      dN(a, 0) = 0.25 * sx * (1.0 + sy * xi[1]);
      dN(a, 1) = 0.25 * sy * (1.0 + sx * xi[0]);
    }
  } else {
    N.resize(8);
    dN.resize(8, 3);
    for (int a = 0; a < 8; ++a) {
      const double sx = kHexRef[a][0], sy = kHexRef[a][1], sz = kHexRef[a][2];
      const double fx = 1.0 + sx * xi[0], fy = 1.0 + sy * xi[1], fz = 1.0 + sz * xi[2];
      N[a] = 0.125 * fx * fy * fz;
      dN(a, 0) = 0.125 * sx * fy * fz;
      dN(a, 1) = 0.125 * sy * fx * fz;
      dN(a, 2) = 0.125 * sz * fx * fy;
    }
  }
}

}  // namespace

const std::vector<int> &Mesh::node_set(const std::string &name) const {
  const auto it = node_sets.find(name);
  if (it == node_sets.end()) throw std::invalid_argument("Mesh: no node set '" + name + "'");
  return it->second;
}

const std::vector<Face> &Mesh::face_set(const std::string &name) const {
  const auto it = face_sets.find(name);
  if (it == face_sets.end()) throw std::invalid_argument("Mesh: no face set '" + name + "'");
  return it->second;
}

Eigen::MatrixXd Mesh::element_coords(int elem) const {
  Eigen::MatrixXd c(nodes_per_elem(), dim);
  for (int a = 0; a < nodes_per_elem(); ++a) c.row(a) = nodes.row(elements(elem, a));
  return c;
}

QuadRule gauss_rule(int dim, int points_per_axis) {
  if (points_per_axis != 1 && points_per_axis != 2)
    throw std::invalid_argument("gauss_rule: 1 or 2 points per axis supported");
  std::vector<double> x, w;
  if (points_per_axis == 1) {
    x = {0.0};
    w = {2.0};
  } else {
    x = {-kGauss1, kGauss1};
    w = {1.0, 1.0};
  }
  QuadRule rule;
  const int n = points_per_axis;
  int total = 1;
  for (int d = 0; d < dim; ++d) total *= n;
  for (int i = 0; i < total; ++i) {
    Eigen::VectorXd p(dim);
    double weight = 1.0;
    int rem = i;
    for (int d = 0; d < dim; ++d) {
      const int j = rem % n;
      rem /= n;
      p[d] = x[static_cast<std::size_t>(j)];
      weight *= w[static_cast<std::size_t>(j)];
    }
    rule.points.push_back(p);
    rule.weights.push_back(weight);
  }
  return rule;
}

QuadRule face_quad_rule(int mesh_dim) { return gauss_rule(mesh_dim - 1, 2); }

ShapeEval shape_eval(const Mesh &mesh, int elem, const Eigen::VectorXd &xi) {
  Eigen::VectorXd N;
  Eigen::MatrixXd dN;
  shape_ref(mesh.dim, xi, N, dN);

  const Eigen::MatrixXd coords = mesh.element_coords(elem);
  const Eigen::MatrixXd J = coords.transpose() * dN;  // dim x dim, dx/dxi
  const double detJ = J.determinant();
  if (!(detJ > 0.0)) throw std::runtime_error("shape_eval: non-positive Jacobian determinant");

  ShapeEval s;
  s.N = N;
  s.B = dN * J.inverse();
  s.detJ = detJ;
  s.x = coords.transpose() * N;
  return s;
}

FaceEval face_shape_eval(const Mesh &mesh, const Face &face, const Eigen::VectorXd &xi) {
  FaceEval fe;
  if (mesh.dim == 2) {
    fe.N.resize(2);
    fe.N[0] = 0.5 * (1.0 - xi[0]);
    fe.N[1] = 0.5 * (1.0 + xi[0]);
    const Eigen::Vector2d a = mesh.nodes.row(face.nodes[0]);
    const Eigen::Vector2d b = mesh.nodes.row(face.nodes[1]);
    fe.detJ = 0.5 * (b - a).norm();
    fe.x = a * fe.N[0] + b * fe.N[1];
  } else {
    fe.N.resize(4);
    Eigen::MatrixXd dN(4, 2);
    for (int a = 0; a < 4; ++a) {
      const double sx = kQuadRef[a][0], sy = kQuadRef[a][1];
      fe.N[a] = 0.25 * (1.0 + sx * xi[0]) * (1.0 + sy * xi[1]);
      dN(a, 0) = 0.25 * sx * (1.0 + sy * xi[1]);
      dN(a, 1) = 0.25 * sy * (1.0 + sx * xi[0]);
    }
    Eigen::MatrixXd coords(4, 3);
    for (int a = 0; a < 4; ++a) coords.row(a) = mesh.nodes.row(face.nodes[a]);
    const Eigen::MatrixXd T = coords.transpose() * dN;  // 3 x 2 tangent map
    const Eigen::Vector3d t1 = T.col(0), t2 = T.col(1);
    fe.detJ = t1.cross(t2).norm();
    fe.x = coords.transpose() * fe.N;
  }
  return fe;
}

SymTensor2 small_strain(const Eigen::MatrixXd &u_elem, const Eigen::MatrixXd &B) {
  const Eigen::MatrixXd grad = u_elem.transpose() * B;  // dim x dim, du_i/dx_j
  return SymTensor2::from_matrix(grad);
}

void validate_mesh(const Mesh &mesh) {
  const int nn = mesh.n_nodes();
  for (int e = 0; e < mesh.n_elems(); ++e)
    for (int a = 0; a < mesh.nodes_per_elem(); ++a)
      if (mesh.elements(e, a) < 0 || mesh.elements(e, a) >= nn)
        throw std::runtime_error("validate_mesh: connectivity index out of range");
  const QuadRule rule = gauss_rule(mesh.dim, 2);
  for (int e = 0; e < mesh.n_elems(); ++e)
    for (const auto &xi : rule.points) shape_eval(mesh, e, xi);  // throws on detJ <= 0
}

namespace {

void add_boundary_sets_2d(Mesh &mesh, int nx, int ny, double x0, double y0, double W, double H) {
  auto node_id = [nx](int i, int j) { return j * (nx + 1) + i; };
  auto elem_id = [nx](int i, int j) { return j * nx + i; };
  const double tol = 1e-12 * (std::abs(W) + std::abs(H) + 1.0);
  (void)x0;
  (void)y0;
  (void)tol;

  auto &ns = mesh.node_sets;
  for (int j = 0; j <= ny; ++j) {
    ns["left"].push_back(node_id(0, j));
    ns["right"].push_back(node_id(nx, j));
  }
  for (int i = 0; i <= nx; ++i) {
    ns["bottom"].push_back(node_id(i, 0));
    ns["top"].push_back(node_id(i, ny));
  }

  auto make_face = [&mesh](int elem, int local_edge) {
    Face f;
    f.elem = elem;
    f.n_nodes = 2;
    f.nodes[0] = mesh.elements(elem, kQuadEdges[local_edge][0]);
    f.nodes[1] = mesh.elements(elem, kQuadEdges[local_edge][1]);
    return f;
  };
  for (int j = 0; j < ny; ++j) {
    mesh.face_sets["left"].push_back(make_face(elem_id(0, j), 3));
    mesh.face_sets["right"].push_back(make_face(elem_id(nx - 1, j), 1));
  }
  for (int i = 0; i < nx; ++i) {
    mesh.face_sets["bottom"].push_back(make_face(elem_id(i, 0), 0));
    mesh.face_sets["top"].push_back(make_face(elem_id(i, ny - 1), 2));
  }
}

}  // namespace

Mesh mesh_square(double W, double H, int nx, int ny, double x0, double y0) {
  if (nx < 1 || ny < 1 || !(W > 0.0) || !(H > 0.0))
    throw std::invalid_argument("mesh_square: invalid sizes or counts");
  Mesh mesh;
  mesh.dim = 2;
  mesh.nodes.resize((nx + 1) * (ny + 1), 2);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const int n = j * (nx + 1) + i;
      mesh.nodes(n, 0) = x0 + W * static_cast<double>(i) / nx;
      mesh.nodes(n, 1) = y0 + H * static_cast<double>(j) / ny;
    }
  mesh.elements.resize(nx * ny, 4);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int e = j * nx + i;
      mesh.elements(e, 0) = j * (nx + 1) + i;
      mesh.elements(e, 1) = j * (nx + 1) + i + 1;
      mesh.elements(e, 2) = (j + 1) * (nx + 1) + i + 1;
      mesh.elements(e, 3) = (j + 1) * (nx + 1) + i;
    }
  add_boundary_sets_2d(mesh, nx, ny, x0, y0, W, H);
  validate_mesh(mesh);
  return mesh;
}

Mesh mesh_terzaghi(double width, double height, int nx, int ny) {
  return mesh_square(width, height, nx, ny);
}

Mesh mesh_cube(double L, int n) {
  if (n < 1 || !(L > 0.0)) throw std::invalid_argument("mesh_cube: invalid size or count");
  Mesh mesh;
  mesh.dim = 3;
  const int nn = n + 1;
  mesh.nodes.resize(nn * nn * nn, 3);
  auto node_id = [nn](int i, int j, int k) { return (k * nn + j) * nn + i; };
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        const int id = node_id(i, j, k);
        mesh.nodes(id, 0) = -0.5 * L + L * static_cast<double>(i) / n;
        mesh.nodes(id, 1) = -0.5 * L + L * static_cast<double>(j) / n;
        mesh.nodes(id, 2) = -0.5 * L + L * static_cast<double>(k) / n;
      }
  mesh.elements.resize(n * n * n, 8);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int e = (k * n + j) * n + i;
        mesh.elements(e, 0) = node_id(i, j, k);
        mesh.elements(e, 1) = node_id(i + 1, j, k);
        mesh.elements(e, 2) = node_id(i + 1, j + 1, k);
        mesh.elements(e, 3) = node_id(i, j + 1, k);
        mesh.elements(e, 4) = node_id(i, j, k + 1);
        mesh.elements(e, 5) = node_id(i + 1, j, k + 1);
        mesh.elements(e, 6) = node_id(i + 1, j + 1, k + 1);
        mesh.elements(e, 7) = node_id(i, j + 1, k + 1);
      }

  auto &ns = mesh.node_sets;
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        const int id = node_id(i, j, k);
        const bool bdry = i == 0 || i == n || j == 0 || j == n || k == 0 || k == n;
        if (i == 0) ns["left"].push_back(id);
        if (i == n) ns["right"].push_back(id);
        if (j == 0) ns["front"].push_back(id);
        if (j == n) ns["back"].push_back(id);
        if (k == 0) ns["bottom"].push_back(id);
        if (k == n) ns["top"].push_back(id);
        if (bdry) ns["boundary"].push_back(id);
      }

  auto make_face = [&mesh](int elem, int local_face) {
    Face f;
    f.elem = elem;
    f.n_nodes = 4;
    for (int a = 0; a < 4; ++a) f.nodes[a] = mesh.elements(elem, kHexFaces[local_face][a]);
    return f;
  };
  auto elem_id = [n](int i, int j, int k) { return (k * n + j) * n + i; };
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      mesh.face_sets["left"].push_back(make_face(elem_id(0, j, k), 5));
      mesh.face_sets["right"].push_back(make_face(elem_id(n - 1, j, k), 4));
    }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      mesh.face_sets["front"].push_back(make_face(elem_id(i, 0, k), 2));
      mesh.face_sets["back"].push_back(make_face(elem_id(i, n - 1, k), 3));
    }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      mesh.face_sets["bottom"].push_back(make_face(elem_id(i, j, 0), 0));
      mesh.face_sets["top"].push_back(make_face(elem_id(i, j, n - 1), 1));
    }
  validate_mesh(mesh);
  return mesh;
}

Mesh mesh_footing(double W, double H, double W_l, int nx, int ny) {
  if (!(W_l > 0.0) || !(W_l < W)) throw std::invalid_argument("mesh_footing: need 0 < W_l < W");
  Mesh mesh = mesh_square(W, H, nx, ny);

  // Split the top boundary at the footing edge x = W_l. A face belongs to
  // the footing when its midpoint lies left of the edge; nodes at exactly
  // x = W_l belong to the footing (undrained under the rigid strip).
  const double tol = 1e-9 * W;
  std::vector<Face> footing, top_free;
  for (const Face &f : mesh.face_set("top")) {
    const double xm = 0.5 * (mesh.nodes(f.nodes[0], 0) + mesh.nodes(f.nodes[1], 0));
    (xm < W_l ? footing : top_free).push_back(f);
  }
  mesh.face_sets["footing"] = footing;
  mesh.face_sets["top_free"] = top_free;
  std::vector<int> fn, tn;
  for (int nid : mesh.node_set("top"))
    (mesh.nodes(nid, 0) <= W_l + tol ? fn : tn).push_back(nid);
  mesh.node_sets["footing"] = fn;
  mesh.node_sets["top_free"] = tn;
  return mesh;
}

Mesh mesh_plate_hole(double R, double half, int n_t, int n_r) {
  if (!(R > 0.0) || !(R < half)) throw std::invalid_argument("mesh_plate_hole: need 0 < R < half");
  if (n_t < 1 || n_r < 1) throw std::invalid_argument("mesh_plate_hole: invalid counts");

  Mesh mesh;
  mesh.dim = 2;
  const int nc = 4 * n_t;  // circumferential stations (closed ring)
  mesh.nodes.resize(nc * (n_r + 1), 2);
  auto node_id = [nc](int i, int j) { return j * nc + (i % nc); };

  // Station i: angle from the lower-right corner direction; the matching
  // square-perimeter point walks the four sides in the same order so the
  // radial blend lines do not cross.
  for (int i = 0; i < nc; ++i) {
    const double theta = -0.25 * M_PI + 2.0 * M_PI * static_cast<double>(i) / nc;
    const Eigen::Vector2d pc(R * std::cos(theta), R * std::sin(theta));
    const int side = i / n_t;
    const double s = static_cast<double>(i % n_t) / n_t;  // position along the side
    Eigen::Vector2d ps;
    switch (side) {
      case 0: ps = {half, -half + 2.0 * half * s}; break;   // right, going up
      case 1: ps = {half - 2.0 * half * s, half}; break;    // top, going left
      case 2: ps = {-half, half - 2.0 * half * s}; break;   // left, going down
      default: ps = {-half + 2.0 * half * s, -half}; break; // bottom, going right
    }
    for (int j = 0; j <= n_r; ++j) {
      const double t = static_cast<double>(j) / n_r;
      mesh.nodes.row(node_id(i, j)) = ((1.0 - t) * pc + t * ps).transpose();
    }
  }

  mesh.elements.resize(nc * n_r, 4);
  for (int j = 0; j < n_r; ++j)
    for (int i = 0; i < nc; ++i) {
      const int e = j * nc + i;
      mesh.elements(e, 0) = node_id(i, j);
      mesh.elements(e, 1) = node_id(i, j + 1);
      mesh.elements(e, 2) = node_id(i + 1, j + 1);
      mesh.elements(e, 3) = node_id(i + 1, j);
    }

  // Hole ring.
  for (int i = 0; i < nc; ++i) mesh.node_sets["hole"].push_back(node_id(i, 0));
  for (int i = 0; i < nc; ++i) {
    Face f;
    f.elem = i;  // elements of layer j = 0
    f.n_nodes = 2;
    // Local edge (3,0) runs between the two inner-ring nodes; flip to keep
    // the outward (into the hole) orientation consistent with the ring walk.
    f.nodes[0] = node_id(i + 1, 0);
    f.nodes[1] = node_id(i, 0);
    mesh.face_sets["hole"].push_back(f);
  }

  // Outer boundary, classified by side. Corner nodes belong to both sides.
  const char *side_name[4] = {"right", "top", "left", "bottom"};
  for (int side = 0; side < 4; ++side) {
    auto &nsd = mesh.node_sets[side_name[side]];
    for (int k = 0; k <= n_t; ++k) nsd.push_back(node_id(side * n_t + k, n_r));
    auto &fsd = mesh.face_sets[side_name[side]];
    for (int k = 0; k < n_t; ++k) {
      const int i = side * n_t + k;
      Face f;
      f.elem = (n_r - 1) * nc + i;
      f.n_nodes = 2;
      f.nodes[0] = node_id(i, n_r);
      f.nodes[1] = node_id(i + 1, n_r);
      fsd.push_back(f);
    }
  }
  validate_mesh(mesh);
  return mesh;
}

Mesh mesh_relaxation_cylinder(double R, double H, int n_xy, int n_z) {
  if (!(R > 0.0) || !(H > 0.0) || n_xy < 1 || n_z < 1)
    throw std::invalid_argument("mesh_relaxation_cylinder: invalid sizes or counts");

  Mesh mesh;
  mesh.dim = 3;
  const int nn = n_xy + 1;
  mesh.nodes.resize(nn * nn * (n_z + 1), 3);
  auto node_id = [nn](int i, int j, int k) { return (k * nn + j) * nn + i; };

  for (int k = 0; k <= n_z; ++k)
    for (int j = 0; j <= n_xy; ++j)
      for (int i = 0; i <= n_xy; ++i) {
        const double u = -1.0 + 2.0 * static_cast<double>(i) / n_xy;
        const double v = -1.0 + 2.0 * static_cast<double>(j) / n_xy;
        // Square-to-disk map; boundary |u| = 1 or |v| = 1 lands on the circle.
        const int id = node_id(i, j, k);
        mesh.nodes(id, 0) = R * u * std::sqrt(1.0 - 0.5 * v * v);
        mesh.nodes(id, 1) = R * v * std::sqrt(1.0 - 0.5 * u * u);
        mesh.nodes(id, 2) = H * static_cast<double>(k) / n_z;
      }

  mesh.elements.resize(n_xy * n_xy * n_z, 8);
  for (int k = 0; k < n_z; ++k)
    for (int j = 0; j < n_xy; ++j)
      for (int i = 0; i < n_xy; ++i) {
        const int e = (k * n_xy + j) * n_xy + i;
        mesh.elements(e, 0) = node_id(i, j, k);
        mesh.elements(e, 1) = node_id(i + 1, j, k);
        mesh.elements(e, 2) = node_id(i + 1, j + 1, k);
        mesh.elements(e, 3) = node_id(i, j + 1, k);
        mesh.elements(e, 4) = node_id(i, j, k + 1);
        mesh.elements(e, 5) = node_id(i + 1, j, k + 1);
        mesh.elements(e, 6) = node_id(i + 1, j + 1, k + 1);
        mesh.elements(e, 7) = node_id(i, j + 1, k + 1);
      }

  for (int k = 0; k <= n_z; ++k)
    for (int j = 0; j <= n_xy; ++j)
      for (int i = 0; i <= n_xy; ++i) {
        const int id = node_id(i, j, k);
        if (k == 0) mesh.node_sets["bottom"].push_back(id);
        if (k == n_z) mesh.node_sets["top"].push_back(id);
        if (i == 0 || i == n_xy || j == 0 || j == n_xy)
          mesh.node_sets["lateral"].push_back(id);
      }

  auto make_face = [&mesh](int elem, int local_face) {
    Face f;
    f.elem = elem;
    f.n_nodes = 4;
    for (int a = 0; a < 4; ++a) f.nodes[a] = mesh.elements(elem, kHexFaces[local_face][a]);
    return f;
  };
  auto elem_id = [n_xy](int i, int j, int k) { return (k * n_xy + j) * n_xy + i; };
  for (int j = 0; j < n_xy; ++j)
    for (int i = 0; i < n_xy; ++i) {
      mesh.face_sets["bottom"].push_back(make_face(elem_id(i, j, 0), 0));
      mesh.face_sets["top"].push_back(make_face(elem_id(i, j, n_z - 1), 1));
    }
  for (int k = 0; k < n_z; ++k)
    for (int t = 0; t < n_xy; ++t) {
      mesh.face_sets["lateral"].push_back(make_face(elem_id(0, t, k), 5));
      mesh.face_sets["lateral"].push_back(make_face(elem_id(n_xy - 1, t, k), 4));
      mesh.face_sets["lateral"].push_back(make_face(elem_id(t, 0, k), 2));
      mesh.face_sets["lateral"].push_back(make_face(elem_id(t, n_xy - 1, k), 3));
    }
  validate_mesh(mesh);
  return mesh;
}

}  // namespace ddporo
