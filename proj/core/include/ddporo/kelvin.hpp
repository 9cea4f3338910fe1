// Symmetric second- and fourth-order tensors in Kelvin (normalized Voigt)
// notation. The Kelvin map scales off-diagonal pairs by sqrt(2) so that the
// Euclidean dot product of two Kelvin vectors equals the full double
// contraction of the tensors, and fourth-order tensors act as plain matrices
// on Kelvin vectors.

#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Dense>

namespace ddporo {

// Number of independent components of a symmetric rank-2 tensor.
inline constexpr int kelvin_size(int dim) { return dim * (dim + 1) / 2; }

// Symmetric second-order tensor in 2 or 3 dimensions.
// Component storage order: 2D (11, 22, 12); 3D (11, 22, 33, 12, 23, 13).
// Off-diagonal entries are stored unscaled; the sqrt(2) factors appear only
// in the Kelvin vector produced by kelvin_vector().
struct SymTensor2 {
  int dim = 2;
  std::array<double, 6> c{};

  SymTensor2() = default;
  explicit SymTensor2(int d) : dim(d) { c.fill(0.0); }

  int size() const { return kelvin_size(dim); }

  double &operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  // Full-tensor component access, symmetric in (i, j).
  double operator()(int i, int j) const { return c[static_cast<std::size_t>(flat_index(i, j))]; }
  void set(int i, int j, double v) { c[static_cast<std::size_t>(flat_index(i, j))] = v; }

  int flat_index(int i, int j) const {
    if (i == j) return i;
    const int a = i < j ? i : j;
    const int b = i < j ? j : i;
    if (dim == 2) return 2;        // (0,1)
    if (a == 0 && b == 1) return 3;
    if (a == 1 && b == 2) return 4;
    return 5;                      // (0,2)
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < dim; ++i) t += c[static_cast<std::size_t>(i)];
    return t;
  }

  static SymTensor2 identity(int d) {
    SymTensor2 t(d);
    for (int i = 0; i < d; ++i) t.c[static_cast<std::size_t>(i)] = 1.0;
    return t;
  }

  static SymTensor2 zero(int d) { return SymTensor2(d); }

  SymTensor2 deviator() const {
    SymTensor2 t = *this;
    const double m = trace() / static_cast<double>(dim);
    for (int i = 0; i < dim; ++i) t.c[static_cast<std::size_t>(i)] -= m;
    return t;
  }

  SymTensor2 &operator+=(const SymTensor2 &o) {
    for (int i = 0; i < size(); ++i) c[static_cast<std::size_t>(i)] += o.c[static_cast<std::size_t>(i)];
    return *this;
  }
  SymTensor2 &operator-=(const SymTensor2 &o) {
    for (int i = 0; i < size(); ++i) c[static_cast<std::size_t>(i)] -= o.c[static_cast<std::size_t>(i)];
    return *this;
  }
  SymTensor2 &operator*=(double s) {
    for (int i = 0; i < size(); ++i) c[static_cast<std::size_t>(i)] *= s;
    return *this;
  }

  friend SymTensor2 operator+(SymTensor2 a, const SymTensor2 &b) { return a += b; }
  friend SymTensor2 operator-(SymTensor2 a, const SymTensor2 &b) { return a -= b; }
  friend SymTensor2 operator*(SymTensor2 a, double s) { return a *= s; }
  friend SymTensor2 operator*(double s, SymTensor2 a) { return a *= s; }

  Eigen::MatrixXd to_matrix() const {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  // Builds a symmetric tensor from a (possibly unsymmetric) matrix by
  // taking its symmetric part.
  static SymTensor2 from_matrix(const Eigen::MatrixXd &m) {
    SymTensor2 t(static_cast<int>(m.rows()));
    for (int i = 0; i < t.dim; ++i)
      for (int j = i; j < t.dim; ++j) t.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return t;
  }
};

// Kelvin vector of a symmetric tensor:
// [t11, t22, sqrt(2) t12] in 2D, [t11, t22, t33, sqrt(2) t12, sqrt(2) t23,
// sqrt(2) t13] in 3D.
Eigen::VectorXd kelvin_vector(const SymTensor2 &t);

// Inverse of kelvin_vector: recovers tensor components from a Kelvin vector.
SymTensor2 kelvin_inverse(int dim, const Eigen::VectorXd &v);

// Full double contraction a : b (sum over both indices), equal to the dot
// product of the two Kelvin vectors.
double double_contract(const SymTensor2 &a, const SymTensor2 &b);

// Symmetric fourth-order tensor with both minor symmetries, stored as its
// Kelvin matrix (kelvin_size x kelvin_size). Major symmetry corresponds to a
// symmetric matrix and is required by spd_factorize but not by apply().
struct SymTensor4 {
  int dim = 2;
  Eigen::MatrixXd k;

  SymTensor4() : k(Eigen::MatrixXd::Zero(3, 3)) {}
  explicit SymTensor4(int d) : dim(d), k(Eigen::MatrixXd::Zero(kelvin_size(d), kelvin_size(d))) {}
  SymTensor4(int d, Eigen::MatrixXd m) : dim(d), k(std::move(m)) {}

  int size() const { return kelvin_size(dim); }

  // Contraction with a symmetric second-order tensor: (K : t).
  SymTensor2 apply(const SymTensor2 &t) const { return kelvin_inverse(dim, k * kelvin_vector(t)); }

  // Identity on symmetric tensors (the symmetrizing fourth-order identity).
  static SymTensor4 identity(int d) {
    return SymTensor4(d, Eigen::MatrixXd::Identity(kelvin_size(d), kelvin_size(d)));
  }

  // Dyadic product I (x) I, i.e. (I(x)I) : t = tr(t) I.
  static SymTensor4 identity_dyad(int d) {
    const Eigen::VectorXd id = kelvin_vector(SymTensor2::identity(d));
    return SymTensor4(d, id * id.transpose());
  }

  // Deviatoric projector: P : t = dev(t).
  static SymTensor4 deviatoric_projector(int d) {
    SymTensor4 p = identity(d);
    p.k -= identity_dyad(d).k / static_cast<double>(d);
    return p;
  }

  // Dyadic product a (x) b of two symmetric second-order tensors.
  static SymTensor4 dyad(const SymTensor2 &a, const SymTensor2 &b) {
    return SymTensor4(a.dim, kelvin_vector(a) * kelvin_vector(b).transpose());
  }

  SymTensor4 &operator+=(const SymTensor4 &o) { k += o.k; return *this; }
  SymTensor4 &operator*=(double s) { k *= s; return *this; }
  friend SymTensor4 operator+(SymTensor4 a, const SymTensor4 &b) { return a += b; }
  friend SymTensor4 operator*(SymTensor4 a, double s) { return a *= s; }
  friend SymTensor4 operator*(double s, SymTensor4 a) { return a *= s; }
};

// Quadratic form t : K : t evaluated through Kelvin vectors (no 1/2 factor).
double quadratic_form(const SymTensor4 &K, const SymTensor2 &t);

enum class FactorKind { SymmetricSqrt, Cholesky };

// Factorization K = C^T C of a symmetric positive definite Kelvin matrix,
// together with the inverse factor used to map embedded coordinates back to
// tensor components.
struct SPDFactor {
  int dim = 0;
  FactorKind kind = FactorKind::SymmetricSqrt;
  Eigen::MatrixXd C;
  Eigen::MatrixXd C_inv;

  Eigen::VectorXd forward(const Eigen::VectorXd &v) const { return C * v; }
  Eigen::VectorXd backward(const Eigen::VectorXd &v) const { return C_inv * v; }
};

// Factorizes a symmetric positive definite fourth-order tensor (Kelvin
// matrix) as K = C^T C. SymmetricSqrt produces the unique symmetric square
// root; Cholesky produces the upper-triangular transpose factor. Throws
// std::invalid_argument if K is not symmetric or its smallest eigenvalue is
// not greater than 1e-12 times the largest.
SPDFactor spd_factorize(const SymTensor4 &K, FactorKind kind = FactorKind::SymmetricSqrt);

// Same factorization for a plain SPD matrix (used for the fluid metric
// blocks, which act on ordinary vectors rather than Kelvin vectors).
SPDFactor spd_factorize_matrix(int dim, const Eigen::MatrixXd &K,
                               FactorKind kind = FactorKind::SymmetricSqrt);

}  // namespace ddporo
