#include "ddporo/kelvin.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ddporo {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

Eigen::VectorXd kelvin_vector(const SymTensor2 &t) {
  const int n = t.size();
  Eigen::VectorXd v(n);
  for (int i = 0; i < t.dim; ++i) v[i] = t[i];
  for (int i = t.dim; i < n; ++i) v[i] = kSqrt2 * t[i];
  return v;
}

SymTensor2 kelvin_inverse(int dim, const Eigen::VectorXd &v) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("kelvin_inverse: dim must be 2 or 3");
  if (v.size() != kelvin_size(dim))
    throw std::invalid_argument("kelvin_inverse: vector length does not match dimension");
  SymTensor2 t(dim);
  for (int i = 0; i < dim; ++i) t[i] = v[i];
  for (int i = dim; i < t.size(); ++i) t[i] = v[i] / kSqrt2;
  return t;
}

double double_contract(const SymTensor2 &a, const SymTensor2 &b) {
  if (a.dim != b.dim) throw std::invalid_argument("double_contract: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
  for (int i = a.dim; i < a.size(); ++i) s += 2.0 * a[i] * b[i];
  return s;
}

double quadratic_form(const SymTensor4 &K, const SymTensor2 &t) {
  if (K.dim != t.dim) throw std::invalid_argument("quadratic_form: dimension mismatch");
  const Eigen::VectorXd v = kelvin_vector(t);
  return v.dot(K.k * v);
}

SPDFactor spd_factorize_matrix(int dim, const Eigen::MatrixXd &K, FactorKind kind) {
  if (K.rows() != K.cols()) throw std::invalid_argument("spd_factorize: matrix is not square");
  const double scale = K.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("spd_factorize: matrix is zero or not finite");
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("spd_factorize: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spd_factorize: eigendecomposition failed");
  const Eigen::VectorXd lam = es.eigenvalues();
  const double lam_max = lam.maxCoeff();
  const double lam_min = lam.minCoeff();
  if (!(lam_min > 1e-12 * lam_max))
    throw std::invalid_argument("spd_factorize: matrix is not positive definite enough");

  SPDFactor f;
  f.dim = dim;
  f.kind = kind;
  if (kind == FactorKind::SymmetricSqrt) {
    const Eigen::MatrixXd V = es.eigenvectors();
    f.C = V * lam.cwiseSqrt().asDiagonal() * V.transpose();
    f.C_inv = V * lam.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("spd_factorize: Cholesky factorization failed");
    // K = L L^T, so C = L^T gives K = C^T C.
    f.C = llt.matrixL().transpose();
    f.C_inv = f.C.inverse();
  }
  return f;
}

SPDFactor spd_factorize(const SymTensor4 &K, FactorKind kind) {
  return spd_factorize_matrix(K.dim, K.k, kind);
}

}  // namespace ddporo
