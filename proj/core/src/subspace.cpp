#include "drsr/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drsr/errors.hpp"

namespace drsr {

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  const auto d = basis_.cols();
  const auto ambient = basis_.rows();
  if (d < 1 || d > ambient - 1) {
    throw PreconditionError("subspace dimension " + std::to_string(d) + " outside 1.." +
                            std::to_string(ambient - 1));
  }
  const double deviation =
      (basis_.transpose() * basis_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (!(deviation <= 1e-10)) throw PreconditionError("subspace basis is not orthonormal");
}

Subspace Subspace::spanned_by(const Matrix& columns) {
  Eigen::HouseholderQR<Matrix> qr(columns);
  const Matrix thin = qr.householderQ() * Matrix::Identity(columns.rows(), columns.cols());
  return Subspace(thin);
}

Matrix Subspace::projector() const { return basis_ * basis_.transpose(); }

Vector Subspace::distances(const Matrix& points) const {
  const Matrix coords = points * basis_;
  return (points - coords * basis_.transpose()).rowwise().norm();
}

ExtractedSubspace extract_subspace(const SymMatrix& q, int d, EigenEnd which) {
  const int ambient = q.dim();
  if (d < 1 || d >= ambient) {
    throw PreconditionError("subspace dimension must satisfy 1 <= d < D");
  }
  const SpectralDecomposition eig = spectral_decompose(q);
  ExtractedSubspace out;
  if (which == EigenEnd::kBottom) {
    out.subspace = Subspace(eig.eigenvectors.leftCols(d));
    out.gap = eig.eigenvalues(d) - eig.eigenvalues(d - 1);
  } else {
    out.subspace = Subspace(eig.eigenvectors.rightCols(d).rowwise().reverse());
    out.gap = eig.eigenvalues(ambient - d) - eig.eigenvalues(ambient - d - 1);
  }
  out.degenerate = out.gap < 1e-12;
  return out;
}

double recovery_error(const Subspace& estimate, const Subspace& truth) {
  if (estimate.ambient_dim() != truth.ambient_dim() || estimate.dim() != truth.dim()) {
    throw PreconditionError("recovery error between subspaces of different shapes");
  }
  return (estimate.projector() - truth.projector()).norm();
}

Vector principal_angles(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim()) {
    throw PreconditionError("principal angles between subspaces of different shapes");
  }
  const Matrix residual = b.basis() - a.basis() * (a.basis().transpose() * b.basis());
  Eigen::JacobiSVD<Matrix> svd(residual);
  Vector angles = svd.singularValues().unaryExpr([](double s) { return std::asin(std::min(1.0, s)); });
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

double largest_principal_angle(const Subspace& a, const Subspace& b) {
  return principal_angles(a, b).maxCoeff();
}

}  // namespace drsr
