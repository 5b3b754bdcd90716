#pragma once

#include "drsr/matops.hpp"

namespace drsr {

/// A d-dimensional linear subspace of R^D held by an orthonormal basis.
class Subspace {
 public:
  Subspace() = default;

  /// Requires orthonormal columns (within 1e-10) and 1 <= d <= D - 1.
  explicit Subspace(Matrix basis);

  /// Orthonormalizes an arbitrary full-column-rank spanning set by QR.
  static Subspace spanned_by(const Matrix& columns);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  /// Orthoprojector B B^T.
  Matrix projector() const;

  /// Euclidean distance from each row of `points` to the subspace.
  Vector distances(const Matrix& points) const;

 private:
  Matrix basis_;
};

enum class EigenEnd { kBottom, kTop };

struct ExtractedSubspace {
  Subspace subspace;
  /// Gap between the last kept and the first dropped eigenvalue.
  double gap = 0.0;
  /// Set when gap < 1e-12: the subspace is then a deterministic but arbitrary pick.
  bool degenerate = false;
};

/// Span of the d smallest (kBottom) or largest (kTop) eigenvectors.
ExtractedSubspace extract_subspace(const SymMatrix& q, int d, EigenEnd which);

/// Frobenius norm of the projector difference, in [0, sqrt(2d)].
double recovery_error(const Subspace& estimate, const Subspace& truth);

/// Principal angles in ascending order, computed from sines so that small
/// angles keep full relative precision.
Vector principal_angles(const Subspace& a, const Subspace& b);

double largest_principal_angle(const Subspace& a, const Subspace& b);

}  // namespace drsr
