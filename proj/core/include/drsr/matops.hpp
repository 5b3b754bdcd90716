#pragma once

// Dense symmetric linear algebra: symmetric matrices, ordered eigensystems and
// eigenbasis Lyapunov solves (PX + XP = B) for positive-definite X.

#include <utility>

#include <Eigen/Dense>

namespace drsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative tolerance used to accept a matrix as symmetric.
inline constexpr double kSymmetryTolerance = 1e-12;

/// True when |S_ij - S_ji| <= rel_tol * (1 + max|S|) for all i, j.
bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTolerance);

/// Square symmetric matrix. The stored entries are exactly symmetric: every
/// constructor averages (S + S^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Checked construction: throws PreconditionError unless `m` is square and
  /// symmetric within kSymmetryTolerance.
  explicit SymMatrix(const Matrix& m);

  /// Unchecked construction for values that are symmetric by construction
  /// (products like X^T W X) and only carry rounding asymmetry.
  static SymMatrix symmetrized(const Matrix& m);

  static SymMatrix zero(int dim);
  static SymMatrix identity(int dim);
  static SymMatrix diagonal(const Vector& diag);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double frobenius_norm() const { return m_.norm(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }

 private:
  struct Raw {};
  SymMatrix(Matrix m, Raw) : m_(std::move(m)) {}

  Matrix m_;
};

double frobenius_distance(const SymMatrix& a, const SymMatrix& b);

/// Eigensystem with ascending eigenvalues and orthonormal eigenvector columns.
/// Each eigenvector is sign-normalized so its largest-magnitude entry (first
/// one on ties) is positive, which makes downstream output reproducible.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  Matrix reconstruct() const;
};

SpectralDecomposition spectral_decompose(const SymMatrix& s);

/// Same as above for a raw matrix; throws PreconditionError if it is not symmetric.
SpectralDecomposition spectral_decompose(const Matrix& m);

/// Result of the trace-calibrated solve PX + XP + A = cI with tr(P) = 1.
struct TraceOneSolution {
  SymMatrix p;
  double c = 0.0;
};

/// Solves Lyapunov equations whose coefficient X is fixed, reusing one
/// eigendecomposition of X: in the eigenbasis the solution is B~_ij / (l_i + l_j).
class LyapunovSolver {
 public:
  /// Throws SingularCoefficientError when min eigenvalue <= 1e-14 * max eigenvalue
  /// (or the max is not positive).
  explicit LyapunovSolver(const SymMatrix& coefficient);
  explicit LyapunovSolver(SpectralDecomposition coefficient_eig);

  int dim() const { return eig_.dim(); }
  const SpectralDecomposition& decomposition() const { return eig_; }

  /// tr(X^-1), the slope factor relating c to tr(P).
  double trace_of_inverse() const { return trace_inv_; }

  /// P with PX + XP = rhs.
  SymMatrix solve(const SymMatrix& rhs) const;

  /// Two solves: first with c = 0 to get Q*, then with c' = 2(1 - tr Q*) / tr(X^-1).
  /// Throws PreconditionError if |tr A| > 1e-8 (1 + ||A||_F).
  TraceOneSolution solve_trace_one(const SymMatrix& a) const;

 private:
  SymMatrix solve_in_eigenbasis(const Matrix& rhs_tilde) const;

  SpectralDecomposition eig_;
  Matrix inv_denominator_;  // 1 / (l_i + l_j)
  double trace_inv_ = 0.0;
};

SymMatrix solve_lyapunov(const SymMatrix& coefficient, const SymMatrix& rhs);

TraceOneSolution solve_trace_one_lyapunov(const SymMatrix& coefficient,
                                          const SymMatrix& traceless);

/// Cholesky-based positive definiteness test.
bool is_positive_definite(const SymMatrix& s);

}  // namespace drsr
