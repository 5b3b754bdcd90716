#include "drsr/matops.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "drsr/errors.hpp"

namespace drsr {

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw PreconditionError("SymMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", not square");
  }
  if (!m.allFinite()) throw PreconditionError("SymMatrix: non-finite entry");
  if (!is_symmetric(m)) throw PreconditionError("SymMatrix: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
  return SymMatrix(Matrix(0.5 * (m + m.transpose())), Raw{});
}

SymMatrix SymMatrix::zero(int dim) { return SymMatrix(Matrix::Zero(dim, dim), Raw{}); }

SymMatrix SymMatrix::identity(int dim) { return SymMatrix(Matrix::Identity(dim, dim), Raw{}); }

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  return SymMatrix(Matrix(diag.asDiagonal()), Raw{});
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  m_ -= o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

double frobenius_distance(const SymMatrix& a, const SymMatrix& b) {
  return (a.matrix() - b.matrix()).norm();
}

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomposition spectral_decompose(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix());
  if (solver.info() != Eigen::Success) {
    throw PreconditionError("spectral_decompose: eigensolver did not converge");
  }
  SpectralDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index j = 0; j < out.eigenvectors.cols(); ++j) {
    Eigen::Index arg = 0;
    out.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.eigenvectors(arg, j) < 0.0) out.eigenvectors.col(j) *= -1.0;
  }
  return out;
}

SpectralDecomposition spectral_decompose(const Matrix& m) {
  if (!is_symmetric(m)) throw PreconditionError("spectral_decompose: input is not symmetric");
  return spectral_decompose(SymMatrix(m));
}

LyapunovSolver::LyapunovSolver(const SymMatrix& coefficient)
    : LyapunovSolver(spectral_decompose(coefficient)) {}

LyapunovSolver::LyapunovSolver(SpectralDecomposition coefficient_eig)
    : eig_(std::move(coefficient_eig)) {
  const Vector& l = eig_.eigenvalues;
  const int n = eig_.dim();
  if (n == 0) throw PreconditionError("LyapunovSolver: empty coefficient");
  const double lo = l(0);
  const double hi = l(n - 1);
  if (!(hi > 0.0) || !(lo > 1e-14 * hi)) {
    throw SingularCoefficientError("Lyapunov coefficient is not positive definite (eigenvalues in [" +
                                   std::to_string(lo) + ", " + std::to_string(hi) + "])");
  }
  inv_denominator_.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) inv_denominator_(i, j) = 1.0 / (l(i) + l(j));
  }
  trace_inv_ = l.cwiseInverse().sum();
}

SymMatrix LyapunovSolver::solve_in_eigenbasis(const Matrix& rhs_tilde) const {
  const Matrix& v = eig_.eigenvectors;
  Matrix p_tilde = rhs_tilde.cwiseProduct(inv_denominator_);
  return SymMatrix::symmetrized(v * p_tilde * v.transpose());
}

SymMatrix LyapunovSolver::solve(const SymMatrix& rhs) const {
  const Matrix& v = eig_.eigenvectors;
  return solve_in_eigenbasis(v.transpose() * rhs.matrix() * v);
}

TraceOneSolution LyapunovSolver::solve_trace_one(const SymMatrix& a) const {
  if (a.dim() != dim()) throw PreconditionError("solve_trace_one: dimension mismatch");
  const double tr = a.trace();
  if (std::abs(tr) > 1e-8 * (1.0 + a.frobenius_norm())) {
    throw PreconditionError("solve_trace_one: tr(A) = " + std::to_string(tr) + " is not zero");
  }
  const Matrix& v = eig_.eigenvectors;
  const Matrix a_tilde = v.transpose() * a.matrix() * v;

  // Q* solves Q X + X Q = -A.
  const SymMatrix q_star = solve_in_eigenbasis(-a_tilde);
  const double c = 2.0 * (1.0 - q_star.trace()) / trace_inv_;

  Matrix rhs = -a_tilde;
  rhs.diagonal().array() += c;
  return TraceOneSolution{solve_in_eigenbasis(rhs), c};
}

SymMatrix solve_lyapunov(const SymMatrix& coefficient, const SymMatrix& rhs) {
  return LyapunovSolver(coefficient).solve(rhs);
}

TraceOneSolution solve_trace_one_lyapunov(const SymMatrix& coefficient,
                                          const SymMatrix& traceless) {
  return LyapunovSolver(coefficient).solve_trace_one(traceless);
}

bool is_positive_definite(const SymMatrix& s) {
  if (!s.matrix().allFinite()) return false;
  Eigen::LLT<Matrix> llt(s.matrix());
  return llt.info() == Eigen::Success;
}

}  // namespace drsr
