#include <gtest/gtest.h>

#include <cmath>

#include "drsr/errors.hpp"
#include "drsr/matops.hpp"
#include "generators.hpp"

namespace drsr {
namespace {

using testing::Rng;

SymMatrix diag(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return SymMatrix::diagonal(v);
}

TEST(SymMatrix, RejectsAsymmetricInput) {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_THROW(SymMatrix{m}, PreconditionError);
  EXPECT_THROW(SymMatrix{Matrix::Ones(2, 3)}, PreconditionError);
}

TEST(SymMatrix, AveragesTinyAsymmetry) {
  Matrix m(2, 2);
  m << 1, 2, 2 + 1e-15, 4;
  const SymMatrix s(m);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(SpectralDecompose, DiagonalOrdersEigenvalues) {
  const SpectralDecomposition eig = spectral_decompose(diag({3, 1, 2}));
  EXPECT_DOUBLE_EQ(eig.eigenvalues(0), 1.0);
  EXPECT_DOUBLE_EQ(eig.eigenvalues(1), 2.0);
  EXPECT_DOUBLE_EQ(eig.eigenvalues(2), 3.0);
  // e2, e3, e1 with the sign rule making the nonzero entry positive.
  EXPECT_DOUBLE_EQ(eig.eigenvectors(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(eig.eigenvectors(2, 1), 1.0);
  EXPECT_DOUBLE_EQ(eig.eigenvectors(0, 2), 1.0);
}

TEST(SpectralDecompose, IdentityGivesOrthonormalBasis) {
  const SpectralDecomposition eig = spectral_decompose(SymMatrix::identity(4));
  EXPECT_TRUE(eig.eigenvalues.isApprox(Vector::Ones(4)));
  EXPECT_LE((eig.eigenvectors.transpose() * eig.eigenvectors - Matrix::Identity(4, 4)).norm(),
            1e-14);
}

TEST(SpectralDecompose, ReconstructsRandomSymmetric) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix s = testing::random_symmetric(rng, 20);
    const SpectralDecomposition eig = spectral_decompose(s);
    EXPECT_LE((eig.reconstruct() - s.matrix()).norm(), 1e-9);
    for (Eigen::Index j = 0; j < eig.eigenvectors.cols(); ++j) {
      Eigen::Index arg = 0;
      eig.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(eig.eigenvectors(arg, j), 0.0);
    }
  }
}

TEST(SpectralDecompose, RawMatrixMustBeSymmetric) {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  EXPECT_THROW(spectral_decompose(m), PreconditionError);
}

TEST(Lyapunov, IdentityCoefficient) {
  const SymMatrix p = solve_lyapunov(SymMatrix::identity(2), SymMatrix::identity(2));
  EXPECT_LE((p.matrix() - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Lyapunov, ZeroRightHandSide) {
  const SymMatrix p = solve_lyapunov(diag({1, 2}), SymMatrix::zero(2));
  EXPECT_EQ(p.frobenius_norm(), 0.0);
}

TEST(Lyapunov, OffDiagonalEntryDividesBySumOfEigenvalues) {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 1) = b(1, 0) = 3.0;
  const SymMatrix p = solve_lyapunov(diag({1, 2}), SymMatrix(b));
  EXPECT_NEAR(p(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(p(0, 0), 0.0, 1e-15);
}

TEST(Lyapunov, RejectsSingularCoefficient) {
  EXPECT_THROW(LyapunovSolver(diag({1, 0})), SingularCoefficientError);
  EXPECT_THROW(LyapunovSolver(diag({1, 1e-15})), SingularCoefficientError);
  EXPECT_THROW(LyapunovSolver(diag({-1, -2})), SingularCoefficientError);
}

TEST(Lyapunov, ResidualOnIllConditionedCoefficients) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = testing::uniform_int(rng, 2, 100);
    const SymMatrix x = testing::random_spd(rng, dim, 1e6);
    const SymMatrix b = testing::random_symmetric(rng, dim);
    const SymMatrix p = solve_lyapunov(x, b);
    const double residual =
        (p.matrix() * x.matrix() + x.matrix() * p.matrix() - b.matrix()).norm();
    EXPECT_LE(residual, 1e-10 * (1.0 + b.frobenius_norm())) << "dim " << dim;
  }
}

TEST(TraceOneLyapunov, IdentityWithZeroShift) {
  const TraceOneSolution sol = solve_trace_one_lyapunov(SymMatrix::identity(2), SymMatrix::zero(2));
  EXPECT_LE((sol.p.matrix() - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_NEAR(sol.c, 1.0, 1e-15);
}

TEST(TraceOneLyapunov, ScaledInverseWhenShiftIsZero) {
  const TraceOneSolution sol = solve_trace_one_lyapunov(diag({1, 2}), SymMatrix::zero(2));
  EXPECT_NEAR(sol.p(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(sol.p(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(sol.c, 4.0 / 3.0, 1e-15);
}

TEST(TraceOneLyapunov, TracelessShift) {
  const TraceOneSolution sol = solve_trace_one_lyapunov(SymMatrix::identity(2), diag({0.2, -0.2}));
  EXPECT_NEAR(sol.p(0, 0), 0.4, 1e-15);
  EXPECT_NEAR(sol.p(1, 1), 0.6, 1e-15);
  EXPECT_NEAR(sol.c, 1.0, 1e-15);
}

TEST(TraceOneLyapunov, RejectsShiftWithTrace) {
  EXPECT_THROW(solve_trace_one_lyapunov(SymMatrix::identity(2), diag({1, 0})), PreconditionError);
}

TEST(TraceOneLyapunov, SatisfiesShiftedEquationWithUnitTrace) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = testing::uniform_int(rng, 2, 30);
    const SymMatrix x = testing::random_spd(rng, dim, 1e4);
    const SymMatrix a = testing::random_traceless(rng, dim);
    const TraceOneSolution sol = solve_trace_one_lyapunov(x, a);
    EXPECT_NEAR(sol.p.trace(), 1.0, 1e-10);
    const Matrix residual = sol.p.matrix() * x.matrix() + x.matrix() * sol.p.matrix() +
                            a.matrix() - sol.c * Matrix::Identity(dim, dim);
    EXPECT_LE(residual.norm(), 1e-9 * (1.0 + a.frobenius_norm() + std::abs(sol.c)));
  }
}

// tr(P(c)) is affine in c with slope tr(X^-1) / 2.
TEST(TraceOneLyapunov, TraceSlopeProperty) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = testing::uniform_int(rng, 2, 20);
    const SymMatrix x = testing::random_spd(rng, dim, 1e3);
    const SymMatrix a = testing::random_traceless(rng, dim);
    const LyapunovSolver solver(x);
    const double c1 = testing::uniform_real(rng, -5, 5);
    const double c2 = c1 + testing::uniform_real(rng, 0.5, 5);
    const Matrix id = Matrix::Identity(dim, dim);
    const SymMatrix p1 = solver.solve(SymMatrix::symmetrized(c1 * id - a.matrix()));
    const SymMatrix p2 = solver.solve(SymMatrix::symmetrized(c2 * id - a.matrix()));
    const double slope = (p2.trace() - p1.trace()) / (c2 - c1);
    const double expected = x.matrix().inverse().trace() / 2.0;
    EXPECT_NEAR(slope, expected, 1e-8 * (1.0 + expected));
    EXPECT_NEAR(solver.trace_of_inverse(), 2.0 * expected, 1e-9 * expected);
  }
}

TEST(TraceOneLyapunov, EquivariantUnderOrthogonalConjugation) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = testing::uniform_int(rng, 2, 15);
    const SymMatrix x = testing::random_spd(rng, dim, 100);
    const SymMatrix a = testing::random_traceless(rng, dim, 0.1);
    const Matrix r = testing::random_orthogonal(rng, dim);
    const TraceOneSolution base = solve_trace_one_lyapunov(x, a);
    const TraceOneSolution rotated = solve_trace_one_lyapunov(
        SymMatrix::symmetrized(r * x.matrix() * r.transpose()),
        SymMatrix::symmetrized(r * a.matrix() * r.transpose()));
    EXPECT_LE((r * base.p.matrix() * r.transpose() - rotated.p.matrix()).norm(), 1e-9);
  }
}

TEST(PositiveDefinite, Basic) {
  EXPECT_TRUE(is_positive_definite(SymMatrix::identity(3)));
  EXPECT_FALSE(is_positive_definite(diag({1, 0})));
  EXPECT_FALSE(is_positive_definite(diag({1, -1e-3})));
}

TEST(FrobeniusDistance, MatchesNormOfDifference) {
  EXPECT_DOUBLE_EQ(frobenius_distance(diag({1, 0}), diag({0, 1})), std::sqrt(2.0));
}

}  // namespace
}  // namespace drsr
