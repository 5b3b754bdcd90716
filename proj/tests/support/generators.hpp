#pragma once

// Hand-rolled random instance generators for property tests. All draws come
// from a caller-owned std::mt19937_64 so every failing case is reproducible
// from its seed.

#include <cstdint>
#include <random>

#include "drsr/matops.hpp"

namespace drsr::testing {

using Rng = std::mt19937_64;

Matrix gaussian_matrix(Rng& rng, int rows, int cols);
Vector gaussian_vector(Rng& rng, int n);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive bounds
double uniform_real(Rng& rng, double lo, double hi);

/// Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix).
Matrix random_orthogonal(Rng& rng, int dim);

SymMatrix random_symmetric(Rng& rng, int dim);

/// Positive definite with eigenvalues log-uniform in [1, condition].
SymMatrix random_spd(Rng& rng, int dim, double condition = 1e3);

/// Symmetric with zero trace.
SymMatrix random_traceless(Rng& rng, int dim, double scale = 1.0);

/// Positive definite with unit trace.
SymMatrix random_trace_one_pd(Rng& rng, int dim);

/// Orthonormal basis of a uniformly random d-subspace of R^D.
Matrix random_basis(Rng& rng, int ambient_dim, int subspace_dim);

}  // namespace drsr::testing
