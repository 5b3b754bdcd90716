#pragma once

// Per-node subproblem solvers. Every routine here is a pure function of its
// arguments, so nodes can run them concurrently.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drsr/matops.hpp"

namespace drsr {

/// One node's points, stored as rows of an N x D matrix.
class LocalDataset {
 public:
  LocalDataset() = default;

  /// Throws RankDeficientError unless the smallest singular value of the
  /// point matrix exceeds 1e-10 times the largest (rank D).
  explicit LocalDataset(Matrix points);

  /// Skips the rank check. For solvers that do not need full rank
  /// (geometric median) and for tests that exercise failure paths.
  static LocalDataset unchecked(Matrix points);

  int size() const { return static_cast<int>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  const Matrix& points() const { return points_; }

  /// Rank test result, computed once at construction.
  bool full_rank() const { return full_rank_; }

  /// Sum of x x^T over the block.
  SymMatrix scatter() const;

  /// Full rank and at least 2D points. A cheap stand-in for the
  /// two-subspaces condition, which is impractical to verify exactly.
  bool meets_two_subspaces_proxy() const;

 private:
  struct Unchecked {};
  LocalDataset(Matrix points, Unchecked);

  Matrix points_;
  bool full_rank_ = false;
};

bool has_full_column_rank(const Matrix& points);

/// sum_i w_i x_i x_i^T over the rows x_i of `points` (weights must be >= 0).
SymMatrix weighted_scatter(const Matrix& points, const Vector& weights);

struct GmsParams {
  double delta = 1e-10;
  int t_gms = 30;
  /// Stop once an accepted step lowers the objective by at most this fraction
  /// of its value. Zero disables the test (stop only on the cap or no descent).
  double relative_tolerance = 1e-12;
  /// Start the inner loop from the caller-provided iterate instead of I/D.
  bool warm_start = false;
  /// Raise on any non-positive-definite candidate, not only on the returned iterate.
  bool strict_positive_definite = false;
};

void validate(const GmsParams& params);

enum class InnerStop { kIterationCap, kNoDescent, kConverged };

std::string to_string(InnerStop stop);

struct GmsReport {
  SymMatrix q;
  int iterations = 0;  // accepted updates
  InnerStop stop = InnerStop::kIterationCap;
  std::vector<double> objective_history;  // G at Q^0, Q^1, ..., Q^iterations
  double fixed_point_residual = 0.0;      // ||T(Q) - Q||_F at the returned Q
  int non_pd_candidates = 0;              // rejected or accepted candidates that were not PD
};

/// sum_x x x^T / (2 max(||Q x||, delta)).
SymMatrix gms_weight_matrix(const LocalDataset& data, const SymMatrix& q, double delta);

/// Huber-smoothed sum of ||Q x|| plus tr(Q A). Requires tr(Q) = 1 within 1e-8.
double gms_objective(const LocalDataset& data, const SymMatrix& q, const SymMatrix& a,
                     double delta);

/// Quadratic surrogate of gms_objective built at `anchor`; equals the
/// objective when q == anchor and lies above it elsewhere.
double gms_majorizer(const LocalDataset& data, const SymMatrix& q, const SymMatrix& anchor,
                     const SymMatrix& a, double delta);

/// Trace-one reweighted Lyapunov iteration for min_{tr Q = 1} F(Q) + tr(Q A).
/// Each step builds a candidate and keeps it only if the objective does not
/// increase. `start` is used only when params.warm_start is set.
GmsReport gms_local_solve(const LocalDataset& data, const SymMatrix& a, const GmsParams& params,
                          const std::optional<SymMatrix>& start = std::nullopt);

/// Closed-form minimizer of sum ||Q x||^2 + tr(Q A) over trace-one Q. The
/// scatter matrix's eigensystem is computed once and reused across calls.
class PcaLocalSolver {
 public:
  explicit PcaLocalSolver(const LocalDataset& data);

  SymMatrix solve(const SymMatrix& a) const;
  double objective(const SymMatrix& q, const SymMatrix& a) const;
  const SymMatrix& scatter() const { return scatter_; }

 private:
  SymMatrix scatter_;
  LyapunovSolver solver_;
};

SymMatrix pca_local_solve(const LocalDataset& data, const SymMatrix& a);

struct GmedianReport {
  Vector y;
  int iterations = 0;
  double objective = 0.0;
};

/// Smoothed sum of ||x - y|| plus a^T y.
double gmedian_objective(const Matrix& points, const Vector& y, const Vector& a, double delta);

/// Reweighted Weiszfeld iteration for the smoothed geometric median tilted by
/// the aggregate multiplier `a`. Starts at the block mean unless `start` is given.
/// Throws UnboundedLocalProblemError when ||a|| reaches the number of points.
GmedianReport gmedian_local_solve(const Matrix& points, const Vector& a, double delta,
                                  int max_iter, const std::optional<Vector>& start = std::nullopt);

/// Local problem of the consensus-ADMM scheme: the trace-one minimizer of
///   F(Q) + tr(Q Z) + rho * sum_j ||Q - (Q_prev + Q_j) / 2||_F^2
/// by the same descent-gated reweighted Lyapunov iteration as gms_local_solve.
GmsReport cadmm_local_solve(const LocalDataset& data, const SymMatrix& z,
                            const std::vector<SymMatrix>& neighbor_qs, const SymMatrix& own_q_prev,
                            double rho, const GmsParams& params,
                            const std::optional<SymMatrix>& start = std::nullopt);

double cadmm_objective(const LocalDataset& data, const SymMatrix& q, const SymMatrix& z,
                       const std::vector<SymMatrix>& neighbor_qs, const SymMatrix& own_q_prev,
                       double rho, double delta);

}  // namespace drsr
