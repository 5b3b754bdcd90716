#include "drsr/local_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "drsr/errors.hpp"

namespace drsr {
namespace {

// Descent gate with a few ulps of slack: near a minimizer the exact surrogate
// step can evaluate as a rounding-level increase.
bool no_worse(double candidate, double current) {
  return candidate <= current + 8.0 * std::numeric_limits<double>::epsilon() *
                                    std::max(std::abs(current), 1.0);
}

double huber(double r, double delta) { return r >= delta ? r : r * r / (2.0 * delta) + delta / 2.0; }

// Per-thread scratch for the N x D products of the inner loops. Reusing the
// storage avoids one large allocation and release per iteration.
Matrix& scratch(int slot) {
  thread_local Matrix buffers[2];
  return buffers[slot];
}

Vector projected_norms(const Matrix& points, const SymMatrix& q) {
  Matrix& product = scratch(0);
  product.resize(points.rows(), points.cols());
  product.noalias() = points * q.matrix();
  return product.rowwise().norm();
}

double smoothed_sum(const Vector& norms, double delta) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < norms.size(); ++i) total += huber(norms(i), delta);
  return total;
}

double trace_product(const SymMatrix& a, const SymMatrix& b) {
  return a.matrix().cwiseProduct(b.matrix()).sum();
}

SymMatrix weight_matrix_from_norms(const Matrix& points, const Vector& norms, double delta) {
  const Vector weights = (2.0 * norms.array().max(delta)).inverse();
  return weighted_scatter(points, weights);
}

bool trace_is_one(const SymMatrix& q) { return std::abs(q.trace() - 1.0) <= 1e-8; }

// Objective of the form F(Q) + extra(Q), where F is the smoothed sum of
// ||Q x|| and extra collects the linear and proximal terms. Each step solves
//   P (W(Q) + shift I) + (W(Q) + shift I) P + constant = c I,  tr P = 1.
struct ReweightedProblem {
  const LocalDataset& data;
  const SymMatrix& constant;
  double shift;
  std::function<double(const SymMatrix&)> extra;
};

SymMatrix reweighted_step(const ReweightedProblem& problem, const Vector& norms, double delta) {
  const int dim = problem.data.dim();
  SymMatrix coefficient = weight_matrix_from_norms(problem.data.points(), norms, delta);
  if (problem.shift != 0.0) coefficient += problem.shift * SymMatrix::identity(dim);
  const double mean_diag = problem.constant.trace() / dim;
  const SymMatrix traceless = problem.constant - mean_diag * SymMatrix::identity(dim);
  return LyapunovSolver(coefficient).solve_trace_one(traceless).p;
}

GmsReport run_reweighted(const ReweightedProblem& problem, const GmsParams& params,
                         const std::optional<SymMatrix>& start) {
  validate(params);
  const int dim = problem.data.dim();
  const double delta = params.delta;

  GmsReport report;
  if (params.warm_start && start) {
    if (start->dim() != dim) throw PreconditionError("warm start has the wrong dimension");
    report.q = *start;
  } else {
    report.q = SymMatrix::identity(dim) * (1.0 / dim);
  }

  Vector norms = projected_norms(problem.data.points(), report.q);
  double objective = smoothed_sum(norms, delta) + problem.extra(report.q);
  report.objective_history.push_back(objective);

  std::optional<SymMatrix> pending;  // last computed image T(Q) of the current Q
  for (int t = 0; t < params.t_gms; ++t) {
    SymMatrix candidate = reweighted_step(problem, norms, delta);
    if (!candidate.matrix().allFinite()) {
      throw NotPositiveDefiniteError("reweighted solve produced a non-finite iterate");
    }
    if (!is_positive_definite(candidate)) {
      ++report.non_pd_candidates;
      if (params.strict_positive_definite) {
        throw NotPositiveDefiniteError("candidate iterate " + std::to_string(t + 1) +
                                       " is not positive definite");
      }
    }
    Vector candidate_norms = projected_norms(problem.data.points(), candidate);
    const double candidate_objective = smoothed_sum(candidate_norms, delta) + problem.extra(candidate);
    if (!no_worse(candidate_objective, objective)) {
      report.stop = InnerStop::kNoDescent;
      pending = std::move(candidate);
      break;
    }
    const double decrease = objective - candidate_objective;
    report.q = std::move(candidate);
    norms = std::move(candidate_norms);
    objective = candidate_objective;
    report.objective_history.push_back(objective);
    ++report.iterations;
    if (params.relative_tolerance > 0.0 &&
        decrease <= params.relative_tolerance * std::max(std::abs(objective), 1e-300)) {
      report.stop = InnerStop::kConverged;
      break;
    }
  }

  if (!pending) pending = reweighted_step(problem, norms, delta);
  report.fixed_point_residual = frobenius_distance(*pending, report.q);

  if (!is_positive_definite(report.q)) {
    throw NotPositiveDefiniteError("returned iterate is not positive definite");
  }
  return report;
}

}  // namespace

// Symmetric rank-N update on sqrt(w)-scaled rows; about half the work of a GEMM.
SymMatrix weighted_scatter(const Matrix& points, const Vector& weights) {
  Matrix& scaled = scratch(1);
  scaled = points.array().colwise() * weights.array().sqrt();
  Matrix out = Matrix::Zero(points.cols(), points.cols());
  out.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return SymMatrix::symmetrized(out);
}

bool has_full_column_rank(const Matrix& points) {
  if (points.rows() < points.cols() || points.cols() == 0) return false;
  if (!points.allFinite()) return false;
  Eigen::BDCSVD<Matrix> svd(points);
  const Vector& sv = svd.singularValues();
  const double largest = sv(0);
  const double smallest = sv(sv.size() - 1);
  return largest > 0.0 && smallest > 1e-10 * largest;
}

LocalDataset::LocalDataset(Matrix points, Unchecked)
    : points_(std::move(points)), full_rank_(has_full_column_rank(points_)) {}

LocalDataset::LocalDataset(Matrix points) : LocalDataset(std::move(points), Unchecked{}) {
  if (!full_rank_) {
    throw RankDeficientError("local dataset with " + std::to_string(points_.rows()) +
                             " points in dimension " + std::to_string(points_.cols()) +
                             " is not full rank");
  }
}

LocalDataset LocalDataset::unchecked(Matrix points) {
  return LocalDataset(std::move(points), Unchecked{});
}

SymMatrix LocalDataset::scatter() const {
  return weighted_scatter(points_, Vector::Ones(points_.rows()));
}

bool LocalDataset::meets_two_subspaces_proxy() const {
  return size() >= 2 * dim() && full_rank_;
}

void validate(const GmsParams& params) {
  if (!(params.delta > 0.0)) throw ConfigError("delta must be positive");
  if (params.t_gms < 1) throw ConfigError("inner iteration cap must be at least 1");
  if (!(params.relative_tolerance >= 0.0)) throw ConfigError("relative tolerance must be non-negative");
}

std::string to_string(InnerStop stop) {
  switch (stop) {
    case InnerStop::kIterationCap: return "iteration-cap";
    case InnerStop::kNoDescent: return "no-descent";
    case InnerStop::kConverged: return "converged";
  }
  return "unknown";
}

SymMatrix gms_weight_matrix(const LocalDataset& data, const SymMatrix& q, double delta) {
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  if (!data.full_rank()) {
    throw RankDeficientError("weight matrix requested for a rank-deficient block");
  }
  return weight_matrix_from_norms(data.points(), projected_norms(data.points(), q), delta);
}

double gms_objective(const LocalDataset& data, const SymMatrix& q, const SymMatrix& a,
                     double delta) {
  if (!trace_is_one(q)) throw PreconditionError("objective requires a trace-one iterate");
  return smoothed_sum(projected_norms(data.points(), q), delta) + trace_product(q, a);
}

double gms_majorizer(const LocalDataset& data, const SymMatrix& q, const SymMatrix& anchor,
                     const SymMatrix& a, double delta) {
  if (!trace_is_one(q) || !trace_is_one(anchor)) {
    throw PreconditionError("majorizer requires trace-one arguments");
  }
  const Vector norms = projected_norms(data.points(), q);
  const Vector anchor_norms = projected_norms(data.points(), anchor).array().max(delta);
  const double quadratic =
      (norms.array().square() / (2.0 * anchor_norms.array()) + anchor_norms.array() / 2.0).sum();
  return quadratic + trace_product(q, a);
}

GmsReport gms_local_solve(const LocalDataset& data, const SymMatrix& a, const GmsParams& params,
                          const std::optional<SymMatrix>& start) {
  if (a.dim() != data.dim()) throw PreconditionError("dual matrix has the wrong dimension");
  if (std::abs(a.trace()) > 1e-8 * (1.0 + a.frobenius_norm())) {
    throw PreconditionError("dual matrix must be traceless");
  }
  if (!data.full_rank()) {
    throw RankDeficientError("local GMS solve on a rank-deficient block");
  }
  const ReweightedProblem problem{data, a, 0.0,
                                  [&a](const SymMatrix& q) { return trace_product(q, a); }};
  return run_reweighted(problem, params, start);
}

PcaLocalSolver::PcaLocalSolver(const LocalDataset& data)
    : scatter_(data.scatter()), solver_([&]() {
        if (!data.full_rank()) throw RankDeficientError("local PCA solve on a rank-deficient block");
        return LyapunovSolver(scatter_);
      }()) {}

SymMatrix PcaLocalSolver::solve(const SymMatrix& a) const { return solver_.solve_trace_one(a).p; }

double PcaLocalSolver::objective(const SymMatrix& q, const SymMatrix& a) const {
  // sum ||Q x||^2 = tr(Q S Q) for scatter S.
  return (q.matrix() * scatter_.matrix() * q.matrix()).trace() + trace_product(q, a);
}

SymMatrix pca_local_solve(const LocalDataset& data, const SymMatrix& a) {
  return PcaLocalSolver(data).solve(a);
}

double gmedian_objective(const Matrix& points, const Vector& y, const Vector& a, double delta) {
  const Vector distances = (points.rowwise() - y.transpose()).rowwise().norm();
  return smoothed_sum(distances, delta) + a.dot(y);
}

GmedianReport gmedian_local_solve(const Matrix& points, const Vector& a, double delta,
                                  int max_iter, const std::optional<Vector>& start) {
  if (points.rows() == 0) throw PreconditionError("geometric median of an empty block");
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  if (a.size() != points.cols()) throw PreconditionError("multiplier has the wrong dimension");
  if (max_iter < 1) throw PreconditionError("iteration cap must be at least 1");
  // Each distance term has gradient norm at most one, so a longer tilt wins at infinity.
  if (a.norm() >= static_cast<double>(points.rows())) {
    throw UnboundedLocalProblemError("multiplier norm " + std::to_string(a.norm()) +
                                     " reaches the point count " + std::to_string(points.rows()));
  }

  const Vector mean = points.colwise().mean().transpose();
  // Step tolerance tied to the spread of the block, so translating the data
  // translates the iterates without changing when the loop stops.
  const double spread = (points.rowwise() - mean.transpose()).rowwise().norm().maxCoeff();
  const double step_tolerance = 1e-13 * (spread > 0.0 ? spread : 1.0);

  GmedianReport report;
  report.y = start ? *start : mean;
  report.objective = gmedian_objective(points, report.y, a, delta);
  for (int s = 0; s < max_iter; ++s) {
    const Vector distances = (points.rowwise() - report.y.transpose()).rowwise().norm();
    const Vector weights = distances.array().max(delta).inverse();
    // Minimizer of the surrogate sum w_x ||x - y||^2 / 2 + a^T y.
    const Vector next = (points.transpose() * weights - a) / weights.sum();
    const double next_objective = gmedian_objective(points, next, a, delta);
    if (!no_worse(next_objective, report.objective)) break;
    const double step = (next - report.y).norm();
    report.y = next;
    report.objective = next_objective;
    ++report.iterations;
    if (step <= step_tolerance) break;
  }
  return report;
}

double cadmm_objective(const LocalDataset& data, const SymMatrix& q, const SymMatrix& z,
                       const std::vector<SymMatrix>& neighbor_qs, const SymMatrix& own_q_prev,
                       double rho, double delta) {
  double penalty = 0.0;
  for (const SymMatrix& qj : neighbor_qs) {
    penalty += (q.matrix() - 0.5 * (own_q_prev.matrix() + qj.matrix())).squaredNorm();
  }
  return smoothed_sum(projected_norms(data.points(), q), delta) + trace_product(q, z) +
         rho * penalty;
}

GmsReport cadmm_local_solve(const LocalDataset& data, const SymMatrix& z,
                            const std::vector<SymMatrix>& neighbor_qs, const SymMatrix& own_q_prev,
                            double rho, const GmsParams& params,
                            const std::optional<SymMatrix>& start) {
  if (!(rho >= 0.0)) throw PreconditionError("penalty parameter must be non-negative");
  if (z.dim() != data.dim() || own_q_prev.dim() != data.dim()) {
    throw PreconditionError("ADMM state has the wrong dimension");
  }
  if (!data.full_rank()) {
    throw RankDeficientError("local ADMM solve on a rank-deficient block");
  }
  SymMatrix constant = z;
  for (const SymMatrix& qj : neighbor_qs) {
    if (qj.dim() != data.dim()) throw PreconditionError("neighbor iterate has the wrong dimension");
    constant -= rho * (own_q_prev + qj);
  }
  const double shift = rho * static_cast<double>(neighbor_qs.size());
  const ReweightedProblem problem{
      data, constant, shift, [&](const SymMatrix& q) {
        double penalty = 0.0;
        for (const SymMatrix& qj : neighbor_qs) {
          penalty += (q.matrix() - 0.5 * (own_q_prev.matrix() + qj.matrix())).squaredNorm();
        }
        return trace_product(q, z) + rho * penalty;
      }};
  return run_reweighted(problem, params, start);
}

}  // namespace drsr
