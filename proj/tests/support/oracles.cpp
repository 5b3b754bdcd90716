#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace drsr::oracle {

double gms_objective(const Matrix& points, const Matrix& q, double delta) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double r = (q * points.row(i).transpose()).norm();
    total += r >= delta ? r : r * r / (2.0 * delta) + delta / 2.0;
  }
  return total;
}

CentralGms central_gms(const Matrix& points, double delta, int max_iter, double tol) {
  const Eigen::Index dim = points.cols();
  CentralGms out;
  out.q = Matrix::Identity(dim, dim) / static_cast<double>(dim);
  for (int it = 0; it < max_iter; ++it) {
    Matrix w = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Vector x = points.row(i).transpose();
      w += x * x.transpose() / std::max((out.q * x).norm(), delta);
    }
    const Matrix inv = w.inverse();
    Matrix next = inv / inv.trace();
    next = 0.5 * (next + next.transpose()).eval();
    const double step = (next - out.q).norm();
    out.q = next;
    out.iterations = it + 1;
    if (step <= tol) break;
  }
  out.objective = gms_objective(points, out.q, delta);
  return out;
}

Matrix bottom_eigenvectors(const Matrix& q, int d) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  return es.eigenvectors().leftCols(d);
}

Matrix top_right_singular_vectors(const Matrix& points, int d) {
  Eigen::JacobiSVD<Matrix> svd(points, Eigen::ComputeThinV);
  return svd.matrixV().leftCols(d);
}

Vector principal_angles_acos(const Matrix& basis_a, const Matrix& basis_b) {
  Eigen::JacobiSVD<Matrix> svd(basis_a.transpose() * basis_b);
  Vector cosines = svd.singularValues().cwiseMin(1.0);
  Vector angles(cosines.size());
  for (Eigen::Index i = 0; i < cosines.size(); ++i) angles(i) = std::acos(cosines(i));
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

double smoothed_distance_sum(const Matrix& points, const Vector& y, double delta) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double r = (points.row(i).transpose() - y).norm();
    total += r >= delta ? r : r * r / (2.0 * delta) + delta / 2.0;
  }
  return total;
}

Vector weiszfeld(const Matrix& points, double delta, int max_iter, double tol) {
  Vector y = points.colwise().mean().transpose();
  for (int it = 0; it < max_iter; ++it) {
    Vector num = Vector::Zero(y.size());
    double den = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Vector x = points.row(i).transpose();
      const double w = 1.0 / std::max((x - y).norm(), delta);
      num += w * x;
      den += w;
    }
    const Vector next = num / den;
    const double step = (next - y).norm();
    y = next;
    if (step <= tol * (1.0 + y.norm())) break;
  }
  return y;
}

Vector grid_search_median_2d(const Matrix& points, double lo, double hi, double delta) {
  Vector best(2);
  best << lo, lo;
  double best_value = smoothed_distance_sum(points, best, delta);
  double x_lo = lo, x_hi = hi, y_lo = lo, y_hi = hi;
  constexpr int kCells = 200;
  for (int round = 0; round < 6; ++round) {
    const double hx = (x_hi - x_lo) / kCells;
    const double hy = (y_hi - y_lo) / kCells;
    for (int i = 0; i <= kCells; ++i) {
      for (int j = 0; j <= kCells; ++j) {
        Vector y(2);
        y << x_lo + i * hx, y_lo + j * hy;
        const double v = smoothed_distance_sum(points, y, delta);
        if (v < best_value) {
          best_value = v;
          best = y;
        }
      }
    }
    x_lo = best(0) - 2 * hx;
    x_hi = best(0) + 2 * hx;
    y_lo = best(1) - 2 * hy;
    y_hi = best(1) + 2 * hy;
  }
  return best;
}

Matrix reaper_projector_closed_form(const Matrix& second_moment, int d) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(second_moment);
  const Eigen::Index dim = second_moment.rows();
  // Descending order.
  std::vector<Eigen::Index> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  Vector nu = Vector::Zero(dim);
  double inverse_sum = 0.0;
  for (Eigen::Index m = 1; m <= dim; ++m) {
    const double lambda_m = es.eigenvalues()(order[m - 1]);
    if (lambda_m <= 0.0) break;
    inverse_sum += 1.0 / lambda_m;
    if (m <= d) continue;
    const double theta = static_cast<double>(m - d) / inverse_sum;
    const double next = m < dim ? es.eigenvalues()(order[m]) : 0.0;
    if (theta < lambda_m && theta >= next) {
      for (Eigen::Index i = 0; i < m; ++i) {
        nu(order[i]) = 1.0 - theta / es.eigenvalues()(order[i]);
      }
      break;
    }
  }
  return es.eigenvectors() * nu.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

Matrix top_eigenvectors(const Matrix& s, int d) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvectors().rightCols(d);
}

}  // namespace

CentralIrls central_reaper(const Matrix& points, int d, int iterations, double delta) {
  Vector weights = Vector::Ones(points.rows());
  Matrix projector;
  for (int it = 0; it < iterations; ++it) {
    const Matrix moment = points.transpose() * weights.asDiagonal() * points;
    projector = reaper_projector_closed_form(moment, d);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Vector x = points.row(i).transpose();
      weights(i) = 1.0 / std::max(delta, (x - projector * x).norm());
    }
  }
  return {top_eigenvectors(projector, d), projector};
}

CentralIrls central_fms(const Matrix& points, int d, int iterations, double delta) {
  Matrix basis = top_right_singular_vectors(points, d);
  for (int it = 0; it < iterations; ++it) {
    Vector root_weights(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Vector x = points.row(i).transpose();
      const double dist = (x - basis * (basis.transpose() * x)).norm();
      root_weights(i) = 1.0 / std::sqrt(std::max(dist, delta));
    }
    basis = top_right_singular_vectors(root_weights.asDiagonal() * points, d);
  }
  return {basis, basis * basis.transpose()};
}

std::vector<Matrix> dual_aggregates_via_edges(int node_count,
                                              const std::vector<std::pair<int, int>>& edges,
                                              std::vector<Matrix>& lambdas,
                                              const std::vector<Matrix>& qs, double mu) {
  const Eigen::Index dim = qs.front().rows();
  for (std::size_t m = 0; m < edges.size(); ++m) {
    const auto [low, high] = edges[m];
    lambdas[m] += mu * (qs[low - 1] - qs[high - 1]);
  }
  std::vector<Matrix> aggregates(node_count, Matrix::Zero(dim, dim));
  for (std::size_t m = 0; m < edges.size(); ++m) {
    const auto [low, high] = edges[m];
    aggregates[low - 1] += lambdas[m];
    aggregates[high - 1] -= lambdas[m];
  }
  return aggregates;
}

double truncation_error_from_spectrum(const Matrix& q, int d) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  const Vector& lambda = es.eigenvalues();  // ascending
  const Eigen::Index dim = lambda.size();
  double sq = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double kept = i >= dim - d ? 1.0 / d : 0.0;
    sq += (lambda(i) - kept) * (lambda(i) - kept);
  }
  return std::sqrt(sq);
}

}  // namespace drsr::oracle
