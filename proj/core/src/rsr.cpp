#include "drsr/rsr.hpp"

#include <algorithm>
#include <cmath>

#include "drsr/errors.hpp"

namespace drsr {
namespace {

std::string engine_name(GmsEngine engine) {
  return engine == GmsEngine::kCbga ? "gms-cbga" : "gms-cadmm";
}

void check_shapes(const PartitionedDataset& data, const NetworkGraph& graph, int subspace_dim) {
  data.check();
  if (data.block_count() != graph.node_count()) {
    throw ConfigError("dataset has " + std::to_string(data.block_count()) + " blocks but the network has " +
                      std::to_string(graph.node_count()) + " nodes");
  }
  if (subspace_dim < 1 || subspace_dim >= data.ambient_dim) {
    throw ConfigError("subspace dimension must satisfy 1 <= d < D");
  }
}

void finish_from_iterates(RsrResult& out, const std::vector<NodeState>& nodes, int subspace_dim,
                          EigenEnd which) {
  for (const auto& node : nodes) {
    ExtractedSubspace ex = extract_subspace(node.q, subspace_dim, which);
    out.per_node_subspaces.push_back(std::move(ex.subspace));
    out.degenerate_gap.push_back(ex.degenerate);
    out.per_node_q.push_back(node.q);
  }
}

std::vector<SymMatrix> local_scatters(const PartitionedDataset& data,
                                      const std::vector<Vector>* weights) {
  std::vector<SymMatrix> out;
  out.reserve(data.blocks.size());
  for (std::size_t k = 0; k < data.blocks.size(); ++k) {
    const Matrix& block = data.blocks[k];
    out.push_back(weighted_scatter(block, weights ? (*weights)[k] : Vector::Ones(block.rows())));
  }
  return out;
}

void record_identical(RsrResult& out, int s, int node_count, const Subspace& estimate,
                      const std::optional<Subspace>& truth, const std::vector<double>& objectives) {
  std::optional<double> error;
  if (truth) error = recovery_error(estimate, *truth);
  for (int k = 1; k <= node_count; ++k) {
    out.diagnostics.push_back(DiagnosticRecord{out.algorithm, s, k, error, objectives[k - 1], 0.0});
  }
}

}  // namespace

nlohmann::json RsrResult::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t k = 0; k < per_node_subspaces.size(); ++k) {
    const Matrix& basis = per_node_subspaces[k].basis();
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      std::vector<double> row(basis.cols());
      for (Eigen::Index j = 0; j < basis.cols(); ++j) row[j] = basis(i, j);
      rows.push_back(row);
    }
    nodes.push_back({{"k", k + 1},
                     {"basis", std::move(rows)},
                     {"degenerate_gap", k < degenerate_gap.size() && degenerate_gap[k]}});
  }
  return {{"algorithm", algorithm}, {"step_size", step_size},   {"step_halvings", step_halvings},
          {"iterations", iterations}, {"flood_supersteps", flood_supersteps}, {"nodes", nodes}};
}

std::vector<double> per_node_errors(const RsrResult& result, const Subspace& truth) {
  std::vector<double> out;
  for (const auto& s : result.per_node_subspaces) out.push_back(recovery_error(s, truth));
  return out;
}

RsrResult distributed_gms(const PartitionedDataset& data, const NetworkGraph& graph,
                          int subspace_dim, GmsEngine engine, const ConsensusConfig& cfg,
                          const GmsParams& params, const std::optional<Subspace>& truth) {
  check_shapes(data, graph, subspace_dim);
  const std::vector<LocalDataset> datasets = to_local_datasets(data);
  RsrResult out;
  out.algorithm = engine_name(engine);
  SubspaceTraceMonitor monitor(out.algorithm, graph, subspace_dim, EigenEnd::kBottom, truth);
  const ConsensusResult<SymMatrix> run = engine == GmsEngine::kCbga
                                             ? cbga_gms_run(datasets, graph, cfg, params, &monitor)
                                             : cadmm_run(datasets, graph, cfg, params, &monitor);
  finish_from_iterates(out, run.nodes, subspace_dim, EigenEnd::kBottom);
  out.diagnostics = monitor.take_records();
  out.step_size = run.step_size;
  out.step_halvings = run.halvings;
  out.iterations = cfg.t_outer;
  return out;
}

FloodResult flood_sum(const std::vector<SymMatrix>& local, const NetworkGraph& graph) {
  const int node_count = graph.node_count();
  if (static_cast<int>(local.size()) != node_count) {
    throw ConfigError("flood input count does not match the network size");
  }
  // known[k][j]: node k + 1 holds the contribution of node j + 1.
  std::vector<std::vector<char>> known(node_count, std::vector<char>(node_count, 0));
  for (int k = 0; k < node_count; ++k) known[k][k] = 1;

  FloodResult out;
  for (;;) {
    std::vector<std::vector<char>> next = known;
    bool changed = false;
    for (int k = 1; k <= node_count; ++k) {
      for (int q : graph.neighbors(k)) {
        for (int j = 0; j < node_count; ++j) {
          if (known[q - 1][j] && !next[k - 1][j]) {
            next[k - 1][j] = 1;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
    known = std::move(next);
    ++out.supersteps;
  }

  for (int k = 0; k < node_count; ++k) {
    SymMatrix total = SymMatrix::zero(local.front().dim());
    for (int j = 0; j < node_count; ++j) {
      if (!known[k][j]) {
        throw ProtocolError("node " + std::to_string(k + 1) + " never received the block of node " +
                            std::to_string(j + 1) + "; the network is disconnected");
      }
      total += local[j];
    }
    out.totals.push_back(std::move(total));
  }
  return out;
}

RsrResult distributed_pca_exact(const PartitionedDataset& data, const NetworkGraph& graph,
                                int subspace_dim, const std::optional<Subspace>& truth) {
  check_shapes(data, graph, subspace_dim);
  const FloodResult flood = flood_sum(local_scatters(data, nullptr), graph);
  RsrResult out;
  out.algorithm = "pca-exact";
  out.flood_supersteps = flood.supersteps;
  out.iterations = 1;
  for (const SymMatrix& total : flood.totals) {
    ExtractedSubspace ex = extract_subspace(total, subspace_dim, EigenEnd::kTop);
    out.per_node_subspaces.push_back(std::move(ex.subspace));
    out.degenerate_gap.push_back(ex.degenerate);
  }
  std::vector<double> objectives(graph.node_count(), 0.0);
  for (int k = 0; k < graph.node_count(); ++k) {
    objectives[k] = out.per_node_subspaces[k].distances(data.blocks[k]).squaredNorm();
  }
  if (truth) {
    for (int k = 1; k <= graph.node_count(); ++k) {
      out.diagnostics.push_back(DiagnosticRecord{out.algorithm, 1, k,
                                                 recovery_error(out.per_node_subspaces[k - 1], *truth),
                                                 objectives[k - 1], 0.0});
    }
  }
  return out;
}

double laplacian_spectral_radius(const NetworkGraph& graph) {
  const int n = graph.node_count();
  Matrix laplacian = Matrix::Zero(n, n);
  for (const Edge& e : graph.edges()) {
    laplacian(e.low - 1, e.low - 1) += 1.0;
    laplacian(e.high - 1, e.high - 1) += 1.0;
    laplacian(e.low - 1, e.high - 1) -= 1.0;
    laplacian(e.high - 1, e.low - 1) -= 1.0;
  }
  return Eigen::SelfAdjointEigenSolver<Matrix>(laplacian, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

double pca_step_size(const std::vector<LocalDataset>& datasets, const NetworkGraph& graph) {
  const double radius = laplacian_spectral_radius(graph);
  if (!(radius > 0.0)) throw ConfigError("step size is undefined on a network without edges");
  double curvature = std::numeric_limits<double>::infinity();
  for (const auto& data : datasets) {
    curvature = std::min(curvature, spectral_decompose(data.scatter()).eigenvalues(0));
  }
  return 2.0 * curvature / radius;
}

RsrResult distributed_pca_cbga(const PartitionedDataset& data, const NetworkGraph& graph,
                               int subspace_dim, const ConsensusConfig& cfg,
                               const std::optional<Subspace>& truth) {
  check_shapes(data, graph, subspace_dim);
  const std::vector<LocalDataset> datasets = to_local_datasets(data);
  std::vector<PcaLocalSolver> solvers;
  solvers.reserve(datasets.size());
  for (const auto& d : datasets) solvers.emplace_back(d);

  const LocalSolveFn<SymMatrix> solve = [&](int node, const SymMatrix& a, const SymMatrix*) {
    const PcaLocalSolver& solver = solvers[node - 1];
    SymMatrix q = solver.solve(a);
    const double objective = solver.objective(q, a);
    return LocalSolution<SymMatrix>{std::move(q), objective};
  };

  RsrResult out;
  out.algorithm = "pca-cbga";
  SubspaceTraceMonitor monitor(out.algorithm, graph, subspace_dim, EigenEnd::kBottom, truth);
  const auto run = cbga_run(solve, SymMatrix::zero(data.ambient_dim), graph, cfg, &monitor);
  finish_from_iterates(out, run.nodes, subspace_dim, EigenEnd::kBottom);
  out.diagnostics = monitor.take_records();
  out.step_size = run.step_size;
  out.step_halvings = run.halvings;
  out.iterations = cfg.t_outer;
  return out;
}

SymMatrix reaper_projector(const SymMatrix& second_moment, int subspace_dim) {
  const int dim = second_moment.dim();
  if (subspace_dim < 1 || subspace_dim >= dim) {
    throw PreconditionError("subspace dimension must satisfy 1 <= d < D");
  }
  const SpectralDecomposition eig = spectral_decompose(second_moment);
  const Vector& lambda = eig.eigenvalues;
  const double top = lambda.maxCoeff();
  const auto positive = (lambda.array() > 1e-14 * std::max(top, 0.0)).count();
  if (positive < subspace_dim) {
    throw RankDeficientError("weighted second moment has rank below the subspace dimension");
  }
  auto calibrated = [&](double theta) {
    Vector nu(dim);
    for (int i = 0; i < dim; ++i) {
      nu(i) = lambda(i) > 1e-14 * top ? std::clamp(1.0 - theta / lambda(i), 0.0, 1.0) : 0.0;
    }
    return nu;
  };
  double lo = 0.0;
  double hi = top;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * top; ++it) {
    const double mid = 0.5 * (lo + hi);
    (calibrated(mid).sum() > subspace_dim ? lo : hi) = mid;
  }
  const Vector nu = calibrated(0.5 * (lo + hi));
  return SymMatrix::symmetrized(eig.eigenvectors * nu.asDiagonal() * eig.eigenvectors.transpose());
}

Vector reaper_weights(const Matrix& points, const SymMatrix& projector, double delta) {
  const Matrix residual = points - points * projector.matrix();
  return residual.rowwise().norm().array().max(delta).inverse();
}

RsrResult distributed_reaper(const PartitionedDataset& data, const NetworkGraph& graph,
                             int subspace_dim, const IrlsParams& params,
                             const std::optional<Subspace>& truth) {
  check_shapes(data, graph, subspace_dim);
  if (!(params.delta > 0.0) || params.t_irls < 1) throw ConfigError("invalid IRLS parameters");
  to_local_datasets(data);  // rank check

  const int node_count = graph.node_count();
  RsrResult out;
  out.algorithm = "reaper";
  std::vector<Vector> weights;
  for (const auto& b : data.blocks) weights.push_back(Vector::Ones(b.rows()));

  std::vector<SymMatrix> projectors;
  for (int s = 1; s <= params.t_irls; ++s) {
    const FloodResult flood = flood_sum(local_scatters(data, &weights), graph);
    out.flood_supersteps = flood.supersteps;
    projectors.clear();
    for (const SymMatrix& total : flood.totals) projectors.push_back(reaper_projector(total, subspace_dim));

    std::vector<double> objectives(node_count);
    for (int k = 0; k < node_count; ++k) {
      const Vector residuals =
          (data.blocks[k] - data.blocks[k] * projectors[k].matrix()).rowwise().norm();
      objectives[k] = residuals.sum();
      weights[k] = residuals.array().max(params.delta).inverse();
    }
    const Subspace estimate = extract_subspace(projectors.front(), subspace_dim, EigenEnd::kTop).subspace;
    record_identical(out, s, node_count, estimate, truth, objectives);
  }
  out.iterations = params.t_irls;
  for (const SymMatrix& p : projectors) {
    ExtractedSubspace ex = extract_subspace(p, subspace_dim, EigenEnd::kTop);
    out.per_node_subspaces.push_back(std::move(ex.subspace));
    out.degenerate_gap.push_back(ex.degenerate);
    out.per_node_q.push_back(p);
  }
  return out;
}

RsrResult distributed_fms(const PartitionedDataset& data, const NetworkGraph& graph,
                          int subspace_dim, const IrlsParams& params,
                          const std::optional<Subspace>& truth) {
  check_shapes(data, graph, subspace_dim);
  if (!(params.delta > 0.0) || params.t_irls < 1) throw ConfigError("invalid IRLS parameters");
  to_local_datasets(data);

  const int node_count = graph.node_count();
  RsrResult out;
  out.algorithm = "fms";

  auto estimates_from = [&](const FloodResult& flood) {
    std::vector<ExtractedSubspace> ex;
    for (const SymMatrix& total : flood.totals) {
      ex.push_back(extract_subspace(total, subspace_dim, EigenEnd::kTop));
    }
    out.flood_supersteps = flood.supersteps;
    return ex;
  };
  std::vector<ExtractedSubspace> current = estimates_from(flood_sum(local_scatters(data, nullptr), graph));

  std::vector<Vector> weights(node_count);
  for (int s = 1; s <= params.t_irls; ++s) {
    std::vector<double> objectives(node_count);
    for (int k = 0; k < node_count; ++k) {
      const Vector dist = current[k].subspace.distances(data.blocks[k]);
      objectives[k] = dist.sum();
      weights[k] = dist.array().max(params.delta).inverse();
    }
    current = estimates_from(flood_sum(local_scatters(data, &weights), graph));
    record_identical(out, s, node_count, current.front().subspace, truth, objectives);
  }
  out.iterations = params.t_irls;
  for (auto& ex : current) {
    out.per_node_subspaces.push_back(std::move(ex.subspace));
    out.degenerate_gap.push_back(ex.degenerate);
  }
  return out;
}

double gmedian_step_size(const PartitionedDataset& data, const NetworkGraph& graph, double delta) {
  const double radius = laplacian_spectral_radius(graph);
  if (!(radius > 0.0)) throw ConfigError("step size is undefined on a network without edges");
  const int dim = data.ambient_dim;
  double curvature = std::numeric_limits<double>::infinity();
  for (const Matrix& block : data.blocks) {
    const Vector center = gmedian_local_solve(block, Vector::Zero(dim), delta, 1000).y;
    Matrix hessian = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      const Vector diff = block.row(i).transpose() - center;
      const double r = diff.norm();
      if (r < delta) {
        hessian.diagonal().array() += 1.0 / delta;
      } else {
        hessian += (Matrix::Identity(dim, dim) - diff * diff.transpose() / (r * r)) / r;
      }
    }
    curvature = std::min(curvature, spectral_decompose(SymMatrix::symmetrized(hessian)).eigenvalues(0));
  }
  if (!(curvature > 0.0)) {
    throw ConfigError("automatic step size undefined: a block has a flat local objective");
  }
  // Curvature shrinks away from the local median, so keep half the local bound in reserve.
  return 0.5 * curvature / radius;
}

GmedianResult distributed_gmedian(const PartitionedDataset& data, const NetworkGraph& graph,
                                  const ConsensusConfig& cfg, double delta, int max_inner,
                                  const std::optional<Vector>& reference) {
  data.check();
  if (data.block_count() != graph.node_count()) {
    throw ConfigError("dataset block count does not match the network size");
  }
  const LocalSolveFn<Vector> solve = [&](int node, const Vector& a, const Vector* prev) {
    std::optional<Vector> start;
    if (prev != nullptr) start = *prev;
    GmedianReport report = gmedian_local_solve(data.blocks[node - 1], a, delta, max_inner, start);
    return LocalSolution<Vector>{std::move(report.y), report.objective};
  };
  VectorTraceMonitor monitor("gmedian", graph, reference);
  const auto run = cbga_run(solve, Vector(Vector::Zero(data.ambient_dim)), graph, cfg, &monitor);
  GmedianResult out;
  for (const auto& node : run.nodes) out.per_node.push_back(node.q);
  out.diagnostics = monitor.take_records();
  out.step_size = run.step_size;
  out.step_halvings = run.halvings;
  return out;
}

}  // namespace drsr
