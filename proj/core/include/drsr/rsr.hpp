#pragma once

// End-to-end distributed subspace recovery. Every entry point takes the
// partitioned data and the network, runs the protocol in the superstep
// simulator and returns each node's estimate.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drsr/consensus.hpp"
#include "drsr/dataset.hpp"
#include "drsr/diagnostics.hpp"
#include "drsr/graph.hpp"
#include "drsr/subspace.hpp"

namespace drsr {

struct RsrResult {
  std::string algorithm;
  std::vector<Subspace> per_node_subspaces;
  /// Final per-node iterate where the algorithm has one (GMS, PCA-CBGA, Reaper).
  std::vector<SymMatrix> per_node_q;
  std::vector<bool> degenerate_gap;
  std::vector<DiagnosticRecord> diagnostics;
  double step_size = 0.0;  // 0 for algorithms without a step
  int step_halvings = 0;
  int iterations = 0;        // supersteps, or IRLS rounds for Reaper/FMS
  int flood_supersteps = 0;  // rounds of one covariance flood (flooding algorithms)

  /// Per-node bases and run metadata; diagnostics are written separately as JSONL.
  nlohmann::json to_json() const;
};

/// Error of every node's subspace against `truth`.
std::vector<double> per_node_errors(const RsrResult& result, const Subspace& truth);

enum class GmsEngine { kCbga, kCadmm };

RsrResult distributed_gms(const PartitionedDataset& data, const NetworkGraph& graph,
                          int subspace_dim, GmsEngine engine, const ConsensusConfig& cfg,
                          const GmsParams& params,
                          const std::optional<Subspace>& truth = std::nullopt);

/// Covariance flooding: after it finishes every node holds the sum of all
/// local matrices, added in node order so the totals agree bit for bit.
struct FloodResult {
  std::vector<SymMatrix> totals;
  int supersteps = 0;
};

/// Throws ProtocolError when some node never hears from another (disconnected network).
FloodResult flood_sum(const std::vector<SymMatrix>& local, const NetworkGraph& graph);

RsrResult distributed_pca_exact(const PartitionedDataset& data, const NetworkGraph& graph,
                                int subspace_dim,
                                const std::optional<Subspace>& truth = std::nullopt);

/// Step for CBGA-PCA: 2 min_k lambda_min(S_k) / lambda_max(graph Laplacian),
/// i.e. half the largest stable step for the strongly concave dual.
double pca_step_size(const std::vector<LocalDataset>& datasets, const NetworkGraph& graph);

RsrResult distributed_pca_cbga(const PartitionedDataset& data, const NetworkGraph& graph,
                               int subspace_dim, const ConsensusConfig& cfg,
                               const std::optional<Subspace>& truth = std::nullopt);

/// Minimizer of sum_i ||x_i - P x_i||^2 over {0 <= P <= I, tr P = d} given
/// the second-moment matrix: eigenvalues mapped to clamp(1 - theta / lambda, 0, 1)
/// with theta chosen by bisection so they sum to d.
SymMatrix reaper_projector(const SymMatrix& second_moment, int subspace_dim);

/// 1 / max(delta, ||x - P x||) per row.
Vector reaper_weights(const Matrix& points, const SymMatrix& projector, double delta);

struct IrlsParams {
  double delta = 1e-10;
  int t_irls = 100;
};

RsrResult distributed_reaper(const PartitionedDataset& data, const NetworkGraph& graph,
                             int subspace_dim, const IrlsParams& params,
                             const std::optional<Subspace>& truth = std::nullopt);

/// Starts from the PCA subspace of the unweighted data.
RsrResult distributed_fms(const PartitionedDataset& data, const NetworkGraph& graph,
                          int subspace_dim, const IrlsParams& params,
                          const std::optional<Subspace>& truth = std::nullopt);

struct GmedianResult {
  std::vector<Vector> per_node;
  std::vector<DiagnosticRecord> diagnostics;
  double step_size = 0.0;
  int step_halvings = 0;
};

/// Step for the distributed geometric median, analogous to pca_step_size with
/// the curvature of each node's smoothed distance sum at its local median,
/// halved because that curvature is the largest along the iterate path.
double gmedian_step_size(const PartitionedDataset& data, const NetworkGraph& graph, double delta);

GmedianResult distributed_gmedian(const PartitionedDataset& data, const NetworkGraph& graph,
                                  const ConsensusConfig& cfg, double delta, int max_inner = 100,
                                  const std::optional<Vector>& reference = std::nullopt);

/// Largest eigenvalue of the graph Laplacian.
double laplacian_spectral_radius(const NetworkGraph& graph);

}  // namespace drsr
