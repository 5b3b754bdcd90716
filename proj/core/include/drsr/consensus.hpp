#pragma once

// Consensus engines over a NetworkGraph. Both run synchronous supersteps:
// every node transmits its previous iterate, updates its dual aggregate from
// the received values, then solves its local problem. Node solves within a
// superstep run on a WorkerPool and write to per-node slots only.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drsr/graph.hpp"
#include "drsr/local_solvers.hpp"
#include "drsr/matops.hpp"

namespace drsr {

template <class Value>
struct BasicNodeState {
  int node_id = 0;  // 1-based
  Value q;          // current iterate
  Value dual;       // aggregate multiplier (A_k for CBGA, Z_k for CADMM)
};

using NodeState = BasicNodeState<SymMatrix>;
using VectorNodeState = BasicNodeState<Vector>;

struct ConsensusConfig {
  double step_size = 0.0;  // mu for CBGA, rho for CADMM
  int t_outer = 250;
  /// When set, nodes transmit only the top-d eigenvectors of their iterate.
  std::optional<int> compression_top_d;
  /// Monitor cadence in supersteps; the initial and final supersteps are always reported.
  int record_every = 1;
  /// Maintain per-edge multipliers alongside the aggregates and check that
  /// they agree after every superstep (debug aid; costs M extra matrices).
  bool track_edge_multipliers = false;
  /// Halve the step and restart at most this many times on a step-size failure.
  int max_step_halvings = 5;
  /// 0 means configured_worker_count().
  int workers = 0;
  /// Receives one line per notable event (step halvings).
  std::function<void(const std::string&)> log;
};

void validate(const ConsensusConfig& cfg);

enum class StepSizeMode { kConservative, kPractical };

/// Step size from the network and data:
///   conservative = 1 / (n * max_k |E_k| * tr(S_k^{-1})),  S_k = sum x x^T / max(||x||, delta)
///   practical    = D^2 * conservative.
/// Throws ConfigError for a network without edges.
double practical_step_size(const std::vector<LocalDataset>& datasets, const NetworkGraph& graph,
                           int planned_iterations, double delta,
                           StepSizeMode mode = StepSizeMode::kPractical);

/// A_k + mu * sum_{q in N_k} (Q_k - Q_q). `neighbor_qs` must hold exactly the
/// graph neighbors of state.node_id, otherwise ProtocolError.
SymMatrix cbga_update_dual(const NetworkGraph& graph, const NodeState& state,
                           const std::map<int, SymMatrix>& neighbor_qs, double mu);

/// Observer of engine progress. Called on the coordinating thread after each
/// superstep barrier, so implementations need no locking.
template <class Value>
class ConsensusMonitor {
 public:
  virtual ~ConsensusMonitor() = default;
  /// The run was restarted from scratch with a smaller step.
  virtual void restarted(double /*new_step_size*/) {}
  virtual void superstep(int s, const std::vector<BasicNodeState<Value>>& nodes,
                         const std::vector<double>& local_objectives) = 0;
};

template <class Value>
struct LocalSolution {
  Value value;
  double objective = 0.0;
};

/// Local solver used by the generic engine: node id, aggregate multiplier,
/// and the node's own previous iterate (nullptr on the initial solve).
template <class Value>
using LocalSolveFn =
    std::function<LocalSolution<Value>(int node, const Value& aggregate, const Value* previous)>;

template <class Value>
struct ConsensusResult {
  std::vector<BasicNodeState<Value>> nodes;
  double step_size = 0.0;  // step actually used after any halvings
  int halvings = 0;
};

/// Generic consensus-based gradient ascent on the dual. Drives GMS and PCA
/// (matrix iterates) and the geometric median (vector iterates).
template <class Value>
ConsensusResult<Value> cbga_run(const LocalSolveFn<Value>& local_solve, const Value& zero,
                                const NetworkGraph& graph, const ConsensusConfig& cfg,
                                ConsensusMonitor<Value>* monitor = nullptr);

extern template ConsensusResult<SymMatrix> cbga_run(const LocalSolveFn<SymMatrix>&,
                                                    const SymMatrix&, const NetworkGraph&,
                                                    const ConsensusConfig&,
                                                    ConsensusMonitor<SymMatrix>*);
extern template ConsensusResult<Vector> cbga_run(const LocalSolveFn<Vector>&, const Vector&,
                                                 const NetworkGraph&, const ConsensusConfig&,
                                                 ConsensusMonitor<Vector>*);

/// CBGA with the GMS local solver at every node.
ConsensusResult<SymMatrix> cbga_gms_run(const std::vector<LocalDataset>& datasets,
                                        const NetworkGraph& graph, const ConsensusConfig& cfg,
                                        const GmsParams& params,
                                        ConsensusMonitor<SymMatrix>* monitor = nullptr);

/// Consensus ADMM for GMS with penalty cfg.step_size.
ConsensusResult<SymMatrix> cadmm_run(const std::vector<LocalDataset>& datasets,
                                     const NetworkGraph& graph, const ConsensusConfig& cfg,
                                     const GmsParams& params,
                                     ConsensusMonitor<SymMatrix>* monitor = nullptr);

/// Top-d eigenvectors of an iterate, stored as orthonormal rows.
struct CompressedState {
  Matrix rows;  // d x D
};

CompressedState compress_state(const SymMatrix& q, int top_d);

/// U^T U / tr(U^T U): symmetric, trace one, rank d.
SymMatrix decompress(const CompressedState& state);

/// max over edges {k, q} of ||Q_k - Q_q||_F.
double max_disagreement(const std::vector<NodeState>& nodes, const NetworkGraph& graph);
double max_disagreement(const std::vector<VectorNodeState>& nodes, const NetworkGraph& graph);

}  // namespace drsr
