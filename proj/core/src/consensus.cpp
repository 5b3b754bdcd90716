#include "drsr/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drsr/errors.hpp"
#include "drsr/worker_pool.hpp"

namespace drsr {
namespace {

double distance(const SymMatrix& a, const SymMatrix& b) { return frobenius_distance(a, b); }
double distance(const Vector& a, const Vector& b) { return (a - b).norm(); }

void add_scaled(SymMatrix& acc, double scale, const SymMatrix& x) { acc += scale * x; }
void add_scaled(Vector& acc, double scale, const Vector& x) { acc += scale * x; }

double magnitude(const SymMatrix& s) { return s.frobenius_norm(); }
double magnitude(const Vector& v) { return v.norm(); }

SymMatrix transmitted(const SymMatrix& q, const ConsensusConfig& cfg) {
  if (!cfg.compression_top_d) return q;
  return decompress(compress_state(q, *cfg.compression_top_d));
}

Vector transmitted(const Vector& y, const ConsensusConfig&) { return y; }

void check_compression(const SymMatrix&, const ConsensusConfig&) {}
void check_compression(const Vector&, const ConsensusConfig& cfg) {
  if (cfg.compression_top_d) throw ConfigError("compression applies to matrix iterates only");
}

void emit(const ConsensusConfig& cfg, const std::string& line) {
  if (cfg.log) cfg.log(line);
}

bool should_record(int s, const ConsensusConfig& cfg) {
  return s == 0 || s == cfg.t_outer || s % cfg.record_every == 0;
}

// Runs local solves for all nodes on the pool; errors carry node and superstep.
template <class Value, class Solve>
void solve_all(WorkerPool& pool, int node_count, int superstep, std::vector<Value>& out,
               std::vector<double>& objectives, const Solve& solve) {
  pool.parallel_for(static_cast<std::size_t>(node_count), [&](std::size_t i) {
    const int node = static_cast<int>(i) + 1;
    try {
      LocalSolution<Value> sol = solve(node);
      out[i] = std::move(sol.value);
      objectives[i] = sol.objective;
    } catch (const NodeSolveError&) {
      throw;
    } catch (const NotPositiveDefiniteError& e) {
      throw NodeSolveError(e.what(), node, superstep, true);
    } catch (const SingularCoefficientError& e) {
      throw NodeSolveError(e.what(), node, superstep, true);
    } catch (const UnboundedLocalProblemError& e) {
      throw NodeSolveError(e.what(), node, superstep, true);
    } catch (const Error& e) {
      throw NodeSolveError(e.what(), node, superstep, false);
    }
  });
}

// Retries `attempt(step)` with a halved step after step-size failures.
template <class Value, class Attempt>
ConsensusResult<Value> with_step_halving(const ConsensusConfig& cfg,
                                         ConsensusMonitor<Value>* monitor,
                                         const Attempt& attempt) {
  double step = cfg.step_size;
  for (int halvings = 0;; ++halvings) {
    try {
      ConsensusResult<Value> result = attempt(step);
      result.step_size = step;
      result.halvings = halvings;
      return result;
    } catch (const NodeSolveError& e) {
      if (!e.step_size_related() || halvings >= cfg.max_step_halvings) throw;
      std::ostringstream line;
      line.precision(17);
      line << "step size " << step << " failed (" << e.what() << "); restarting with "
           << step / 2.0;
      step /= 2.0;
      emit(cfg, line.str());
      if (monitor != nullptr) monitor->restarted(step);
    }
  }
}

// Optional per-edge multiplier bookkeeping used to cross-check the aggregates.
template <class Value>
class EdgeMultipliers {
 public:
  EdgeMultipliers(const NetworkGraph& graph, const Value& zero)
      : graph_(graph), lambdas_(graph.edge_count(), zero), zero_(zero) {}

  void update(const std::vector<Value>& sent, double step) {
    for (int m = 1; m <= graph_.edge_count(); ++m) {
      const Edge& e = graph_.edge(m);
      // Lambda_m += mu * c_mk (Q_k - Q_q) for e_m = {k, q}; c_mk = +1 at the lower endpoint.
      add_scaled(lambdas_[m - 1], step, sent[e.low - 1]);
      add_scaled(lambdas_[m - 1], -step, sent[e.high - 1]);
    }
  }

  void check(const std::vector<BasicNodeState<Value>>& nodes, int superstep) const {
    for (const auto& node : nodes) {
      Value expected = zero_;
      for (int m : graph_.incident_edges(node.node_id)) {
        add_scaled(expected, graph_.edge_sign(m, node.node_id), lambdas_[m - 1]);
      }
      const double gap = distance(expected, node.dual);
      if (gap > 1e-9 * (1.0 + magnitude(node.dual))) {
        throw ProtocolError("aggregate multiplier at node " + std::to_string(node.node_id) +
                            " disagrees with its edge multipliers at superstep " +
                            std::to_string(superstep));
      }
    }
  }

 private:
  const NetworkGraph& graph_;
  std::vector<Value> lambdas_;
  Value zero_;
};

template <class Value>
ConsensusResult<Value> cbga_attempt(const LocalSolveFn<Value>& local_solve, const Value& zero,
                                    const NetworkGraph& graph, const ConsensusConfig& cfg,
                                    ConsensusMonitor<Value>* monitor, WorkerPool& pool,
                                    double step) {
  const int node_count = graph.node_count();
  ConsensusResult<Value> result;
  result.nodes.resize(node_count);
  for (int k = 1; k <= node_count; ++k) result.nodes[k - 1] = {k, zero, zero};

  std::vector<Value> next(node_count, zero);
  std::vector<double> objectives(node_count, 0.0);
  solve_all(pool, node_count, 0, next, objectives, [&](int node) {
    return local_solve(node, result.nodes[node - 1].dual, nullptr);
  });
  for (int i = 0; i < node_count; ++i) result.nodes[i].q = next[i];
  if (monitor != nullptr) monitor->superstep(0, result.nodes, objectives);

  // Without edges the duals never move, so every later solve would repeat the first.
  if (graph.edge_count() == 0) {
    if (monitor != nullptr) {
      for (int s = 1; s <= cfg.t_outer; ++s) {
        if (should_record(s, cfg)) monitor->superstep(s, result.nodes, objectives);
      }
    }
    return result;
  }

  std::optional<EdgeMultipliers<Value>> multipliers;
  if (cfg.track_edge_multipliers) multipliers.emplace(graph, zero);

  std::vector<Value> sent(node_count, zero);
  for (int s = 1; s <= cfg.t_outer; ++s) {
    // Transmit phase: every node publishes its superstep s-1 iterate.
    for (int i = 0; i < node_count; ++i) sent[i] = transmitted(result.nodes[i].q, cfg);
    // Dual phase, entirely from s-1 values.
    for (int i = 0; i < node_count; ++i) {
      for (int q : graph.neighbors(i + 1)) {
        add_scaled(result.nodes[i].dual, step, sent[i]);
        add_scaled(result.nodes[i].dual, -step, sent[q - 1]);
      }
    }
    if (multipliers) {
      multipliers->update(sent, step);
      multipliers->check(result.nodes, s);
    }
    // Solve phase.
    solve_all(pool, node_count, s, next, objectives, [&](int node) {
      const auto& state = result.nodes[node - 1];
      return local_solve(node, state.dual, &state.q);
    });
    for (int i = 0; i < node_count; ++i) std::swap(result.nodes[i].q, next[i]);
    if (monitor != nullptr && should_record(s, cfg)) monitor->superstep(s, result.nodes, objectives);
  }
  return result;
}

template <class Value>
double max_disagreement_impl(const std::vector<BasicNodeState<Value>>& nodes,
                             const NetworkGraph& graph) {
  double out = 0.0;
  for (const Edge& e : graph.edges()) {
    out = std::max(out, distance(nodes[e.low - 1].q, nodes[e.high - 1].q));
  }
  return out;
}

}  // namespace

void validate(const ConsensusConfig& cfg) {
  if (!(cfg.step_size > 0.0) || !std::isfinite(cfg.step_size)) {
    throw ConfigError("step size must be positive and finite");
  }
  if (cfg.t_outer < 1) throw ConfigError("outer iteration count must be at least 1");
  if (cfg.record_every < 1) throw ConfigError("record cadence must be at least 1");
  if (cfg.max_step_halvings < 0) throw ConfigError("halving budget must be non-negative");
  if (cfg.workers < 0) throw ConfigError("worker count must be non-negative");
  if (cfg.compression_top_d && *cfg.compression_top_d < 1) {
    throw ConfigError("compression rank must be at least 1");
  }
}

double practical_step_size(const std::vector<LocalDataset>& datasets, const NetworkGraph& graph,
                           int planned_iterations, double delta, StepSizeMode mode) {
  if (graph.edge_count() == 0) throw ConfigError("step size is undefined on a network without edges");
  if (static_cast<int>(datasets.size()) != graph.node_count()) {
    throw ConfigError("dataset count does not match the network size");
  }
  if (planned_iterations < 1) throw ConfigError("planned iteration count must be at least 1");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");

  double worst = 0.0;
  int dim = 0;
  for (int k = 1; k <= graph.node_count(); ++k) {
    const LocalDataset& data = datasets[k - 1];
    if (!data.full_rank()) {
      throw RankDeficientError("step size needs full-rank data at node " + std::to_string(k));
    }
    dim = data.dim();
    const Vector weights = data.points().rowwise().norm().array().max(delta).inverse();
    const Matrix scaled = data.points().array().colwise() * weights.array();
    const SymMatrix normalized = SymMatrix::symmetrized(scaled.transpose() * data.points());
    const SpectralDecomposition eig = spectral_decompose(normalized);
    if (!(eig.eigenvalues(0) > 0.0)) {
      throw RankDeficientError("normalized scatter is singular at node " + std::to_string(k));
    }
    const double trace_inverse = eig.eigenvalues.cwiseInverse().sum();
    worst = std::max(worst, static_cast<double>(graph.degree(k)) * trace_inverse);
  }
  const double conservative = 1.0 / (planned_iterations * worst);
  return mode == StepSizeMode::kPractical ? static_cast<double>(dim) * dim * conservative
                                          : conservative;
}

SymMatrix cbga_update_dual(const NetworkGraph& graph, const NodeState& state,
                           const std::map<int, SymMatrix>& neighbor_qs, double mu) {
  const auto& expected = graph.neighbors(state.node_id);
  if (neighbor_qs.size() != expected.size()) {
    throw ProtocolError("node " + std::to_string(state.node_id) + " expected " +
                        std::to_string(expected.size()) + " neighbor messages, got " +
                        std::to_string(neighbor_qs.size()));
  }
  SymMatrix dual = state.dual;
  for (int q : expected) {
    const auto it = neighbor_qs.find(q);
    if (it == neighbor_qs.end()) {
      throw ProtocolError("node " + std::to_string(state.node_id) + " is missing the message from " +
                          std::to_string(q));
    }
    dual += mu * (state.q - it->second);
  }
  return dual;
}

template <class Value>
ConsensusResult<Value> cbga_run(const LocalSolveFn<Value>& local_solve, const Value& zero,
                                const NetworkGraph& graph, const ConsensusConfig& cfg,
                                ConsensusMonitor<Value>* monitor) {
  validate(cfg);
  check_compression(zero, cfg);
  WorkerPool pool(cfg.workers > 0 ? cfg.workers : configured_worker_count());
  return with_step_halving<Value>(cfg, monitor, [&](double step) {
    return cbga_attempt(local_solve, zero, graph, cfg, monitor, pool, step);
  });
}

template ConsensusResult<SymMatrix> cbga_run(const LocalSolveFn<SymMatrix>&, const SymMatrix&,
                                             const NetworkGraph&, const ConsensusConfig&,
                                             ConsensusMonitor<SymMatrix>*);
template ConsensusResult<Vector> cbga_run(const LocalSolveFn<Vector>&, const Vector&,
                                          const NetworkGraph&, const ConsensusConfig&,
                                          ConsensusMonitor<Vector>*);

namespace {

void check_datasets(const std::vector<LocalDataset>& datasets, const NetworkGraph& graph) {
  if (static_cast<int>(datasets.size()) != graph.node_count()) {
    throw ConfigError("dataset count does not match the network size");
  }
  for (std::size_t i = 1; i < datasets.size(); ++i) {
    if (datasets[i].dim() != datasets[0].dim()) throw ConfigError("blocks differ in dimension");
  }
}

}  // namespace

ConsensusResult<SymMatrix> cbga_gms_run(const std::vector<LocalDataset>& datasets,
                                        const NetworkGraph& graph, const ConsensusConfig& cfg,
                                        const GmsParams& params,
                                        ConsensusMonitor<SymMatrix>* monitor) {
  check_datasets(datasets, graph);
  validate(params);
  const LocalSolveFn<SymMatrix> solve = [&](int node, const SymMatrix& a, const SymMatrix* prev) {
    std::optional<SymMatrix> start;
    if (prev != nullptr) start = *prev;
    GmsReport report = gms_local_solve(datasets[node - 1], a, params, start);
    return LocalSolution<SymMatrix>{std::move(report.q), report.objective_history.back()};
  };
  return cbga_run(solve, SymMatrix::zero(datasets.front().dim()), graph, cfg, monitor);
}

ConsensusResult<SymMatrix> cadmm_run(const std::vector<LocalDataset>& datasets,
                                     const NetworkGraph& graph, const ConsensusConfig& cfg,
                                     const GmsParams& params,
                                     ConsensusMonitor<SymMatrix>* monitor) {
  validate(cfg);
  validate(params);
  check_datasets(datasets, graph);
  const int node_count = graph.node_count();
  const SymMatrix zero = SymMatrix::zero(datasets.front().dim());
  WorkerPool pool(cfg.workers > 0 ? cfg.workers : configured_worker_count());

  return with_step_halving<SymMatrix>(cfg, monitor, [&](double rho) {
    ConsensusResult<SymMatrix> result;
    result.nodes.resize(node_count);
    for (int k = 1; k <= node_count; ++k) result.nodes[k - 1] = {k, zero, zero};

    std::vector<SymMatrix> next(node_count, zero);
    std::vector<double> objectives(node_count, 0.0);
    solve_all(pool, node_count, 0, next, objectives, [&](int node) {
      GmsReport report = gms_local_solve(datasets[node - 1], zero, params);
      return LocalSolution<SymMatrix>{std::move(report.q), report.objective_history.back()};
    });
    for (int i = 0; i < node_count; ++i) result.nodes[i].q = next[i];
    if (monitor != nullptr) monitor->superstep(0, result.nodes, objectives);

    std::vector<SymMatrix> sent(node_count, zero);
    for (int s = 1; s <= cfg.t_outer; ++s) {
      for (int i = 0; i < node_count; ++i) sent[i] = transmitted(result.nodes[i].q, cfg);
      for (int i = 0; i < node_count; ++i) {
        for (int q : graph.neighbors(i + 1)) {
          result.nodes[i].dual += rho * (sent[i] - sent[q - 1]);
        }
      }
      solve_all(pool, node_count, s, next, objectives, [&](int node) {
        std::vector<SymMatrix> neighbor_qs;
        for (int q : graph.neighbors(node)) neighbor_qs.push_back(sent[q - 1]);
        const auto& state = result.nodes[node - 1];
        GmsReport report = cadmm_local_solve(datasets[node - 1], state.dual, neighbor_qs,
                                             sent[node - 1], rho, params, state.q);
        return LocalSolution<SymMatrix>{std::move(report.q), report.objective_history.back()};
      });
      for (int i = 0; i < node_count; ++i) std::swap(result.nodes[i].q, next[i]);
      if (monitor != nullptr && should_record(s, cfg)) {
        monitor->superstep(s, result.nodes, objectives);
      }
    }
    return result;
  });
}

CompressedState compress_state(const SymMatrix& q, int top_d) {
  if (top_d < 1 || top_d >= q.dim()) {
    throw ConfigError("compression rank must satisfy 1 <= d < D");
  }
  const SpectralDecomposition eig = spectral_decompose(q);
  return CompressedState{eig.eigenvectors.rightCols(top_d).rowwise().reverse().transpose()};
}

SymMatrix decompress(const CompressedState& state) {
  const Matrix gram = state.rows.transpose() * state.rows;
  return SymMatrix::symmetrized(gram / gram.trace());
}

double max_disagreement(const std::vector<NodeState>& nodes, const NetworkGraph& graph) {
  return max_disagreement_impl(nodes, graph);
}

double max_disagreement(const std::vector<VectorNodeState>& nodes, const NetworkGraph& graph) {
  return max_disagreement_impl(nodes, graph);
}

}  // namespace drsr
