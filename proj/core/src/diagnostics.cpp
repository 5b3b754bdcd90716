#include "drsr/diagnostics.hpp"

#include <algorithm>

namespace drsr {
namespace {

template <class Value, class Distance>
double node_disagreement(const std::vector<BasicNodeState<Value>>& nodes, const NetworkGraph& graph,
                         int k, const Distance& distance) {
  double out = 0.0;
  for (int q : graph.neighbors(k)) out = std::max(out, distance(nodes[k - 1].q, nodes[q - 1].q));
  return out;
}

}  // namespace

nlohmann::json to_json(const DiagnosticRecord& record) {
  nlohmann::json j;
  j["algo"] = record.algo;
  j["s"] = record.s;
  j["k"] = record.k;
  j["recovery_error"] = record.recovery_error ? nlohmann::json(*record.recovery_error) : nlohmann::json(nullptr);
  j["local_objective"] = record.local_objective;
  j["disagreement"] = record.disagreement;
  return j;
}

void write_jsonl(std::ostream& out, const std::vector<DiagnosticRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

SubspaceTraceMonitor::SubspaceTraceMonitor(std::string algo, const NetworkGraph& graph,
                                           int subspace_dim, EigenEnd which,
                                           std::optional<Subspace> truth)
    : algo_(std::move(algo)),
      graph_(graph),
      subspace_dim_(subspace_dim),
      which_(which),
      truth_(std::move(truth)) {}

void SubspaceTraceMonitor::restarted(double) { records_.clear(); }

void SubspaceTraceMonitor::superstep(int s, const std::vector<NodeState>& nodes,
                                     const std::vector<double>& local_objectives) {
  for (const auto& node : nodes) {
    DiagnosticRecord r{algo_, s, node.node_id, std::nullopt, local_objectives[node.node_id - 1], 0.0};
    if (truth_) {
      r.recovery_error =
          recovery_error(extract_subspace(node.q, subspace_dim_, which_).subspace, *truth_);
    }
    r.disagreement = node_disagreement(nodes, graph_, node.node_id,
                                       [](const SymMatrix& a, const SymMatrix& b) {
                                         return frobenius_distance(a, b);
                                       });
    records_.push_back(std::move(r));
  }
}

VectorTraceMonitor::VectorTraceMonitor(std::string algo, const NetworkGraph& graph,
                                       std::optional<Vector> reference)
    : algo_(std::move(algo)), graph_(graph), reference_(std::move(reference)) {}

void VectorTraceMonitor::restarted(double) { records_.clear(); }

void VectorTraceMonitor::superstep(int s, const std::vector<VectorNodeState>& nodes,
                                   const std::vector<double>& local_objectives) {
  for (const auto& node : nodes) {
    DiagnosticRecord r{algo_, s, node.node_id, std::nullopt, local_objectives[node.node_id - 1], 0.0};
    if (reference_) r.recovery_error = (node.q - *reference_).norm();
    r.disagreement = node_disagreement(nodes, graph_, node.node_id,
                                       [](const Vector& a, const Vector& b) { return (a - b).norm(); });
    records_.push_back(std::move(r));
  }
}

}  // namespace drsr
