#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drsr/consensus.hpp"
#include "drsr/subspace.hpp"

namespace drsr {

/// One (superstep, node) observation. `disagreement` is the largest distance
/// from the node's iterate to a neighbor's; the network-wide value is the max
/// over nodes.
struct DiagnosticRecord {
  std::string algo;
  int s = 0;
  int k = 0;
  std::optional<double> recovery_error;
  double local_objective = 0.0;
  double disagreement = 0.0;
};

nlohmann::json to_json(const DiagnosticRecord& record);
void write_jsonl(std::ostream& out, const std::vector<DiagnosticRecord>& records);

/// Records per-node subspace error and disagreement for matrix iterates.
class SubspaceTraceMonitor : public ConsensusMonitor<SymMatrix> {
 public:
  SubspaceTraceMonitor(std::string algo, const NetworkGraph& graph, int subspace_dim,
                       EigenEnd which, std::optional<Subspace> truth);

  void restarted(double new_step_size) override;
  void superstep(int s, const std::vector<NodeState>& nodes,
                 const std::vector<double>& local_objectives) override;

  const std::vector<DiagnosticRecord>& records() const { return records_; }
  std::vector<DiagnosticRecord> take_records() { return std::move(records_); }

 private:
  std::string algo_;
  const NetworkGraph& graph_;
  int subspace_dim_;
  EigenEnd which_;
  std::optional<Subspace> truth_;
  std::vector<DiagnosticRecord> records_;
};

/// Same for vector iterates; the error is the distance to `reference` when given.
class VectorTraceMonitor : public ConsensusMonitor<Vector> {
 public:
  VectorTraceMonitor(std::string algo, const NetworkGraph& graph, std::optional<Vector> reference);

  void restarted(double new_step_size) override;
  void superstep(int s, const std::vector<VectorNodeState>& nodes,
                 const std::vector<double>& local_objectives) override;

  std::vector<DiagnosticRecord> take_records() { return std::move(records_); }

 private:
  std::string algo_;
  const NetworkGraph& graph_;
  std::optional<Vector> reference_;
  std::vector<DiagnosticRecord> records_;
};

}  // namespace drsr
