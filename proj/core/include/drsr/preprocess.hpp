#pragma once

#include <vector>

#include "drsr/consensus.hpp"
#include "drsr/dataset.hpp"
#include "drsr/graph.hpp"

namespace drsr {

struct CenteredData {
  PartitionedDataset data;
  std::vector<Vector> centers;  // per-node geometric-median estimate that was subtracted
};

/// Runs the distributed geometric median and has every node subtract its own
/// consensus estimate from its points.
CenteredData center_by_gmedian(const PartitionedDataset& data, const NetworkGraph& graph,
                               double delta, const ConsensusConfig& cfg, int max_inner = 100);

}  // namespace drsr
