#include "drsr/preprocess.hpp"

#include "drsr/rsr.hpp"

namespace drsr {

CenteredData center_by_gmedian(const PartitionedDataset& data, const NetworkGraph& graph,
                               double delta, const ConsensusConfig& cfg, int max_inner) {
  const GmedianResult median = distributed_gmedian(data, graph, cfg, delta, max_inner);
  CenteredData out{PartitionedDataset{{}, data.ambient_dim}, median.per_node};
  for (std::size_t k = 0; k < data.blocks.size(); ++k) {
    out.data.blocks.push_back(data.blocks[k].rowwise() - median.per_node[k].transpose());
  }
  return out;
}

}  // namespace drsr
