#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drsr/local_solvers.hpp"
#include "drsr/matops.hpp"
#include "drsr/subspace.hpp"

namespace drsr {

/// Points split across nodes; block k - 1 belongs to node k. Each block is an
/// N_k x D matrix with one point per row.
struct PartitionedDataset {
  std::vector<Matrix> blocks;
  int ambient_dim = 0;

  int block_count() const { return static_cast<int>(blocks.size()); }
  int total_points() const;
  /// All blocks stacked in node order.
  Matrix pooled() const;
  void check() const;
};

/// Rank-checked per-node datasets; throws RankDeficientError naming the node.
std::vector<LocalDataset> to_local_datasets(const PartitionedDataset& data);

struct SyntheticConfig {
  int nodes = 10;           // K
  int outliers = 2000;      // N0, total over all nodes
  int inliers = 200;        // N1, total over all nodes
  int ambient_dim = 50;     // D
  int subspace_dim = 3;     // d
  double sigma = 0.1;       // inlier noise level
  std::uint64_t seed = 0;
};

void validate(const SyntheticConfig& cfg);

struct SyntheticData {
  PartitionedDataset data;
  Subspace truth;
};

/// Inliers B z + sigma n with z ~ N(0, I_d), n ~ N(0, I_D) and B an
/// orthonormal basis of a uniformly random d-subspace; outliers uniform on
/// [0, 1]^D. Every block lists its N1/K inliers first, then its N0/K outliers.
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

enum class SketchKind {
  kRowSelection,  // each row of H holds a single +-1, rows use distinct columns
  kCountSketch,   // each column of H holds a single +-1 at a random row
};

/// Sketch matrix shared by all nodes (depends only on the seed).
Matrix ose_matrix(int ambient_dim, int target_dim, std::uint64_t seed,
                  SketchKind kind = SketchKind::kRowSelection);

/// Applies the same H to every point; throws ConfigError unless target_dim < D.
PartitionedDataset ose_sketch(const PartitionedDataset& data, int target_dim, std::uint64_t seed,
                              SketchKind kind = SketchKind::kRowSelection);

enum class PartitionPolicy { kContiguous, kRoundRobin };

PartitionPolicy parse_partition_policy(std::string_view name);

/// Splits rows over K nodes. Contiguous gives the first N mod K blocks one
/// extra row; round robin deals row i to node (i mod K) + 1.
PartitionedDataset partition(const Matrix& points, int nodes, PartitionPolicy policy);

/// Comma-separated doubles, one point per row. A first row that does not
/// parse as numbers is treated as a header. Throws ParseError with the
/// 1-based line number on ragged or non-numeric rows.
Matrix load_csv(const std::filesystem::path& path);
Matrix parse_csv(std::string_view text);

/// Shortest round-trip formatting, so save then load reproduces every bit.
void save_csv(const std::filesystem::path& path, const Matrix& points);
std::string format_csv(const Matrix& points);

}  // namespace drsr
