#include "drsr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "drsr/errors.hpp"

namespace drsr {

int PartitionedDataset::total_points() const {
  int total = 0;
  for (const auto& b : blocks) total += static_cast<int>(b.rows());
  return total;
}

Matrix PartitionedDataset::pooled() const {
  Matrix out(total_points(), ambient_dim);
  Eigen::Index row = 0;
  for (const auto& b : blocks) {
    out.middleRows(row, b.rows()) = b;
    row += b.rows();
  }
  return out;
}

void PartitionedDataset::check() const {
  if (blocks.empty()) throw ConfigError("dataset has no blocks");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].cols() != ambient_dim) {
      throw ConfigError("block " + std::to_string(k + 1) + " has dimension " +
                        std::to_string(blocks[k].cols()) + ", expected " +
                        std::to_string(ambient_dim));
    }
    if (blocks[k].rows() == 0) throw ConfigError("block " + std::to_string(k + 1) + " is empty");
  }
}

std::vector<LocalDataset> to_local_datasets(const PartitionedDataset& data) {
  data.check();
  std::vector<LocalDataset> out;
  out.reserve(data.blocks.size());
  for (std::size_t k = 0; k < data.blocks.size(); ++k) {
    LocalDataset local = LocalDataset::unchecked(data.blocks[k]);
    if (!local.full_rank()) {
      throw RankDeficientError("block at node " + std::to_string(k + 1) + " (" +
                               std::to_string(local.size()) + " points in dimension " +
                               std::to_string(local.dim()) + ") is not full rank");
    }
    out.push_back(std::move(local));
  }
  return out;
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.nodes < 1) throw ConfigError("synthetic data needs K >= 1");
  if (cfg.outliers < 0 || cfg.inliers < 0) throw ConfigError("point counts must be non-negative");
  if (cfg.outliers % cfg.nodes != 0 || cfg.inliers % cfg.nodes != 0) {
    throw ConfigError("K = " + std::to_string(cfg.nodes) + " must divide both N0 = " +
                      std::to_string(cfg.outliers) + " and N1 = " + std::to_string(cfg.inliers));
  }
  if (cfg.outliers + cfg.inliers == 0) throw ConfigError("synthetic data needs at least one point");
  if (cfg.subspace_dim < 1 || cfg.subspace_dim >= cfg.ambient_dim) {
    throw ConfigError("subspace dimension must satisfy 1 <= d < D");
  }
  if (!(cfg.sigma >= 0.0 && cfg.sigma < 1.0)) throw ConfigError("sigma must lie in [0, 1)");
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  const int dim = cfg.ambient_dim;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix spanning(dim, cfg.subspace_dim);
  for (Eigen::Index j = 0; j < spanning.cols(); ++j) {
    for (Eigen::Index i = 0; i < spanning.rows(); ++i) spanning(i, j) = gauss(rng);
  }
  SyntheticData out{PartitionedDataset{{}, dim}, Subspace::spanned_by(spanning)};
  const Matrix& basis = out.truth.basis();

  const int inliers_per_node = cfg.inliers / cfg.nodes;
  const int outliers_per_node = cfg.outliers / cfg.nodes;
  for (int k = 0; k < cfg.nodes; ++k) {
    Matrix block(inliers_per_node + outliers_per_node, dim);
    for (int i = 0; i < inliers_per_node; ++i) {
      Vector z(cfg.subspace_dim);
      for (auto& v : z) v = gauss(rng);
      Vector noise(dim);
      for (auto& v : noise) v = gauss(rng);
      block.row(i) = (basis * z + cfg.sigma * noise).transpose();
    }
    for (int i = 0; i < outliers_per_node; ++i) {
      for (int j = 0; j < dim; ++j) block(inliers_per_node + i, j) = unit(rng);
    }
    out.data.blocks.push_back(std::move(block));
  }
  return out;
}

Matrix ose_matrix(int ambient_dim, int target_dim, std::uint64_t seed, SketchKind kind) {
  if (target_dim < 1 || target_dim >= ambient_dim) {
    throw ConfigError("sketch dimension must satisfy 1 <= target < D");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution sign;
  Matrix h = Matrix::Zero(target_dim, ambient_dim);
  if (kind == SketchKind::kRowSelection) {
    std::vector<int> columns(ambient_dim);
    std::iota(columns.begin(), columns.end(), 0);
    std::shuffle(columns.begin(), columns.end(), rng);
    for (int r = 0; r < target_dim; ++r) h(r, columns[r]) = sign(rng) ? 1.0 : -1.0;
  } else {
    std::uniform_int_distribution<int> row(0, target_dim - 1);
    for (int c = 0; c < ambient_dim; ++c) {
      const int r = row(rng);
      h(r, c) = sign(rng) ? 1.0 : -1.0;
    }
  }
  return h;
}

PartitionedDataset ose_sketch(const PartitionedDataset& data, int target_dim, std::uint64_t seed,
                              SketchKind kind) {
  data.check();
  const Matrix h = ose_matrix(data.ambient_dim, target_dim, seed, kind);
  PartitionedDataset out{{}, target_dim};
  for (const auto& block : data.blocks) out.blocks.push_back(block * h.transpose());
  return out;
}

PartitionPolicy parse_partition_policy(std::string_view name) {
  if (name == "contiguous") return PartitionPolicy::kContiguous;
  if (name == "round_robin" || name == "round-robin") return PartitionPolicy::kRoundRobin;
  throw ConfigError("unknown partition policy '" + std::string(name) + "'");
}

PartitionedDataset partition(const Matrix& points, int nodes, PartitionPolicy policy) {
  if (nodes < 1) throw ConfigError("partition needs K >= 1");
  const auto n = static_cast<int>(points.rows());
  if (n < nodes) {
    throw ConfigError("cannot split " + std::to_string(n) + " points over " +
                      std::to_string(nodes) + " nodes");
  }
  PartitionedDataset out{{}, static_cast<int>(points.cols())};
  if (policy == PartitionPolicy::kContiguous) {
    int start = 0;
    for (int k = 0; k < nodes; ++k) {
      const int count = n / nodes + (k < n % nodes ? 1 : 0);
      out.blocks.push_back(points.middleRows(start, count));
      start += count;
    }
  } else {
    for (int k = 0; k < nodes; ++k) {
      const int count = n / nodes + (k < n % nodes ? 1 : 0);
      Matrix block(count, points.cols());
      for (int i = 0; i < count; ++i) block.row(i) = points.row(k + i * nodes);
      out.blocks.push_back(std::move(block));
    }
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Parses one CSV line; returns false (and leaves `out` partial) on a non-numeric cell.
bool parse_row(std::string_view line, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    const std::string_view cell =
        trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (!cell.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (cell.empty() || ec != std::errc() || ptr != end) return false;
    out.push_back(value);
    if (comma == std::string_view::npos) return true;
    pos = comma + 1;
  }
}

}  // namespace

Matrix parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::vector<double> cells;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first_content_line = true;
  while (pos <= text.size()) {
    const auto newline = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, newline == std::string_view::npos ? std::string_view::npos : newline - pos);
    pos = newline == std::string_view::npos ? text.size() + 1 : newline + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const bool numeric = parse_row(line, cells);
    if (first_content_line) {
      first_content_line = false;
      if (!numeric) continue;  // header
    }
    if (!numeric) throw ParseError("non-numeric cell", line_no);
    if (!rows.empty() && cells.size() != rows.front().size()) {
      throw ParseError("expected " + std::to_string(rows.front().size()) + " columns, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    rows.push_back(cells);
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

Matrix load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string format_csv(const Matrix& points) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j > 0) out.push_back(',');
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, points(i, j));
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

void save_csv(const std::filesystem::path& path, const Matrix& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write CSV file " + path.string());
  out << format_csv(points);
}

}  // namespace drsr
