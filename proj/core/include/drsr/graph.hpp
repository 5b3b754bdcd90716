#pragma once

// Undirected network topology with 1-indexed nodes and edges, matching the
// edge-sign convention c_mk = +1 / -1 for the lower / higher endpoint.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace drsr {

struct Edge {
  int low = 0;   // smaller endpoint
  int high = 0;  // larger endpoint

  friend bool operator==(const Edge&, const Edge&) = default;
};

class NetworkGraph {
 public:
  NetworkGraph() = default;

  /// Validates endpoints (1 <= low < high <= K), rejects duplicates and
  /// requires a single connected component. Throws ConfigError.
  NetworkGraph(int node_count, std::vector<Edge> edges);

  /// Same validation minus connectivity; only used to simulate partitioned
  /// networks in protocol tests.
  static NetworkGraph without_connectivity_check(int node_count, std::vector<Edge> edges);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Edge e_m, 1 <= m <= M.
  const Edge& edge(int m) const;

  /// Neighbor set N_k in ascending order.
  const std::vector<int>& neighbors(int k) const;

  /// Incident edge indices E_k in ascending order.
  const std::vector<int>& incident_edges(int k) const;

  int degree(int k) const { return static_cast<int>(neighbors(k).size()); }
  int max_degree() const;

  /// c_mk: +1 if k is the lower endpoint of e_m, -1 if the higher, 0 otherwise.
  int edge_sign(int m, int k) const;

  bool is_connected() const;

  /// Longest shortest path (in hops). Throws ProtocolError when disconnected.
  int diameter() const;

  /// Hop distances from `source` (-1 for unreachable nodes); index 0 unused.
  std::vector<int> bfs_distances(int source) const;

  nlohmann::json to_json() const;
  static NetworkGraph from_json(const nlohmann::json& j);
  static NetworkGraph load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  struct Unchecked {};
  NetworkGraph(int node_count, std::vector<Edge> edges, Unchecked);
  void check_node(int k) const;

  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;       // index 0 unused
  std::vector<std::vector<int>> incident_edges_;  // index 0 unused
};

/// Random-attachment spanning tree on a seeded shuffle of the nodes, plus each
/// remaining pair independently with probability p.
NetworkGraph generate_random_topology(int node_count, double extra_edge_probability,
                                      std::uint64_t seed);

enum class TopologyKind { kPathRingSparse, kComplete, kPaperRandom };

/// Accepts "path-ring-sparse" (alias "sparse"), "complete", "paper-random" (alias "random").
TopologyKind parse_topology_kind(std::string_view name);
std::string to_string(TopologyKind kind);

/// Canned networks for experiments. `path-ring-sparse` with K = 8 is the
/// literal two-chain network {1,2},{2,3},{3,4},{4,5},{6,7},{7,8},{1,8}; other K
/// give a path. `paper-random` is generate_random_topology(K, 1/2, seed).
NetworkGraph canned_topology(TopologyKind kind, int node_count, std::uint64_t seed = 0);

}  // namespace drsr
