#include "drsr/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <utility>

#include "drsr/errors.hpp"

namespace drsr {

NetworkGraph::NetworkGraph(int node_count, std::vector<Edge> edges, Unchecked)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ < 1) throw ConfigError("network needs at least one node");
  neighbors_.assign(node_count_ + 1, {});
  incident_edges_.assign(node_count_ + 1, {});
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.low == e.high) throw ConfigError("self-loop at node " + std::to_string(e.low));
    if (e.low > e.high) {
      throw ConfigError("edge {" + std::to_string(e.low) + "," + std::to_string(e.high) +
                        "} must be listed with its smaller endpoint first");
    }
    if (e.low < 1 || e.high > node_count_) {
      throw ConfigError("edge {" + std::to_string(e.low) + "," + std::to_string(e.high) +
                        "} references a node outside 1.." + std::to_string(node_count_));
    }
    if (!seen.emplace(e.low, e.high).second) {
      throw ConfigError("duplicate edge {" + std::to_string(e.low) + "," +
                        std::to_string(e.high) + "}");
    }
    const int m = static_cast<int>(i) + 1;
    neighbors_[e.low].push_back(e.high);
    neighbors_[e.high].push_back(e.low);
    incident_edges_[e.low].push_back(m);
    incident_edges_[e.high].push_back(m);
  }
  for (int k = 1; k <= node_count_; ++k) std::sort(neighbors_[k].begin(), neighbors_[k].end());
}

NetworkGraph::NetworkGraph(int node_count, std::vector<Edge> edges)
    : NetworkGraph(node_count, std::move(edges), Unchecked{}) {
  if (!is_connected()) throw ConfigError("network is not connected");
}

NetworkGraph NetworkGraph::without_connectivity_check(int node_count, std::vector<Edge> edges) {
  return NetworkGraph(node_count, std::move(edges), Unchecked{});
}

void NetworkGraph::check_node(int k) const {
  if (k < 1 || k > node_count_) {
    throw IndexError("node index " + std::to_string(k) + " outside 1.." +
                     std::to_string(node_count_));
  }
}

const Edge& NetworkGraph::edge(int m) const {
  if (m < 1 || m > edge_count()) {
    throw IndexError("edge index " + std::to_string(m) + " outside 1.." +
                     std::to_string(edge_count()));
  }
  return edges_[m - 1];
}

const std::vector<int>& NetworkGraph::neighbors(int k) const {
  check_node(k);
  return neighbors_[k];
}

const std::vector<int>& NetworkGraph::incident_edges(int k) const {
  check_node(k);
  return incident_edges_[k];
}

int NetworkGraph::max_degree() const {
  int out = 0;
  for (int k = 1; k <= node_count_; ++k) out = std::max(out, degree(k));
  return out;
}

int NetworkGraph::edge_sign(int m, int k) const {
  const Edge& e = edge(m);
  check_node(k);
  if (k == e.low) return 1;
  if (k == e.high) return -1;
  return 0;
}

std::vector<int> NetworkGraph::bfs_distances(int source) const {
  check_node(source);
  std::vector<int> dist(node_count_ + 1, -1);
  std::deque<int> frontier{source};
  dist[source] = 0;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop_front();
    for (int v : neighbors_[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

bool NetworkGraph::is_connected() const {
  const auto dist = bfs_distances(1);
  return std::all_of(dist.begin() + 1, dist.end(), [](int d) { return d >= 0; });
}

int NetworkGraph::diameter() const {
  int out = 0;
  for (int k = 1; k <= node_count_; ++k) {
    const auto dist = bfs_distances(k);
    for (int j = 1; j <= node_count_; ++j) {
      if (dist[j] < 0) throw ProtocolError("diameter of a disconnected network");
      out = std::max(out, dist[j]);
    }
  }
  return out;
}

nlohmann::json NetworkGraph::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : edges_) edges.push_back({e.low, e.high});
  return {{"K", node_count_}, {"edges", std::move(edges)}};
}

NetworkGraph NetworkGraph::from_json(const nlohmann::json& j) {
  try {
    const int k = j.at("K").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ConfigError("topology edge must be a pair [k, q]");
      edges.push_back(Edge{e[0].get<int>(), e[1].get<int>()});
    }
    return NetworkGraph(k, std::move(edges));
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed topology: ") + ex.what());
  }
}

NetworkGraph NetworkGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("topology file " + path.string() + " is not valid JSON: " + ex.what());
  }
  return from_json(j);
}

void NetworkGraph::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write topology file " + path.string());
  out << to_json().dump() << '\n';
}

NetworkGraph generate_random_topology(int node_count, double p, std::uint64_t seed) {
  if (node_count < 1) throw ConfigError("random topology needs K >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("edge probability must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::vector<int> order(node_count);
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng);

  std::set<std::pair<int, int>> tree;
  for (int i = 1; i < node_count; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    const int a = order[i];
    const int b = order[pick(rng)];
    tree.emplace(std::min(a, b), std::max(a, b));
  }
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int a = 1; a <= node_count; ++a) {
    for (int b = a + 1; b <= node_count; ++b) {
      if (tree.count({a, b}) != 0 || coin(rng)) edges.push_back(Edge{a, b});
    }
  }
  return NetworkGraph(node_count, std::move(edges));
}

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "path-ring-sparse" || name == "sparse") return TopologyKind::kPathRingSparse;
  if (name == "complete") return TopologyKind::kComplete;
  if (name == "paper-random" || name == "random") return TopologyKind::kPaperRandom;
  throw ConfigError("unknown topology kind '" + std::string(name) + "'");
}

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kPathRingSparse: return "path-ring-sparse";
    case TopologyKind::kComplete: return "complete";
    case TopologyKind::kPaperRandom: return "paper-random";
  }
  return "unknown";
}

NetworkGraph canned_topology(TopologyKind kind, int node_count, std::uint64_t seed) {
  if (node_count < 2) throw ConfigError("canned topologies need K >= 2");
  std::vector<Edge> edges;
  switch (kind) {
    case TopologyKind::kComplete:
      for (int a = 1; a <= node_count; ++a) {
        for (int b = a + 1; b <= node_count; ++b) edges.push_back(Edge{a, b});
      }
      break;
    case TopologyKind::kPathRingSparse:
      if (node_count == 8) {
        edges = {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {6, 7}, {7, 8}, {1, 8}};
      } else {
        for (int a = 1; a < node_count; ++a) edges.push_back(Edge{a, a + 1});
      }
      break;
    case TopologyKind::kPaperRandom:
      return generate_random_topology(node_count, 0.5, seed);
  }
  return NetworkGraph(node_count, std::move(edges));
}

}  // namespace drsr
