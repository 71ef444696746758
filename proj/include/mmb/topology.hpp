#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmb/graph.hpp"
#include "mmb/random.hpp"

namespace mmb {

enum class TopologyKind { kPath, kBipartite, kOverlapTrees, kRandomConnected };

inline std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kPath: return "path";
    case TopologyKind::kBipartite: return "bipartite";
    case TopologyKind::kOverlapTrees: return "overlap_trees";
    case TopologyKind::kRandomConnected: return "random_connected";
  }
  return "?";
}

inline TopologyKind parse_topology(std::string_view name) {
  for (auto k : {TopologyKind::kPath, TopologyKind::kBipartite, TopologyKind::kOverlapTrees,
                 TopologyKind::kRandomConnected})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown topology '" + std::string(name) + "'");
}

/// Layered BFS spanning tree. Layer d holds the nodes at shortest hop
/// distance d from the root; every parent sits one layer up.
class BfsTree {
 public:
  static constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

  /// Validates `parent` against the graph: tree links must be graph links and
  /// each node's layer must equal its BFS distance from `root`.
  BfsTree(const Graph& graph, NodeId root, std::vector<NodeId> parent)
      : root_(root), parent_(std::move(parent)) {
    const std::size_t n = graph.node_count();
    if (root_ >= n) throw std::invalid_argument("root " + std::to_string(root_) + " is not a node");
    if (parent_.size() != n) throw std::invalid_argument("parent table size mismatch");
    if (parent_[root_] != kNoParent) throw std::invalid_argument("root must not have a parent");

    layer_ = bfs_distances(graph, root_);
    int depth = 0;
    for (NodeId v = 0; v < n; ++v) {
      if (layer_[v] == kUnreached) throw std::invalid_argument("node " + std::to_string(v) + " is unreachable from root " + std::to_string(root_));
      depth = std::max(depth, layer_[v]);
    }
    layers_.assign(static_cast<std::size_t>(depth) + 1, {});
    children_.assign(n, {});
    child_links_.assign(n, {});
    for (NodeId v = 0; v < n; ++v) {
      layers_[layer_[v]].push_back(v);
      if (v == root_) continue;
      const NodeId p = parent_[v];
      if (p >= n) throw std::invalid_argument("node " + std::to_string(v) + " has no parent");
      auto link = graph.find_link(p, v);
      if (!link) throw std::invalid_argument("tree link (" + std::to_string(p) + "," + std::to_string(v) + ") is not a graph link");
      if (layer_[p] != layer_[v] - 1)
        throw std::invalid_argument("parent of node " + std::to_string(v) + " is not in the previous layer");
      children_[p].push_back(v);
      child_links_[p].push_back(*link);
    }
  }

  NodeId root() const { return root_; }
  std::size_t node_count() const { return parent_.size(); }
  NodeId parent(NodeId v) const { return parent_[v]; }
  const std::vector<NodeId>& parents() const { return parent_; }
  int layer(NodeId v) const { return layer_[v]; }
  int depth() const { return static_cast<int>(layers_.size()) - 1; }
  const std::vector<std::vector<NodeId>>& layers() const { return layers_; }
  const std::vector<NodeId>& layer_nodes(int d) const { return layers_[static_cast<std::size_t>(d)]; }
  /// Children of `u` ascending; child_links(u)[i] is the link to children(u)[i].
  const std::vector<NodeId>& children(NodeId u) const { return children_[u]; }
  const std::vector<LinkId>& child_links(NodeId u) const { return child_links_[u]; }
  bool is_leaf(NodeId u) const { return children_[u].empty(); }

  friend bool operator==(const BfsTree& a, const BfsTree& b) { return a.root_ == b.root_ && a.parent_ == b.parent_; }

  static constexpr int kUnreached = -1;

  static std::vector<int> bfs_distances(const Graph& graph, NodeId root) {
    std::vector<int> dist(graph.node_count(), kUnreached);
    std::deque<NodeId> frontier{root};
    dist[root] = 0;
    while (!frontier.empty()) {
      NodeId u = frontier.front();
      frontier.pop_front();
      auto [first, last] = graph.out_range(u);
      for (LinkId l = first; l < last; ++l) {
        NodeId v = graph.link(l).to;
        if (dist[v] == kUnreached) {
          dist[v] = dist[u] + 1;
          frontier.push_back(v);
        }
      }
    }
    return dist;
  }

 private:
  NodeId root_ = 0;
  std::vector<NodeId> parent_;
  std::vector<int> layer_;
  std::vector<std::vector<NodeId>> layers_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<std::vector<LinkId>> child_links_;
};

namespace detail {

/// Per non-root node (ascending id), the candidate parents: in-neighbors one
/// layer closer to the root, ascending.
inline std::vector<std::pair<NodeId, std::vector<NodeId>>> parent_choices(const Graph& graph, NodeId root) {
  if (root >= graph.node_count()) throw std::invalid_argument("root " + std::to_string(root) + " is not a node");
  const auto dist = BfsTree::bfs_distances(graph, root);
  std::vector<std::pair<NodeId, std::vector<NodeId>>> choices;
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    if (dist[v] == BfsTree::kUnreached)
      throw std::invalid_argument("graph is disconnected: node " + std::to_string(v) + " is unreachable from " +
                                  std::to_string(root));
    if (v == root) continue;
    std::vector<NodeId> options;
    for (LinkId l : graph.in_links(v)) {
      NodeId p = graph.link(l).from;
      if (dist[p] == dist[v] - 1) options.push_back(p);
    }
    choices.emplace_back(v, std::move(options));
  }
  return choices;
}

}  // namespace detail

/// BFS tree where every node adopts its lowest-id neighbor in the previous layer.
inline BfsTree bfs_tree(const Graph& graph, NodeId root) {
  std::vector<NodeId> parent(graph.node_count(), BfsTree::kNoParent);
  for (const auto& [v, options] : detail::parent_choices(graph, root)) parent[v] = options.front();
  return BfsTree(graph, root, std::move(parent));
}

struct BfsTreeEnumeration {
  std::vector<BfsTree> trees;
  std::uint64_t total = 0;  // size of the full class, saturated at uint64 max
  bool truncated = false;
};

inline constexpr std::size_t kDefaultTreeCap = 10000;

/// Every BFS tree rooted at `root`, in lexicographic order of the parent
/// choices of nodes 0, 1, ... (lowest node id most significant). At most
/// `cap` trees are materialized; `truncated` reports whether more exist.
inline BfsTreeEnumeration enumerate_bfs_trees(const Graph& graph, NodeId root, std::size_t cap = kDefaultTreeCap) {
  const auto choices = detail::parent_choices(graph, root);
  BfsTreeEnumeration out;
  out.total = 1;
  for (const auto& [v, options] : choices) {
    const std::uint64_t k = options.size();
    if (out.total > std::numeric_limits<std::uint64_t>::max() / k)
      out.total = std::numeric_limits<std::uint64_t>::max();
    else
      out.total *= k;
  }
  out.truncated = out.total > cap;

  std::vector<std::size_t> digit(choices.size(), 0);
  std::vector<NodeId> parent(graph.node_count(), BfsTree::kNoParent);
  while (out.trees.size() < cap) {
    for (std::size_t i = 0; i < choices.size(); ++i) parent[choices[i].first] = choices[i].second[digit[i]];
    out.trees.emplace_back(graph, root, parent);
    std::size_t i = choices.size();
    while (i > 0) {
      --i;
      if (++digit[i] < choices[i].second.size()) break;
      digit[i] = 0;
      if (i == 0) return out;
    }
    if (choices.empty()) return out;
  }
  return out;
}

namespace detail {

inline bool is_connected(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  std::vector<std::vector<NodeId>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

inline constexpr int kConnectRetries = 10000;

/// G(n, p) with p = min(1, 2 ln(n) / n), resampled until connected.
inline Graph random_connected(std::size_t n, RandomStream& rng) {
  const double p = std::min(1.0, 2.0 * std::log(static_cast<double>(n)) / static_cast<double>(n));
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int attempt = 0; attempt < kConnectRetries; ++attempt) {
    edges.clear();
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v)
        if (rng.bernoulli(p)) edges.emplace_back(u, v);
    if (is_connected(n, edges)) return Graph::bidirected(n, edges);
  }
  throw std::runtime_error("no connected G(n,p) sample after " + std::to_string(kConnectRetries) + " attempts");
}

}  // namespace detail

/// Benchmark topologies. All links are bidirected and the result depends only
/// on (kind, n, seed).
inline Graph generate(TopologyKind kind, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("topologies need at least 2 nodes");
  std::vector<std::pair<NodeId, NodeId>> edges;
  switch (kind) {
    case TopologyKind::kPath:
      for (NodeId i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      return Graph::bidirected(n, edges);
    case TopologyKind::kBipartite: {
      if (n % 2 != 0) throw std::invalid_argument("bipartite topology needs an even node count, got " + std::to_string(n));
      const NodeId half = static_cast<NodeId>(n / 2);
      for (NodeId i = 0; i < half; ++i)
        for (NodeId j = half; j < n; ++j) edges.emplace_back(i, j);
      return Graph::bidirected(n, edges);
    }
    case TopologyKind::kRandomConnected: {
      RandomStream rng = derive_stream(seed, "topology.random_connected");
      return detail::random_connected(n, rng);
    }
    case TopologyKind::kOverlapTrees: {
      RandomStream rng = derive_stream(seed, "topology.overlap_trees");
      const Graph base = detail::random_connected(n, rng);
      const NodeId first = static_cast<NodeId>(rng.uniform_index(n));
      NodeId second = static_cast<NodeId>(rng.uniform_index(n - 1));
      if (second >= first) ++second;
      std::vector<Link> links;
      for (NodeId root : {first, second}) {
        const BfsTree tree = bfs_tree(base, root);
        for (NodeId v = 0; v < n; ++v) {
          if (v == root) continue;
          links.push_back({tree.parent(v), v});
          links.push_back({v, tree.parent(v)});
        }
      }
      return Graph(n, std::move(links));
    }
  }
  throw std::invalid_argument("unknown topology kind");
}

}  // namespace mmb
