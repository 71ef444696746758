#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mmb/network.hpp"
#include "mmb/topology.hpp"

namespace mmb {

enum class LayerAffectanceMode { kExact, kLayerHeuristic };

/// Most nodes a layer may have for exact subset maximization.
inline constexpr std::size_t kMaxExactLayerNodes = 20;

struct TreeCharacteristics {
  double max_avg_layer_affectance = 0.0;  // K
  double max_path_affectance = 0.0;       // M
  double objective = 0.0;                 // M (M / log2 n + K)
};

inline double tree_objective(double k, double m, std::size_t n) {
  if (n < 2) throw std::invalid_argument("objective needs n >= 2");
  return m * (m / std::log2(static_cast<double>(n)) + k);
}

namespace detail {

/// a_S(L(S)) / |L(S)| for a set S of same-layer nodes (ascending), where
/// L(S) are the tree links from S to the next layer. Returns nullopt when S
/// has no such links. Summation order: links ascending, then interferers
/// ascending.
inline std::optional<double> average_set_affectance(const Network& net, const BfsTree& tree,
                                                    const std::vector<NodeId>& set) {
  double total = 0.0;
  std::size_t links = 0;
  for (NodeId parent : set) {
    for (LinkId l : tree.child_links(parent)) {
      total += affectance_on_link(net, set, l);
      ++links;
    }
  }
  if (links == 0) return std::nullopt;
  return total / static_cast<double>(links);
}

}  // namespace detail

/// K(T): the worst average affectance a set of same-layer nodes inflicts on
/// the tree links from that set to the next layer. Exact mode maximizes over
/// every subset of each layer that owns at least one tree link; the heuristic
/// takes each whole layer as the only candidate. Leaves count as interferers.
inline double max_avg_layer_affectance(const Network& net, const BfsTree& tree, LayerAffectanceMode mode) {
  double best = 0.0;
  for (int d = 0; d < tree.depth(); ++d) {
    const std::vector<NodeId>& layer = tree.layer_nodes(d);
    if (mode == LayerAffectanceMode::kLayerHeuristic) {
      if (auto v = detail::average_set_affectance(net, tree, layer)) best = std::max(best, *v);
      continue;
    }
    if (layer.size() > kMaxExactLayerNodes)
      throw std::invalid_argument("layer " + std::to_string(d) + " has " + std::to_string(layer.size()) +
                                  " nodes; exact K is limited to " + std::to_string(kMaxExactLayerNodes) +
                                  ", use the layer heuristic");
    std::vector<NodeId> subset;
    const std::uint32_t full = (1u << layer.size()) - 1u;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
      subset.clear();
      for (std::size_t i = 0; i < layer.size(); ++i)
        if (mask & (1u << i)) subset.push_back(layer[i]);
      if (auto v = detail::average_set_affectance(net, tree, subset)) best = std::max(best, *v);
    }
  }
  return best;
}

/// M(T): the heaviest root-to-leaf path, where link (u,v) weighs the
/// affectance of u's whole layer on it. Sums accumulate from the root down.
inline double max_path_affectance(const Network& net, const BfsTree& tree) {
  std::vector<double> reach(tree.node_count(), 0.0);
  double best = 0.0;
  for (int d = 0; d <= tree.depth(); ++d) {
    const std::vector<NodeId>& layer = tree.layer_nodes(d);
    for (NodeId u : layer) {
      const auto& kids = tree.children(u);
      const auto& links = tree.child_links(u);
      for (std::size_t i = 0; i < kids.size(); ++i) reach[kids[i]] = reach[u] + affectance_on_link(net, layer, links[i]);
      if (kids.empty()) best = std::max(best, reach[u]);
    }
  }
  return best;
}

inline TreeCharacteristics characterize(const Network& net, const BfsTree& tree, LayerAffectanceMode mode) {
  TreeCharacteristics c;
  c.max_avg_layer_affectance = max_avg_layer_affectance(net, tree, mode);
  c.max_path_affectance = max_path_affectance(net, tree);
  c.objective = tree_objective(c.max_avg_layer_affectance, c.max_path_affectance, net.node_count());
  return c;
}

enum class TminMode { kExhaustive, kSingleBfs };

inline std::string_view to_string(TminMode mode) { return mode == TminMode::kExhaustive ? "exhaustive" : "single_bfs"; }

inline TminMode parse_tmin_mode(std::string_view name) {
  if (name == "exhaustive") return TminMode::kExhaustive;
  if (name == "single_bfs") return TminMode::kSingleBfs;
  throw std::invalid_argument("unknown tmin mode '" + std::string(name) + "'");
}

struct TminSelection {
  BfsTree tree;
  TreeCharacteristics characteristics;
};

/// Exhaustive: the enumerated BFS tree with the smallest objective under exact
/// K (first in enumeration order on ties). Single BFS: the lowest-id-parent
/// tree with heuristic K.
inline TminSelection select_tmin(const Network& net, NodeId root, TminMode mode,
                                 std::size_t cap = kDefaultTreeCap) {
  if (mode == TminMode::kSingleBfs) {
    BfsTree tree = bfs_tree(net.graph(), root);
    TreeCharacteristics c = characterize(net, tree, LayerAffectanceMode::kLayerHeuristic);
    return {std::move(tree), c};
  }
  BfsTreeEnumeration all = enumerate_bfs_trees(net.graph(), root, cap);
  if (all.truncated)
    throw std::invalid_argument("root " + std::to_string(root) + " has " + std::to_string(all.total) +
                                " BFS trees, more than the cap of " + std::to_string(cap) + "; use single_bfs");
  std::size_t best = 0;
  TreeCharacteristics best_c = characterize(net, all.trees[0], LayerAffectanceMode::kExact);
  for (std::size_t i = 1; i < all.trees.size(); ++i) {
    TreeCharacteristics c = characterize(net, all.trees[i], LayerAffectanceMode::kExact);
    if (c.objective < best_c.objective) {
      best = i;
      best_c = c;
    }
  }
  return {std::move(all.trees[best]), best_c};
}

}  // namespace mmb
