#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include "mmb/network.hpp"
#include "mmb/topology.hpp"

namespace mmb {

/// BFS tree with Low-Affectance Broadcast Spanning Tree ranks.
///
/// A node is fast when it has a child of its own rank; fast nodes of layer d
/// and rank r form the fast set F(d, r). Every tree link from a member of
/// F(d, r) to a rank-r child suffers affectance < 1 from F(d, r).
class RankedTree {
 public:
  RankedTree(BfsTree tree, std::vector<int> rank, std::vector<std::vector<std::vector<NodeId>>> fast_sets)
      : tree_(std::move(tree)), rank_(std::move(rank)), fast_sets_(std::move(fast_sets)), fast_(rank_.size(), 0) {
    for (int r : rank_) max_rank_ = std::max(max_rank_, r);
    for (const auto& by_rank : fast_sets_)
      for (const auto& set : by_rank)
        for (NodeId u : set) fast_[u] = 1;
  }

  const BfsTree& tree() const { return tree_; }
  NodeId root() const { return tree_.root(); }
  int rank(NodeId u) const { return rank_[u]; }
  const std::vector<int>& ranks() const { return rank_; }
  int max_rank() const { return max_rank_; }
  bool is_fast(NodeId u) const { return fast_[u] != 0; }

  /// Members of F(d, r), ascending. Empty outside the allocated range.
  const std::vector<NodeId>& fast_set(int d, int r) const {
    static const std::vector<NodeId> kEmpty;
    if (d < 0 || static_cast<std::size_t>(d) >= fast_sets_.size()) return kEmpty;
    const auto& by_rank = fast_sets_[static_cast<std::size_t>(d)];
    if (r < 1 || static_cast<std::size_t>(r) >= by_rank.size()) return kEmpty;
    return by_rank[static_cast<std::size_t>(r)];
  }

 private:
  BfsTree tree_;
  std::vector<int> rank_;
  std::vector<std::vector<std::vector<NodeId>>> fast_sets_;  // [d][r], r from 1
  std::vector<char> fast_;
  int max_rank_ = 0;
};

namespace detail {

inline bool set_contains(const std::vector<NodeId>& set, NodeId u) {
  return std::binary_search(set.begin(), set.end(), u);
}

inline void set_erase(std::vector<NodeId>& set, NodeId u) {
  auto it = std::lower_bound(set.begin(), set.end(), u);
  if (it != set.end() && *it == u) set.erase(it);
}

inline void set_insert(std::vector<NodeId>& set, NodeId u) {
  auto it = std::lower_bound(set.begin(), set.end(), u);
  if (it == set.end() || *it != u) set.insert(it, u);
}

}  // namespace detail

/// Ranks a BFS tree bottom-up. All nodes start at rank 1 with non-leaves in
/// F(d, 1). For each layer d from the deepest parent layer to the root:
///  1. for r ascending and u in F(d, r) ascending, each link from u to a
///     rank-r child (ascending) is checked; if the current F(d, r) puts
///     affectance >= 1 on it, u takes rank r + 1 and leaves F(d, r);
///  2. every layer above d is re-ranked top-down from its children: a node
///     leaves its fast set, and rejoins at the maximum child rank if that is
///     at least its own rank.
inline RankedTree build_labst(const Network& net, BfsTree tmin) {
  const std::size_t n = tmin.node_count();
  const int depth = tmin.depth();
  const auto rank_slots = static_cast<std::size_t>(depth) + 3;  // ranks 1..D+1, plus headroom

  std::vector<int> rank(n, 1);
  std::vector<std::vector<std::vector<NodeId>>> fast(static_cast<std::size_t>(depth) + 1,
                                                     std::vector<std::vector<NodeId>>(rank_slots));
  auto set_of = [&](int d, int r) -> std::vector<NodeId>& {
    auto& by_rank = fast[static_cast<std::size_t>(d)];
    if (static_cast<std::size_t>(r) >= by_rank.size()) by_rank.resize(static_cast<std::size_t>(r) + 1);
    return by_rank[static_cast<std::size_t>(r)];
  };

  for (NodeId u = 0; u < n; ++u)
    if (!tmin.is_leaf(u)) set_of(tmin.layer(u), 1).push_back(u);

  for (int d = depth - 1; d >= 0; --d) {
    for (int r = 1; r <= depth + 1; ++r) {
      const std::vector<NodeId> members = set_of(d, r);
      for (NodeId u : members) {
        const auto& kids = tmin.children(u);
        const auto& links = tmin.child_links(u);
        for (std::size_t i = 0; i < kids.size(); ++i) {
          if (rank[kids[i]] != r) continue;
          std::vector<NodeId>& current = set_of(d, r);
          if (!detail::set_contains(current, u)) break;
          if (affectance_on_link(net, current, links[i]) >= 1.0) {
            rank[u] = rank[kids[i]] + 1;
            detail::set_erase(current, u);
          }
        }
      }
    }
    for (int up = d - 1; up >= 0; --up) {
      for (NodeId u : tmin.layer_nodes(up)) {
        detail::set_erase(set_of(up, rank[u]), u);
        int child_max = 0;
        for (NodeId c : tmin.children(u)) child_max = std::max(child_max, rank[c]);
        if (rank[u] <= child_max) {
          rank[u] = child_max;
          detail::set_insert(set_of(up, rank[u]), u);
        }
      }
    }
  }
  return RankedTree(std::move(tmin), std::move(rank), std::move(fast));
}

/// Per-node CSV: node, layer, rank, fast flag.
inline void write_labst_csv(std::ostream& os, const RankedTree& ranked) {
  os << "node,layer,rank,fast\n";
  for (NodeId u = 0; u < ranked.tree().node_count(); ++u)
    os << u << ',' << ranked.tree().layer(u) << ',' << ranked.rank(u) << ',' << (ranked.is_fast(u) ? 1 : 0) << '\n';
}

}  // namespace mmb
