#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmb {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;
using PacketId = std::uint64_t;

/// Directed communication link: a transmission from `from` may be heard by `to`.
struct Link {
  NodeId from = 0;
  NodeId to = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

inline std::string to_string(const Link& link) {
  return "(" + std::to_string(link.from) + "," + std::to_string(link.to) + ")";
}

/// Static directed graph with links stored in lexicographic (from, to) order.
/// Link ids are positions in that order, so out-links of a node are contiguous.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t node_count, std::vector<Link> links) : node_count_(node_count) {
    if (node_count_ == 0) throw std::invalid_argument("graph must have at least one node");
    if (node_count_ > std::numeric_limits<NodeId>::max()) throw std::invalid_argument("too many nodes");
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());
    for (const Link& l : links) {
      if (l.from >= node_count_ || l.to >= node_count_)
        throw std::invalid_argument("link " + to_string(l) + " has an endpoint outside [0, " +
                                    std::to_string(node_count_) + ")");
      if (l.from == l.to) throw std::invalid_argument("self-loop link " + to_string(l));
    }
    links_ = std::move(links);

    out_offset_.assign(node_count_ + 1, 0);
    for (const Link& l : links_) ++out_offset_[l.from + 1];
    for (std::size_t u = 0; u < node_count_; ++u) out_offset_[u + 1] += out_offset_[u];

    std::vector<std::size_t> in_count(node_count_ + 1, 0);
    for (const Link& l : links_) ++in_count[l.to + 1];
    for (std::size_t v = 0; v < node_count_; ++v) in_count[v + 1] += in_count[v];
    in_offset_ = in_count;
    in_links_.resize(links_.size());
    for (LinkId id = 0; id < links_.size(); ++id) in_links_[in_count[links_[id].to]++] = id;
  }

  /// Builds a graph with both directions of every undirected edge {u,v}.
  static Graph bidirected(std::size_t node_count, std::span<const std::pair<NodeId, NodeId>> edges) {
    std::vector<Link> links;
    links.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
      links.push_back({u, v});
      links.push_back({v, u});
    }
    return Graph(node_count, std::move(links));
  }

  std::size_t node_count() const { return node_count_; }
  std::size_t link_count() const { return links_.size(); }
  std::span<const Link> links() const { return links_; }
  const Link& link(LinkId id) const { return links_.at(id); }

  /// Contiguous id range of links leaving `u`, ascending by receiver.
  std::pair<LinkId, LinkId> out_range(NodeId u) const {
    return {static_cast<LinkId>(out_offset_[u]), static_cast<LinkId>(out_offset_[u + 1])};
  }

  /// Ids of links entering `v`, ascending by sender.
  std::span<const LinkId> in_links(NodeId v) const {
    return std::span<const LinkId>(in_links_).subspan(in_offset_[v], in_offset_[v + 1] - in_offset_[v]);
  }

  std::optional<LinkId> find_link(NodeId u, NodeId v) const {
    if (u >= node_count_ || v >= node_count_) return std::nullopt;
    auto first = links_.begin() + static_cast<std::ptrdiff_t>(out_offset_[u]);
    auto last = links_.begin() + static_cast<std::ptrdiff_t>(out_offset_[u + 1]);
    auto it = std::lower_bound(first, last, Link{u, v});
    if (it == last || *it != Link{u, v}) return std::nullopt;
    return static_cast<LinkId>(it - links_.begin());
  }

  bool has_link(NodeId u, NodeId v) const { return find_link(u, v).has_value(); }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.node_count_ == b.node_count_ && a.links_ == b.links_;
  }

 private:
  std::size_t node_count_ = 0;
  std::vector<Link> links_;
  std::vector<std::size_t> out_offset_;
  std::vector<std::size_t> in_offset_;
  std::vector<LinkId> in_links_;
};

/// All-pairs shortest hop distances along directed links.
class HopDistances {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  HopDistances() = default;

  explicit HopDistances(const Graph& graph) : n_(graph.node_count()), dist_(n_ * n_, kUnreachable) {
    std::deque<NodeId> frontier;
    for (NodeId s = 0; s < n_; ++s) {
      int* row = &dist_[s * n_];
      row[s] = 0;
      frontier.assign(1, s);
      while (!frontier.empty()) {
        NodeId u = frontier.front();
        frontier.pop_front();
        auto [first, last] = graph.out_range(u);
        for (LinkId id = first; id < last; ++id) {
          NodeId v = graph.link(id).to;
          if (row[v] == kUnreachable) {
            row[v] = row[u] + 1;
            frontier.push_back(v);
          }
        }
      }
    }
  }

  int operator()(NodeId from, NodeId to) const { return dist_[from * n_ + to]; }
  std::size_t node_count() const { return n_; }

  /// Largest finite distance, or kUnreachable when some pair is disconnected.
  int diameter() const {
    int best = 0;
    for (int d : dist_) best = std::max(best, d);
    return best;
  }

 private:
  std::size_t n_ = 0;
  std::vector<int> dist_;
};

}  // namespace mmb
