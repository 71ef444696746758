#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmb/graph.hpp"

namespace mmb {

/// Dense |V| x |E| matrix: entry (u, l) is the interference a transmitting
/// node u adds to link l. Stored one row per node.
class AffectanceMatrix {
 public:
  AffectanceMatrix() = default;
  AffectanceMatrix(std::size_t node_count, std::size_t link_count)
      : nodes_(node_count), links_(link_count), values_(node_count * link_count, 0.0) {}

  std::size_t node_count() const { return nodes_; }
  std::size_t link_count() const { return links_; }

  double operator()(NodeId u, LinkId l) const { return values_[u * links_ + l]; }
  void set(NodeId u, LinkId l, double value) { values_.at(u * links_ + l) = value; }

  friend bool operator==(const AffectanceMatrix&, const AffectanceMatrix&) = default;

 private:
  std::size_t nodes_ = 0;
  std::size_t links_ = 0;
  std::vector<double> values_;
};

/// Connectivity graph, affectance matrix and degradation distance.
///
/// Construction enforces the model invariants: entries are finite and
/// non-negative, a sender never affects its own link, and a node at hop
/// distance >= degradation_distance from a link's receiver has no affectance
/// on it (unreachable counts as infinitely far). Immutable afterwards.
class Network {
 public:
  Network(Graph graph, AffectanceMatrix matrix, int degradation_distance)
      : graph_(std::move(graph)), matrix_(std::move(matrix)), alpha_(degradation_distance) {
    if (alpha_ < 1) throw std::invalid_argument("degradation distance must be >= 1");
    if (matrix_.node_count() != graph_.node_count() || matrix_.link_count() != graph_.link_count())
      throw std::invalid_argument("affectance matrix shape does not match the graph");
    distances_ = HopDistances(graph_);
    for (NodeId u = 0; u < graph_.node_count(); ++u) {
      for (LinkId l = 0; l < graph_.link_count(); ++l) {
        const double a = matrix_(u, l);
        const Link& link = graph_.link(l);
        if (!std::isfinite(a) || a < 0.0)
          throw std::invalid_argument("affectance of node " + std::to_string(u) + " on link " +
                                      to_string(link) + " is not a finite non-negative value");
        if (a == 0.0) continue;
        if (u == link.from)
          throw std::invalid_argument("sender " + std::to_string(u) + " has nonzero affectance on its own link " +
                                      to_string(link));
        if (distances_(u, link.to) >= alpha_)
          throw std::invalid_argument("node " + std::to_string(u) + " affects link " + to_string(link) +
                                      " from beyond the degradation distance " + std::to_string(alpha_));
      }
    }
  }

  const Graph& graph() const { return graph_; }
  const AffectanceMatrix& matrix() const { return matrix_; }
  const HopDistances& hop_distances() const { return distances_; }
  int degradation_distance() const { return alpha_; }
  std::size_t node_count() const { return graph_.node_count(); }
  double affectance(NodeId u, LinkId l) const { return matrix_(u, l); }

 private:
  Graph graph_;
  AffectanceMatrix matrix_;
  int alpha_ = 1;
  HopDistances distances_;
};

/// Affectance of a set of transmitters on one link; the link's own sender is
/// excluded from the sum. `transmitters` must not contain duplicates.
inline double affectance_on_link(const Network& net, std::span<const NodeId> transmitters, LinkId link) {
  if (link >= net.graph().link_count())
    throw std::invalid_argument("unknown link id " + std::to_string(link));
  const NodeId sender = net.graph().link(link).from;
  double sum = 0.0;
  for (NodeId u : transmitters) {
    if (u >= net.node_count()) throw std::invalid_argument("unknown node id " + std::to_string(u));
    if (u != sender) sum += net.affectance(u, link);
  }
  return sum;
}

inline double affectance_on_link(const Network& net, std::span<const NodeId> transmitters, Link link) {
  auto id = net.graph().find_link(link.from, link.to);
  if (!id) throw std::invalid_argument("unknown link " + to_string(link));
  return affectance_on_link(net, transmitters, *id);
}

struct Transmission {
  NodeId sender = 0;
  PacketId packet = 0;
};

struct Reception {
  NodeId sender = 0;
  PacketId packet = 0;
  LinkId link = 0;
};

struct SlotOutcome {
  std::map<NodeId, Reception> receptions;  // keyed by listener
  std::vector<LinkId> collisions;          // ascending link id
};

/// Resolves one time slot. A listener v receives u's packet over (u,v) iff the
/// affectance of all transmitters on (u,v) is below 1. When several links into
/// v qualify, the lowest sender id wins. Links that fail the threshold while
/// their receiver listens are reported as collisions.
inline SlotOutcome step(const Network& net, std::span<const Transmission> transmissions,
                        std::span<const NodeId> listeners) {
  const Graph& g = net.graph();
  const std::size_t n = g.node_count();

  enum : unsigned char { kIdle, kTransmit, kListen };
  std::vector<unsigned char> role(n, kIdle);
  std::vector<Transmission> sorted(transmissions.begin(), transmissions.end());
  std::sort(sorted.begin(), sorted.end(), [](const Transmission& a, const Transmission& b) { return a.sender < b.sender; });
  std::vector<NodeId> senders;
  senders.reserve(sorted.size());
  for (const Transmission& t : sorted) {
    if (t.sender >= n) throw std::invalid_argument("unknown transmitter " + std::to_string(t.sender));
    if (role[t.sender] == kTransmit)
      throw std::invalid_argument("node " + std::to_string(t.sender) + " transmits twice in one slot");
    role[t.sender] = kTransmit;
    senders.push_back(t.sender);
  }
  for (NodeId v : listeners) {
    if (v >= n) throw std::invalid_argument("unknown listener " + std::to_string(v));
    if (role[v] == kTransmit)
      throw std::logic_error("node " + std::to_string(v) + " cannot transmit and listen in the same slot");
    role[v] = kListen;
  }

  SlotOutcome outcome;
  for (const Transmission& t : sorted) {
    auto [first, last] = g.out_range(t.sender);
    for (LinkId l = first; l < last; ++l) {
      const NodeId v = g.link(l).to;
      if (role[v] != kListen) continue;
      double a = 0.0;
      for (NodeId w : senders)
        if (w != t.sender) a += net.affectance(w, l);
      if (a < 1.0) {
        outcome.receptions.try_emplace(v, Reception{t.sender, t.packet, l});
      } else {
        outcome.collisions.push_back(l);
      }
    }
  }
  std::sort(outcome.collisions.begin(), outcome.collisions.end());
  return outcome;
}

/// Radio Network model: w interferes with (u,v) iff w != u and w is v itself
/// or an in-neighbor of v.
inline AffectanceMatrix radio_network_matrix(const Graph& graph) {
  AffectanceMatrix m(graph.node_count(), graph.link_count());
  for (LinkId l = 0; l < graph.link_count(); ++l) {
    const Link& link = graph.link(l);
    for (NodeId w = 0; w < graph.node_count(); ++w) {
      if (w == link.from) continue;
      if (w == link.to || graph.has_link(w, link.to)) m.set(w, l, 1.0);
    }
  }
  return m;
}

using Point = std::array<double, 2>;

struct SinrParams {
  double power = 1.0;
  double noise = 0.0;
  double beta = 1.0;       // reception threshold on the signal to interference-plus-noise ratio
  double path_loss = 2.0;  // exponent
};

inline double euclidean(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

/// SINR model as affectance: A(w,(u,v)) = (P/d_wv^a) / (P/(beta d_uv^a) - N).
/// The receiver's own entry A(v,(u,v)) has d_vv = 0 and is stored as 1 (a
/// transmitting receiver cannot receive), matching the other matrices.
inline AffectanceMatrix sinr_matrix(const Graph& graph, std::span<const Point> positions, const SinrParams& p) {
  if (positions.size() != graph.node_count()) throw std::invalid_argument("one position per node required");
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (positions[i] == positions[j])
        throw std::invalid_argument("nodes " + std::to_string(i) + " and " + std::to_string(j) + " share a position");

  AffectanceMatrix m(graph.node_count(), graph.link_count());
  for (LinkId l = 0; l < graph.link_count(); ++l) {
    const Link& link = graph.link(l);
    const double signal_margin =
        p.power / (p.beta * std::pow(euclidean(positions[link.from], positions[link.to]), p.path_loss)) - p.noise;
    if (!(signal_margin > 0.0))
      throw std::invalid_argument("link " + to_string(link) + " is infeasible: noise exceeds the received signal");
    for (NodeId w = 0; w < graph.node_count(); ++w) {
      if (w == link.from) continue;
      if (w == link.to) {
        m.set(w, l, 1.0);
        continue;
      }
      const double interference = p.power / std::pow(euclidean(positions[w], positions[link.to]), p.path_loss);
      m.set(w, l, interference / signal_margin);
    }
  }
  return m;
}

/// Hop-distance affectance: with d = d(i,k) for interferer i and link (j,k),
/// entry is 1 if d = 0, 1/d^2 if 0 < d < alpha, else 0. Sender entries are 0.
inline AffectanceMatrix hop_affectance_matrix(const Graph& graph, const HopDistances& dist, int alpha) {
  if (alpha < 1) throw std::invalid_argument("alpha must be >= 1");
  AffectanceMatrix m(graph.node_count(), graph.link_count());
  for (LinkId l = 0; l < graph.link_count(); ++l) {
    const Link& link = graph.link(l);
    for (NodeId i = 0; i < graph.node_count(); ++i) {
      if (i == link.from) continue;
      const int d = dist(i, link.to);
      if (d >= alpha) continue;
      m.set(i, l, d == 0 ? 1.0 : 1.0 / (static_cast<double>(d) * d));
    }
  }
  return m;
}

inline Network make_radio_network(Graph graph) {
  AffectanceMatrix m = radio_network_matrix(graph);
  return Network(std::move(graph), std::move(m), 2);
}

inline Network make_hop_network(Graph graph, int alpha) {
  AffectanceMatrix m = hop_affectance_matrix(graph, HopDistances(graph), alpha);
  return Network(std::move(graph), std::move(m), alpha);
}

/// SINR interference has no hop cutoff, so the degradation distance is set to
/// n, which exceeds every finite hop distance. The graph must be strongly
/// connected for the distance invariant to hold.
inline Network make_sinr_network(Graph graph, std::span<const Point> positions, const SinrParams& params) {
  AffectanceMatrix m = sinr_matrix(graph, positions, params);
  const int alpha = static_cast<int>(std::max<std::size_t>(graph.node_count(), 1));
  return Network(std::move(graph), std::move(m), alpha);
}

/// Text format: header `n m alpha`, then m lines `u v`, then one `w u v value`
/// line per nonzero matrix entry.
inline void write_network(std::ostream& os, const Network& net) {
  const Graph& g = net.graph();
  os << g.node_count() << ' ' << g.link_count() << ' ' << net.degradation_distance() << '\n';
  for (const Link& l : g.links()) os << l.from << ' ' << l.to << '\n';
  std::ostringstream value;
  value << std::setprecision(17);
  for (NodeId w = 0; w < g.node_count(); ++w) {
    for (LinkId l = 0; l < g.link_count(); ++l) {
      const double a = net.affectance(w, l);
      if (a == 0.0) continue;
      value.str("");
      value << a;
      os << w << ' ' << g.link(l).from << ' ' << g.link(l).to << ' ' << value.str() << '\n';
    }
  }
}

inline Network read_network(std::istream& is) {
  auto fail = [](const std::string& what) -> Network { throw std::invalid_argument("network file: " + what); };
  std::size_t n = 0, m = 0;
  int alpha = 0;
  if (!(is >> n >> m >> alpha)) return fail("missing or malformed header `n m alpha`");
  std::vector<Link> links;
  links.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    long long u = -1, v = -1;
    if (!(is >> u >> v)) return fail("expected " + std::to_string(m) + " link lines, got " + std::to_string(i));
    if (u < 0 || v < 0) return fail("negative node id on link line " + std::to_string(i + 1));
    links.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  Graph graph(n, std::move(links));
  if (graph.link_count() != m) return fail("duplicate links");
  AffectanceMatrix matrix(graph.node_count(), graph.link_count());
  long long w = 0, u = 0, v = 0;
  while (is >> w) {
    double value = 0.0;
    if (!(is >> u >> v >> value)) return fail("malformed matrix line after node " + std::to_string(w));
    if (w < 0 || static_cast<std::size_t>(w) >= n) return fail("matrix line names unknown node " + std::to_string(w));
    auto id = graph.find_link(static_cast<NodeId>(u), static_cast<NodeId>(v));
    if (!id) return fail("matrix line names unknown link (" + std::to_string(u) + "," + std::to_string(v) + ")");
    matrix.set(static_cast<NodeId>(w), *id, value);
  }
  if (!is.eof()) return fail("trailing garbage");
  return Network(std::move(graph), std::move(matrix), alpha);
}

}  // namespace mmb
