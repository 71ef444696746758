#include <gtest/gtest.h>

#include <sstream>

#include "mmb/network.hpp"
#include "oracles.hpp"

using namespace mmb;

namespace {

Graph path_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return Graph::bidirected(n, e);
}

LinkId link_id(const Network& net, NodeId u, NodeId v) { return *net.graph().find_link(u, v); }

}  // namespace

TEST(AffectanceOnLink, SenderOnlyAndEmptySetAreZero) {
  Network net = make_radio_network(path_graph(3));
  const NodeId only_sender[] = {0};
  EXPECT_EQ(affectance_on_link(net, only_sender, link_id(net, 0, 1)), 0.0);
  EXPECT_EQ(affectance_on_link(net, {}, link_id(net, 0, 1)), 0.0);
}

TEST(AffectanceOnLink, RadioPathCountsTheOtherNeighbor) {
  Network net = make_radio_network(path_graph(3));
  const NodeId both_ends[] = {0, 2};
  EXPECT_EQ(affectance_on_link(net, both_ends, Link{0, 1}), 1.0);
}

TEST(AffectanceOnLink, UnknownLinkIsRejected) {
  Network net = make_radio_network(path_graph(3));
  EXPECT_THROW(affectance_on_link(net, {}, Link{0, 2}), std::invalid_argument);
  EXPECT_THROW(affectance_on_link(net, {}, LinkId{99}), std::invalid_argument);
}

TEST(AffectanceOnLink, AdditiveAndMonotone) {
  RandomStream rng(4);
  Graph g = oracle::random_connected_graph(8, 0.3, rng);
  Network net = make_hop_network(g, 3);
  const std::vector<NodeId> a{1, 4}, b{2, 6, 7}, both{1, 2, 4, 6, 7};
  for (LinkId l = 0; l < net.graph().link_count(); ++l) {
    const NodeId s = net.graph().link(l).from;
    if (s == 1 || s == 2 || s == 4 || s == 6 || s == 7) continue;
    EXPECT_DOUBLE_EQ(affectance_on_link(net, both, l), affectance_on_link(net, a, l) + affectance_on_link(net, b, l));
    EXPECT_GE(affectance_on_link(net, both, l), affectance_on_link(net, a, l));
  }
}

TEST(RadioMatrix, Entries) {
  Graph g = path_graph(3);
  AffectanceMatrix m = radio_network_matrix(g);
  for (LinkId l = 0; l < g.link_count(); ++l) EXPECT_EQ(m(g.link(l).from, l), 0.0);
  EXPECT_EQ(m(2, *g.find_link(0, 1)), 1.0);  // c neighbors receiver b
  EXPECT_EQ(m(1, *g.find_link(0, 1)), 1.0);  // busy receiver
  EXPECT_EQ(m(0, *g.find_link(2, 1)), 1.0);
  EXPECT_EQ(m(2, *g.find_link(1, 0)), 0.0);
}

TEST(Step, LoneTransmitterIsHeard) {
  Network net = make_radio_network(path_graph(3));
  const Transmission tx[] = {{1, 42}};
  const NodeId listeners[] = {0, 2};
  SlotOutcome out = step(net, tx, listeners);
  ASSERT_EQ(out.receptions.size(), 2u);
  EXPECT_EQ(out.receptions.at(0).packet, 42u);
  EXPECT_EQ(out.receptions.at(2).sender, 1u);
  EXPECT_TRUE(out.collisions.empty());
}

TEST(Step, TwoRadioNeighborsCollide) {
  Network net = make_radio_network(path_graph(3));
  const Transmission tx[] = {{0, 1}, {2, 2}};
  const NodeId listeners[] = {1};
  SlotOutcome out = step(net, tx, listeners);
  EXPECT_TRUE(out.receptions.empty());
  EXPECT_EQ(out.collisions.size(), 2u);
}

TEST(Step, HopMatrixAlphaOneLetsEveryoneThrough) {
  Network net = make_hop_network(path_graph(4), 1);
  const Transmission tx[] = {{0, 1}, {3, 2}};
  const NodeId listeners[] = {1, 2};
  SlotOutcome out = step(net, tx, listeners);
  EXPECT_EQ(out.receptions.at(1).sender, 0u);
  EXPECT_EQ(out.receptions.at(2).sender, 3u);
}

TEST(Step, LowestSenderWinsWhenSeveralLinksQualify) {
  Network net = make_hop_network(path_graph(3), 1);
  const Transmission tx[] = {{2, 7}, {0, 5}};
  const NodeId listeners[] = {1};
  SlotOutcome out = step(net, tx, listeners);
  ASSERT_EQ(out.receptions.size(), 1u);
  EXPECT_EQ(out.receptions.at(1).sender, 0u);
  EXPECT_EQ(out.receptions.at(1).packet, 5u);
}

TEST(Step, ContractViolations) {
  Network net = make_radio_network(path_graph(3));
  const Transmission tx[] = {{1, 1}};
  const NodeId overlap[] = {1};
  EXPECT_THROW(step(net, tx, overlap), std::logic_error);
  const Transmission twice[] = {{1, 1}, {1, 2}};
  EXPECT_THROW(step(net, twice, {}), std::invalid_argument);
}

TEST(Step, RadioSemanticsBruteForceSmallGraphs) {
  RandomStream rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(5);
    std::vector<Link> links;
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = 0; v < n; ++v)
        if (u != v && rng.bernoulli(0.4)) links.push_back({u, v});
    Network net = make_radio_network(Graph(n, links));
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<bool> on(n);
      std::vector<Transmission> tx;
      std::vector<NodeId> listeners;
      for (NodeId v = 0; v < n; ++v) {
        on[v] = (mask >> v) & 1u;
        if (on[v]) tx.push_back({v, v});
        else listeners.push_back(v);
      }
      SlotOutcome out = step(net, tx, listeners);
      for (NodeId v = 0; v < n; ++v) {
        auto expected = oracle::radio_reception(net.graph(), on, v);
        auto it = out.receptions.find(v);
        ASSERT_EQ(expected.has_value(), it != out.receptions.end()) << "n=" << n << " mask=" << mask << " v=" << v;
        if (expected) {
        EXPECT_EQ(it->second.sender, *expected);
      }
      }
    }
  }
}

TEST(SinrMatrix, SenderEntryZeroAndSymmetricCase) {
  // Two senders equidistant from the receiver at the origin.
  std::vector<Point> pos{{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
  Graph g(3, {{0, 1}, {2, 1}});
  SinrParams p{1.0, 0.0, 1.0, 2.0};
  AffectanceMatrix m = sinr_matrix(g, pos, p);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 1.0);
}

TEST(SinrMatrix, InfeasibleLinkAndSharedPositionAreRejected) {
  Graph g(2, {{0, 1}});
  std::vector<Point> far{{0.0, 0.0}, {10.0, 0.0}};
  try {
    sinr_matrix(g, far, SinrParams{1.0, 1.0, 1.0, 2.0});
    FAIL() << "expected an infeasible-link error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
  }
  std::vector<Point> same{{0.5, 0.5}, {0.5, 0.5}};
  EXPECT_THROW(sinr_matrix(g, same, SinrParams{}), std::invalid_argument);
}

TEST(SinrMatrix, StepAgreesWithDirectInequality) {
  RandomStream rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(8);
    std::vector<Point> pos(n);
    for (auto& q : pos) q = {rng.uniform01(), rng.uniform01()};
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v) edges.emplace_back(u, v);
    Graph g = Graph::bidirected(n, edges);
    SinrParams p{1.0, 0.05, 0.5 + 1.5 * rng.uniform01(), 2.0 + rng.uniform01()};
    double longest = 0.0;
    for (const Link& l : g.links()) longest = std::max(longest, euclidean(pos[l.from], pos[l.to]));
    p.power = 2.0 * p.beta * p.noise * std::pow(longest, p.path_loss);
    Network net = make_sinr_network(g, pos, p);
    std::vector<bool> on(n);
    std::vector<Transmission> tx;
    std::vector<NodeId> listeners;
    for (NodeId v = 0; v < n; ++v) {
      on[v] = rng.bernoulli(0.35);
      if (on[v]) tx.push_back({v, v});
      else listeners.push_back(v);
    }
    SlotOutcome out = step(net, tx, listeners);
    for (NodeId v : listeners) {
      std::optional<NodeId> expected;
      for (const Transmission& t : tx)
        if (oracle::sinr_success(pos, on, t.sender, v, p)) {
          expected = t.sender;
          break;
        }
      auto it = out.receptions.find(v);
      ASSERT_EQ(expected.has_value(), it != out.receptions.end()) << "trial " << trial << " listener " << v;
      if (expected) {
        EXPECT_EQ(it->second.sender, *expected);
      }
    }
  }
}

TEST(HopMatrix, Entries) {
  Graph g = path_graph(5);
  HopDistances d(g);
  AffectanceMatrix alpha1 = hop_affectance_matrix(g, d, 1);
  const LinkId l01 = *g.find_link(0, 1);
  EXPECT_EQ(alpha1(1, l01), 1.0);  // the receiver itself
  EXPECT_EQ(alpha1(2, l01), 0.0);
  const LinkId l21 = *g.find_link(2, 1);
  EXPECT_EQ(alpha1(1, l21), 1.0);
  EXPECT_EQ(alpha1(3, l21), 0.0);
  AffectanceMatrix alpha4 = hop_affectance_matrix(g, d, 4);
  EXPECT_DOUBLE_EQ(alpha4(3, l01), 0.25);  // d(3,1) = 2
  EXPECT_DOUBLE_EQ(alpha4(2, l01), 1.0);   // d(2,1) = 1
  EXPECT_EQ(alpha4(0, l01), 0.0);          // sender
  EXPECT_DOUBLE_EQ(alpha4(4, l01), 1.0 / 9.0);  // d(4,1) = 3
  EXPECT_EQ(hop_affectance_matrix(g, d, 3)(4, l01), 0.0);
}
