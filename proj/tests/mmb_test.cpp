#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mmb/mmb.hpp"
#include "oracles.hpp"

using namespace mmb;

namespace {

std::vector<SourceSchedule> schedules(const Network& net, const std::vector<NodeId>& ids) {
  std::vector<SourceSchedule> out;
  for (NodeId s : ids) {
    auto sel = select_tmin(net, s, TminMode::kSingleBfs);
    RankedTree rt = build_labst(net, sel.tree);
    ScheduleParams p = make_schedule_params(net, rt, sel.characteristics);
    out.push_back({std::move(rt), p});
  }
  return out;
}

Network overlap16() { return make_hop_network(generate(TopologyKind::kOverlapTrees, 16, 2), 2); }

}  // namespace

TEST(Classify, Thresholds) {
  EXPECT_EQ(classify(5, 10, 4), QueueClass::kEmpty);
  EXPECT_EQ(classify(10, 10, 4), QueueClass::kSmall);
  EXPECT_EQ(classify(39, 10, 4), QueueClass::kSmall);
  EXPECT_EQ(classify(40, 10, 4), QueueClass::kBig);
  EXPECT_THROW(classify(1, 0, 4), std::invalid_argument);
}

TEST(Inject, RateOneAlwaysInjects) {
  RandomStream rng(1);
  const NodeId sources[] = {2, 5, 9};
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(inject({1.0, InjectionPolicy::kUniform}, 5, sources, rng).has_value());
}

TEST(Inject, PolicyTargets) {
  RandomStream rng(2);
  const NodeId sources[] = {2, 5, 9};
  EXPECT_EQ(inject({1.0, InjectionPolicy::kCurrent}, 5, sources, rng), NodeId{5});
  EXPECT_EQ(inject({1.0, InjectionPolicy::kNext}, 5, sources, rng), NodeId{9});
  EXPECT_EQ(inject({1.0, InjectionPolicy::kNext}, 9, sources, rng), NodeId{2});
  std::set<NodeId> seen;
  for (int i = 0; i < 500; ++i) {
    auto t = inject({1.0, InjectionPolicy::kUniformExceptCurrent}, 5, sources, rng);
    ASSERT_TRUE(t.has_value());
    EXPECT_NE(*t, 5u);
    seen.insert(*t);
  }
  EXPECT_EQ(seen, (std::set<NodeId>{2, 9}));
  const NodeId single[] = {4};
  EXPECT_EQ(inject({1.0, InjectionPolicy::kUniformExceptCurrent}, 4, single, rng), NodeId{4});
}

TEST(Inject, FrequencyWithinThreeSigma) {
  RandomStream rng(3);
  const NodeId sources[] = {0, 1};
  const double rate = injection_rate(RateKind::kInvOnePlusDelta, 134);
  const int slots = 100000;
  int hits = 0;
  for (int i = 0; i < slots; ++i) hits += inject({rate, InjectionPolicy::kUniform}, 0, sources, rng).has_value();
  const double sigma = std::sqrt(slots * rate * (1 - rate));
  EXPECT_LE(std::abs(hits - slots * rate), 3 * sigma);
}

TEST(Inject, RatesAndNames) {
  EXPECT_EQ(injection_rate(RateKind::kOne, 99), 1.0);
  EXPECT_DOUBLE_EQ(injection_rate(RateKind::kInvSqrtOnePlusDelta, 3), 0.5);
  EXPECT_DOUBLE_EQ(injection_rate(RateKind::kInvOnePlusDelta, 3), 0.25);
  for (auto r : {RateKind::kOne, RateKind::kInvSqrtOnePlusDelta, RateKind::kInvOnePlusDelta})
    EXPECT_EQ(parse_rate(to_string(r)), r);
  for (auto p : {InjectionPolicy::kUniform, InjectionPolicy::kNext, InjectionPolicy::kCurrent,
                 InjectionPolicy::kUniformExceptCurrent})
    EXPECT_EQ(parse_policy(to_string(p)), p);
  EXPECT_THROW(parse_rate("2"), std::invalid_argument);
  EXPECT_THROW(parse_policy("random"), std::invalid_argument);
}

TEST(MbtfListTest, MoveToFrontAndTokenPassing) {
  MbtfList list({1, 4, 7});
  EXPECT_EQ(list.holder(), 1u);
  list.pass_token(3);
  EXPECT_EQ(list.holder(), 4u);
  EXPECT_FALSE(list.tick());
  EXPECT_FALSE(list.tick());
  EXPECT_TRUE(list.tick());
  EXPECT_EQ(list.ttl(), 0);
  list.move_to_front(7);
  EXPECT_EQ(list.order(), (std::vector<NodeId>{7, 1, 4}));
  list.pass_token(1);
  EXPECT_EQ(list.holder(), 7u);
  list.pass_token(1);
  EXPECT_EQ(list.holder(), 1u);
  EXPECT_THROW(list.move_to_front(3), std::invalid_argument);
  EXPECT_THROW(MbtfList({}), std::invalid_argument);
}

TEST(RunMmb, VacuousRunCyclesSilently) {
  Network net = overlap16();
  auto src = schedules(net, {1, 6, 11});
  MmbOptions opt;
  opt.initial_packets = 0;
  SimTrace trace = run_mmb(net, src, {0.0, InjectionPolicy::kUniform}, 5000, 1, opt);
  for (Slot t = 0; t < trace.horizon(); ++t) {
    EXPECT_EQ(trace.queue_total[static_cast<std::size_t>(t)], 0u);
    EXPECT_EQ(trace.delivered[static_cast<std::size_t>(t)], 0u);
    EXPECT_EQ(competitive_throughput(trace, t), 1.0);
  }
  EXPECT_EQ(trace.discoveries, 0u);
  // Silent rounds at slots 0, D, 2D, ...
  ASSERT_GE(trace.silent_rounds, 2u);
  EXPECT_EQ(trace.events[0].slot, 0);
  EXPECT_EQ(trace.events[1].slot, trace.delta_len);
  EXPECT_EQ(trace.events[1].source, 6u);
}

TEST(RunMmb, PreloadedSourceIsDiscoveredAndListIsAdopted) {
  Network net = overlap16();
  auto src = schedules(net, {3, 8, 12});
  SimTrace trace = run_mmb(net, src, {0.0, InjectionPolicy::kUniform}, 20000, 4);
  EXPECT_EQ(trace.initial_packets, 2u * static_cast<std::uint64_t>(trace.delta_len * trace.delta_pipe));
  ASSERT_GE(trace.events.size(), 1u);
  EXPECT_EQ(trace.events[0].kind, EventKind::kDiscovery);
  EXPECT_EQ(trace.events[0].slot, 0);
  EXPECT_EQ(trace.events[0].source, 3u);
  bool adopted = false;
  for (const auto& e : trace.events) adopted |= e.kind == EventKind::kListAdopted;
  EXPECT_TRUE(adopted);
}

TEST(RunMmb, PreloadElsewhereIsDiscoveredWithinOneCycle) {
  Network net = overlap16();
  auto src = schedules(net, {3, 8, 12});
  MmbOptions opt;
  opt.preload_source = 12;
  SimTrace trace = run_mmb(net, src, {0.0, InjectionPolicy::kUniform}, 20000, 5, opt);
  ASSERT_EQ(trace.events.size() >= 3, true);
  EXPECT_EQ(trace.events[0].kind, EventKind::kSilentRound);
  EXPECT_EQ(trace.events[1].kind, EventKind::kSilentRound);
  EXPECT_EQ(trace.events[2].kind, EventKind::kDiscovery);
  EXPECT_EQ(trace.events[2].source, 12u);
  EXPECT_LE(trace.events[2].slot, static_cast<Slot>(src.size()) * trace.delta_len);
  opt.preload_source = 4;
  EXPECT_THROW(run_mmb(net, src, {0.0, InjectionPolicy::kUniform}, 10, 5, opt), std::invalid_argument);
}

TEST(RunMmb, SmallHolderSendsExactlyDeltaPackets) {
  Network net = overlap16();
  auto src = schedules(net, {3, 8});
  std::uint64_t delta = 0, pipe = 0;
  for (const auto& s : src) {
    delta = std::max<std::uint64_t>(delta, static_cast<std::uint64_t>(s.params.delta_len));
    pipe = std::max<std::uint64_t>(pipe, static_cast<std::uint64_t>(s.params.delta_pipe));
  }
  MmbOptions opt;
  opt.initial_packets = delta + 5;
  const Slot horizon = static_cast<Slot>(delta * pipe + 10 * delta);
  SimTrace trace = run_mmb(net, src, {0.0, InjectionPolicy::kUniform}, horizon, 6, opt);
  EXPECT_EQ(trace.queue_total.back(), 5u);
  EXPECT_EQ(trace.discoveries, 0u);
  EXPECT_EQ(trace.delivered.back() + trace.in_flight_at_end, delta);
  // Last launch at (D-1) d; the token leaves d slots later, then waits D.
  bool next_silent = false;
  for (const auto& e : trace.events)
    if (e.kind == EventKind::kSilentRound && e.source == 8) {
      EXPECT_EQ(e.slot, static_cast<Slot>((delta - 1) * pipe + pipe + delta));
      next_silent = true;
      break;
    }
  EXPECT_TRUE(next_silent);
}

TEST(RunMmb, QueueBoundAndAccountingHold) {
  Network net = overlap16();
  auto src = schedules(net, {0, 5, 9, 14});
  for (auto policy : {InjectionPolicy::kUniform, InjectionPolicy::kUniformExceptCurrent}) {
    SimTrace trace = run_mmb(net, src, {1.0, policy}, 100000, 7);
    EXPECT_EQ(trace.queue_bound_violations, 0u);
    for (std::size_t i = 0; i < trace.queue_total.size(); ++i) {
      EXPECT_LE(trace.delivered[i], trace.injected[i]);
      EXPECT_LE(trace.queue_total[i] + trace.delivered[i], trace.injected[i]);
      ASSERT_LT(static_cast<double>(trace.queue_total[i]), trace.queue_bound(static_cast<Slot>(i) + 1));
    }
  }
}

TEST(RunMmb, DeterministicInSeed) {
  Network net = overlap16();
  auto src = schedules(net, {2, 7});
  SimTrace a = run_mmb(net, src, {0.3, InjectionPolicy::kUniform}, 20000, 9);
  SimTrace b = run_mmb(net, src, {0.3, InjectionPolicy::kUniform}, 20000, 9);
  EXPECT_EQ(a.queue_total, b.queue_total);
  EXPECT_EQ(a.delivered, b.delivered);
  EXPECT_EQ(a.events.size(), b.events.size());
}

TEST(RunMmb, StartupErrors) {
  Network net = overlap16();
  auto src = schedules(net, {2, 2});
  EXPECT_THROW(run_mmb(net, src, {0.3, InjectionPolicy::kUniform}, 10, 1), std::invalid_argument);
  auto ok = schedules(net, {2});
  ok[0].params.delta_len = 0;
  EXPECT_THROW(run_mmb(net, ok, {0.3, InjectionPolicy::kUniform}, 10, 1), std::invalid_argument);
  EXPECT_THROW(run_mmb(net, {}, {0.3, InjectionPolicy::kUniform}, 10, 1), std::invalid_argument);
}

TEST(CompetitiveThroughput, Conventions) {
  SimTrace t;
  t.queue_total = {0, 1, 1};
  t.injected = {0, 2, 2};
  t.delivered = {0, 1, 2};
  EXPECT_EQ(competitive_throughput(t, 0), 1.0);
  EXPECT_EQ(competitive_throughput(t, 1), 0.5);
  EXPECT_EQ(competitive_throughput(t, 2), 1.0);
  EXPECT_THROW(competitive_throughput(t, 3), std::out_of_range);
}
