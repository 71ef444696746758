#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mmb/labst.hpp"
#include "mmb/network.hpp"
#include "mmb/random.hpp"
#include "mmb/schedule.hpp"

namespace mmb {

/// A source node with its LABST and schedule parameters.
struct SourceSchedule {
  RankedTree labst;
  ScheduleParams params;

  NodeId node() const { return labst.root(); }
};

enum class QueueClass { kEmpty, kSmall, kBig };

inline std::string_view to_string(QueueClass c) {
  switch (c) {
    case QueueClass::kEmpty: return "empty";
    case QueueClass::kSmall: return "small";
    case QueueClass::kBig: return "big";
  }
  return "?";
}

/// empty: len < delta; small: delta <= len < n*delta; big: len >= n*delta.
inline QueueClass classify(std::uint64_t queue_len, Slot delta_len, std::size_t n) {
  if (delta_len < 1) throw std::invalid_argument("classify: delta must be >= 1");
  const auto delta = static_cast<std::uint64_t>(delta_len);
  if (queue_len < delta) return QueueClass::kEmpty;
  if (queue_len < n * delta) return QueueClass::kSmall;
  return QueueClass::kBig;
}

enum class InjectionPolicy { kUniform, kNext, kCurrent, kUniformExceptCurrent };

inline std::string_view to_string(InjectionPolicy p) {
  switch (p) {
    case InjectionPolicy::kUniform: return "uniform";
    case InjectionPolicy::kNext: return "next";
    case InjectionPolicy::kCurrent: return "current";
    case InjectionPolicy::kUniformExceptCurrent: return "unif_curr";
  }
  return "?";
}

inline InjectionPolicy parse_policy(std::string_view name) {
  for (auto p : {InjectionPolicy::kUniform, InjectionPolicy::kNext, InjectionPolicy::kCurrent,
                 InjectionPolicy::kUniformExceptCurrent})
    if (to_string(p) == name) return p;
  throw std::invalid_argument("unknown injection policy '" + std::string(name) + "'");
}

enum class RateKind { kOne, kInvSqrtOnePlusDelta, kInvOnePlusDelta };

inline std::string_view to_string(RateKind r) {
  switch (r) {
    case RateKind::kOne: return "1";
    case RateKind::kInvSqrtOnePlusDelta: return "1/sqrt(1+delta)";
    case RateKind::kInvOnePlusDelta: return "1/(1+delta)";
  }
  return "?";
}

inline RateKind parse_rate(std::string_view name) {
  if (name == "1" || name == "one") return RateKind::kOne;
  if (name == "1/sqrt(1+delta)" || name == "inv_sqrt") return RateKind::kInvSqrtOnePlusDelta;
  if (name == "1/(1+delta)" || name == "inv") return RateKind::kInvOnePlusDelta;
  throw std::invalid_argument("unknown injection rate '" + std::string(name) + "'");
}

inline double injection_rate(RateKind kind, Slot delta_pipe) {
  switch (kind) {
    case RateKind::kOne: return 1.0;
    case RateKind::kInvSqrtOnePlusDelta: return 1.0 / std::sqrt(1.0 + static_cast<double>(delta_pipe));
    case RateKind::kInvOnePlusDelta: return 1.0 / (1.0 + static_cast<double>(delta_pipe));
  }
  return 0.0;
}

/// Per-slot Bernoulli arrivals at `rate`, targeted by `policy`.
struct InjectionPlan {
  double rate = 1.0;
  InjectionPolicy policy = InjectionPolicy::kUniform;
};

/// Draws this slot's injection, if any. `sources` must be ascending and
/// contain `current_holder`. With a single source, unif_curr targets it.
inline std::optional<NodeId> inject(const InjectionPlan& plan, NodeId current_holder, std::span<const NodeId> sources,
                                    RandomStream& rng) {
  if (!(plan.rate >= 0.0 && plan.rate <= 1.0)) throw std::invalid_argument("injection rate must lie in [0, 1]");
  if (sources.empty()) throw std::invalid_argument("no sources to inject into");
  if (!rng.bernoulli(plan.rate)) return std::nullopt;
  switch (plan.policy) {
    case InjectionPolicy::kUniform:
      return sources[rng.uniform_index(sources.size())];
    case InjectionPolicy::kNext: {
      auto it = std::upper_bound(sources.begin(), sources.end(), current_holder);
      return it == sources.end() ? sources.front() : *it;
    }
    case InjectionPolicy::kCurrent:
      return current_holder;
    case InjectionPolicy::kUniformExceptCurrent: {
      if (sources.size() == 1) return sources.front();
      std::size_t i = rng.uniform_index(sources.size() - 1);
      const auto holder_pos = static_cast<std::size_t>(
          std::lower_bound(sources.begin(), sources.end(), current_holder) - sources.begin());
      if (i >= holder_pos) ++i;
      return sources[i];
    }
  }
  return std::nullopt;
}

/// Move-big-to-front list of sources with the circulating token.
class MbtfList {
 public:
  explicit MbtfList(std::vector<NodeId> order) : order_(std::move(order)) {
    if (order_.empty()) throw std::invalid_argument("MBTF list needs at least one source");
    holder_ = order_.front();
  }

  const std::vector<NodeId>& order() const { return order_; }
  NodeId holder() const { return holder_; }
  Slot ttl() const { return ttl_; }

  void move_to_front(NodeId s) {
    auto it = std::find(order_.begin(), order_.end(), s);
    if (it == order_.end()) throw std::invalid_argument("source " + std::to_string(s) + " is not in the list");
    std::rotate(order_.begin(), it, it + 1);
  }

  /// Hands the token to the successor of the holder with a fresh time-to-live.
  void pass_token(Slot ttl) {
    auto it = std::find(order_.begin(), order_.end(), holder_);
    ++it;
    holder_ = it == order_.end() ? order_.front() : *it;
    ttl_ = ttl;
  }

  /// One slot of transit; returns true once the counter has reached zero.
  bool tick() {
    if (ttl_ > 0) --ttl_;
    return ttl_ == 0;
  }

 private:
  std::vector<NodeId> order_;
  NodeId holder_ = 0;
  Slot ttl_ = 0;
};

enum class EventKind { kSilentRound, kDiscovery, kListAdopted, kBudgetViolation, kQueueBoundViolation };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kSilentRound: return "silent_round";
    case EventKind::kDiscovery: return "discovery";
    case EventKind::kListAdopted: return "list_adopted";
    case EventKind::kBudgetViolation: return "budget_violation";
    case EventKind::kQueueBoundViolation: return "queue_bound_violation";
  }
  return "?";
}

struct SimEvent {
  Slot slot = 0;
  EventKind kind = EventKind::kSilentRound;
  NodeId source = 0;
};

/// Slot-by-slot record of one MMB run. Series entries describe the state at
/// the end of each slot; preloaded packets count as injected before slot 0.
struct SimTrace {
  std::size_t node_count = 0;
  Slot delta_len = 0;   // max over sources
  Slot delta_pipe = 0;  // max over sources
  double injection_rate = 0.0;
  std::uint64_t initial_packets = 0;
  std::vector<std::uint64_t> queue_total;
  std::vector<std::uint64_t> injected;
  std::vector<std::uint64_t> delivered;
  std::vector<SimEvent> events;
  std::size_t silent_rounds = 0;
  std::size_t discoveries = 0;
  std::size_t budget_violations = 0;
  std::size_t queue_bound_violations = 0;
  std::size_t fast_link_failures = 0;
  std::size_t in_flight_at_end = 0;
  std::uint64_t max_queue = 0;

  Slot horizon() const { return static_cast<Slot>(queue_total.size()); }

  /// Upper bound on queued packets after `elapsed` slots: t d/(1+d) + 2 D n^2.
  double queue_bound(Slot elapsed) const {
    const double d = static_cast<double>(delta_pipe);
    const double n = static_cast<double>(node_count);
    return static_cast<double>(elapsed) * d / (1.0 + d) + 2.0 * static_cast<double>(delta_len) * n * n;
  }
};

/// d_ALG(t) / d_OPT(t) with d_OPT(t) = injected(t); 1 before any injection.
inline double competitive_throughput(const SimTrace& trace, Slot t) {
  if (t < 0 || t >= trace.horizon()) throw std::out_of_range("slot " + std::to_string(t) + " is outside the trace");
  const auto i = static_cast<std::size_t>(t);
  if (trace.injected[i] == 0) return 1.0;
  return static_cast<double>(trace.delivered[i]) / static_cast<double>(trace.injected[i]);
}

struct MmbOptions {
  /// Packets preloaded before slot 0; defaults to 2 * delta * pipe.
  std::optional<std::uint64_t> initial_packets;
  /// Source receiving the preload; defaults to the lowest source id.
  std::optional<NodeId> preload_source;
};

namespace detail {

class MmbRun {
 public:
  MmbRun(const Network& net, std::span<const SourceSchedule> sources, const InjectionPlan& plan, std::uint64_t seed)
      : net_(net), sources_(sources), plan_(plan), channel_(net), list_(sorted_ids(sources)),
        injection_rng_(derive_stream(seed, "injection")), contention_rng_(derive_stream(seed, "contention")) {
    ids_ = list_.order();
    index_of_.assign(net.node_count(), kNone);
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      const NodeId s = sources_[i].node();
      if (s >= net.node_count()) throw std::invalid_argument("source " + std::to_string(s) + " is not a node");
      if (index_of_[s] != kNone) throw std::invalid_argument("source " + std::to_string(s) + " listed twice");
      if (sources_[i].labst.tree().node_count() != net.node_count())
        throw std::invalid_argument("LABST of source " + std::to_string(s) + " does not span the network");
      if (sources_[i].params.delta_len < 1 || sources_[i].params.delta_pipe < 1)
        throw std::invalid_argument("schedule budgets of source " + std::to_string(s) + " must be >= 1");
      index_of_[s] = i;
      delta_ = std::max(delta_, sources_[i].params.delta_len);
      pipe_ = std::max(pipe_, sources_[i].params.delta_pipe);
    }
    queues_.resize(net.node_count());
  }

  SimTrace run(Slot total_slots, const MmbOptions& options) {
    if (total_slots < 0) throw std::invalid_argument("total_slots must be non-negative");
    trace_.node_count = net_.node_count();
    trace_.delta_len = delta_;
    trace_.delta_pipe = pipe_;
    trace_.injection_rate = plan_.rate;
    trace_.initial_packets = options.initial_packets.value_or(2 * static_cast<std::uint64_t>(delta_) * pipe_);
    const NodeId preload_at = options.preload_source.value_or(ids_.front());
    if (preload_at >= index_of_.size() || index_of_[preload_at] == kNone)
      throw std::invalid_argument("preload target " + std::to_string(preload_at) + " is not a source");
    auto& first = queues_[preload_at];
    for (std::uint64_t i = 0; i < trace_.initial_packets; ++i) first.push_back(next_packet_++);
    queued_ = trace_.initial_packets;
    injected_ = trace_.initial_packets;
    trace_.queue_total.reserve(static_cast<std::size_t>(total_slots));
    trace_.injected.reserve(static_cast<std::size_t>(total_slots));
    trace_.delivered.reserve(static_cast<std::size_t>(total_slots));

    for (Slot t = 0; t < total_slots; ++t) {
      token_step(t);
      if (auto target = inject(plan_, list_.holder(), ids_, injection_rng_)) {
        queues_[*target].push_back(next_packet_++);
        ++queued_;
        ++injected_;
      }
      SlotReport report = channel_.advance(t, contention_rng_);
      trace_.fast_link_failures += report.fast_link_failures;
      for (const CompletedBroadcast& done : report.completed) on_delivered(done);

      trace_.queue_total.push_back(queued_);
      trace_.injected.push_back(injected_);
      trace_.delivered.push_back(delivered_);
      trace_.max_queue = std::max(trace_.max_queue, queued_);
      if (static_cast<double>(queued_) >= trace_.queue_bound(t + 1)) {
        if (trace_.queue_bound_violations == 0) trace_.events.push_back({t, EventKind::kQueueBoundViolation, list_.holder()});
        ++trace_.queue_bound_violations;
      }
    }
    trace_.in_flight_at_end = channel_.in_flight();
    return std::move(trace_);
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  enum class Phase { kTransit, kSending };

  static std::vector<NodeId> sorted_ids(std::span<const SourceSchedule> sources) {
    std::vector<NodeId> ids;
    for (const auto& s : sources) ids.push_back(s.node());
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  QueueClass holder_class() const { return classify(queues_[list_.holder()].size(), delta_, net_.node_count()); }

  void token_step(Slot t) {
    if (phase_ == Phase::kTransit) {
      if (!list_.tick()) return;
      act(t);
      return;
    }
    if (t < next_launch_) return;
    const bool more = big_batch_ ? (launched_ < delta_ || holder_class() == QueueClass::kBig)
                                 : launched_ < delta_;
    if (more) {
      launch(t);
    } else {
      phase_ = Phase::kTransit;
      list_.pass_token(delta_);
    }
  }

  void act(Slot t) {
    const NodeId s = list_.holder();
    switch (holder_class()) {
      case QueueClass::kEmpty:
        trace_.events.push_back({t, EventKind::kSilentRound, s});
        ++trace_.silent_rounds;
        list_.pass_token(delta_);
        return;
      case QueueClass::kSmall:
        big_batch_ = false;
        break;
      case QueueClass::kBig:
        big_batch_ = true;
        list_.move_to_front(s);
        trace_.events.push_back({t, EventKind::kDiscovery, s});
        ++trace_.discoveries;
        break;
    }
    phase_ = Phase::kSending;
    launched_ = 0;
    launch(t);
    if (big_batch_) list_update_packet_ = last_launched_;
  }

  void launch(Slot t) {
    const NodeId s = list_.holder();
    auto& queue = queues_[s];
    const PacketId packet = queue.front();
    queue.pop_front();
    --queued_;
    const SourceSchedule& src = sources_[index_of_[s]];
    channel_.launch(packet, src.labst, src.params, t);
    ++launched_;
    last_launched_ = packet;
    next_launch_ = t + pipe_;
  }

  void on_delivered(const CompletedBroadcast& done) {
    ++delivered_;
    const SourceSchedule& src = sources_[index_of_[done.source]];
    if (done.completion_slot - done.launch_slot + 1 > src.params.delta_len) {
      trace_.events.push_back({done.completion_slot, EventKind::kBudgetViolation, done.source});
      ++trace_.budget_violations;
    }
    if (list_update_packet_ && *list_update_packet_ == done.packet) {
      trace_.events.push_back({done.completion_slot, EventKind::kListAdopted, done.source});
      list_update_packet_.reset();
    }
  }

  const Network& net_;
  std::span<const SourceSchedule> sources_;
  InjectionPlan plan_;
  Disseminator channel_;
  MbtfList list_;
  RandomStream injection_rng_;
  RandomStream contention_rng_;
  std::vector<NodeId> ids_;
  std::vector<std::size_t> index_of_;
  std::vector<std::deque<PacketId>> queues_;
  Slot delta_ = 1;
  Slot pipe_ = 1;

  Phase phase_ = Phase::kTransit;
  bool big_batch_ = false;
  Slot launched_ = 0;
  Slot next_launch_ = 0;
  PacketId last_launched_ = 0;
  std::optional<PacketId> list_update_packet_;
  PacketId next_packet_ = 0;
  std::uint64_t queued_ = 0;
  std::uint64_t injected_ = 0;
  std::uint64_t delivered_ = 0;
  SimTrace trace_;
};

}  // namespace detail

/// Dynamic multiple-message broadcast over precomputed per-source schedules.
///
/// The token starts at the lowest source id with an expired time-to-live and
/// that source preloaded. When a holder's counter reaches zero it classifies
/// its queue (before that slot's injection): empty passes the token (silent
/// round), small sends delta packets, big moves itself to the list front
/// (discovery) and sends while big with a floor of delta packets. Packets are
/// launched pipe slots apart; pipe slots after the last launch the token passes
/// with a time-to-live of delta slots.
inline SimTrace run_mmb(const Network& net, std::span<const SourceSchedule> sources, const InjectionPlan& plan,
                        Slot total_slots, std::uint64_t seed, const MmbOptions& options = {}) {
  if (sources.empty()) throw std::invalid_argument("run_mmb needs at least one source");
  detail::MmbRun run(net, sources, plan, seed);
  return run.run(total_slots, options);
}

}  // namespace mmb
