#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "mmb/labst.hpp"
#include "mmb/metrics.hpp"
#include "mmb/network.hpp"
#include "mmb/random.hpp"

namespace mmb {

using Slot = std::int64_t;

/// Slot-reservation and pipelining parameters of one source's LABST.
struct ScheduleParams {
  int h = 3;                  // max{3, alpha}
  int max_rank = 1;           // R
  double k = 0.0;             // max average tree-layer affectance
  double m = 0.0;             // max path affectance
  Slot delta_len = 0;         // broadcast length budget
  Slot delta_pipe = 1;        // separation between pipelined packets
  double slow_prob = 1.0;     // per-reserved-slot transmit probability of slow nodes
};

/// delta_len = D + 2hR^2 + ceil(32 h R K ln n); delta_pipe = max(1, ceil(16 h K ln n));
/// slow_prob = min(1, 1/(4K)).
inline ScheduleParams make_schedule_params(const Network& net, const RankedTree& ranked,
                                           const TreeCharacteristics& c) {
  ScheduleParams p;
  p.h = std::max(3, net.degradation_distance());
  p.max_rank = ranked.max_rank();
  p.k = c.max_avg_layer_affectance;
  p.m = c.max_path_affectance;
  const double ln_n = std::log(static_cast<double>(net.node_count()));
  const Slot h = p.h;
  const Slot r = p.max_rank;
  p.delta_len = ranked.tree().depth() + 2 * h * r * r + static_cast<Slot>(std::ceil(32.0 * h * r * p.k * ln_n));
  p.delta_pipe = std::max<Slot>(1, static_cast<Slot>(std::ceil(16.0 * h * p.k * ln_n)));
  p.slow_prob = p.k < 0.25 ? 1.0 : 1.0 / (4.0 * p.k);
  return p;
}

/// Fast nodes own slots t = d + 2h(R - r) (mod 2hR); slow nodes own t = d + h (mod 2h).
inline bool reserved_fast(int layer, int rank, Slot t, const ScheduleParams& p) {
  const Slot period = 2 * static_cast<Slot>(p.h) * p.max_rank;
  const Slot offset = layer + 2 * static_cast<Slot>(p.h) * (p.max_rank - rank);
  return t % period == offset % period;
}

inline bool reserved_slow(int layer, Slot t, const ScheduleParams& p) {
  const Slot period = 2 * static_cast<Slot>(p.h);
  return t % period == (layer + p.h) % period;
}

inline bool reserved(NodeId v, Slot t, const ScheduleParams& p, const RankedTree& ranked) {
  const int layer = ranked.tree().layer(v);
  return ranked.is_fast(v) ? reserved_fast(layer, ranked.rank(v), t, p) : reserved_slow(layer, t, p);
}

struct CompletedBroadcast {
  PacketId packet = 0;
  NodeId source = 0;
  Slot launch_slot = 0;
  Slot completion_slot = 0;            // slot of the last first-reception
  std::vector<Slot> received_at;       // per node
};

struct SlotReport {
  std::size_t transmissions = 0;
  std::size_t accepted = 0;            // first receptions over tree links
  std::size_t ignored = 0;             // duplicates and non-tree receptions
  std::size_t collisions = 0;
  std::size_t fast_link_failures = 0;  // fast transmissions that missed a child
  std::vector<CompletedBroadcast> completed;
};

/// Moves packets down their sources' LABSTs, sharing one channel.
///
/// Each node keeps a FIFO of packets it still has to forward and transmits at
/// most one per slot: the oldest packet whose schedule reserves the slot. A
/// fast node sends a packet once in its fast slot; children it missed are then
/// served by contention in slow slots, as slow nodes are, with probability
/// slow_prob per reserved slot until every child holds the packet. Receptions
/// from anyone but the tree parent are ignored.
///
/// Packets sharing a tree and a fast/slow turn share a reservation, so each
/// node's FIFO is kept as a few such buckets; a slot costs O(buckets) per node
/// however long the backlog grows.
///
/// The referenced trees and parameters must outlive the disseminator.
class Disseminator {
 public:
  explicit Disseminator(const Network& net)
      : net_(&net), buckets_(net.node_count()), role_(net.node_count()) {}

  void set_trace(std::ostream* trace) { trace_ = trace; }

  void launch(PacketId packet, const RankedTree& ranked, const ScheduleParams& params, Slot slot) {
    Flight f;
    f.ranked = &ranked;
    f.params = &params;
    f.launch_slot = slot;
    f.received_at.assign(net_->node_count(), -1);
    f.fast_done.assign(net_->node_count(), 0);
    const NodeId root = ranked.root();
    f.received_at[root] = slot;
    f.holders = 1;
    if (f.holders == net_->node_count()) {
      finished_.push_back({packet, root, slot, slot, f.received_at});
      return;
    }
    flights_.emplace(packet, std::move(f));
    if (!ranked.tree().is_leaf(root)) enqueue(root, packet, ranked, params, ranked.is_fast(root), next_seq_++, slot);
  }

  std::size_t in_flight() const { return flights_.size(); }

  /// First-reception slots (-1 when not yet received) of an in-flight packet.
  std::optional<std::vector<Slot>> progress(PacketId packet) const {
    auto it = flights_.find(packet);
    if (it == flights_.end()) return std::nullopt;
    return it->second.received_at;
  }

  SlotReport advance(Slot slot, RandomStream& rng) {
    SlotReport report;
    report.completed = std::move(finished_);
    finished_.clear();
    const std::size_t n = net_->node_count();

    transmissions_.clear();
    chosen_.clear();
    for (NodeId v = 0; v < n; ++v) {
      role_[v] = kListen;
      const Bucket* best = nullptr;
      std::size_t best_index = 0;
      for (std::size_t b = 0; b < buckets_[v].size(); ++b) {
        const Bucket& bucket = buckets_[v][b];
        const auto& [seq, item] = *bucket.items.begin();
        if (item.eligible_from > slot) continue;
        if (best && best->items.begin()->first < seq) continue;
        const int layer = bucket.ranked->tree().layer(v);
        const bool open = bucket.fast ? reserved_fast(layer, bucket.ranked->rank(v), slot, *bucket.params)
                                      : reserved_slow(layer, slot, *bucket.params);
        if (!open) continue;
        best = &bucket;
        best_index = b;
      }
      if (!best) continue;
      if (!best->fast && !rng.bernoulli(best->params->slow_prob)) continue;
      role_[v] = best->fast ? kFastSend : kSlowSend;
      transmissions_.push_back({v, best->items.begin()->second.packet});
      chosen_.push_back(best_index);
    }
    if (transmissions_.empty()) return report;

    listeners_.clear();
    for (NodeId v = 0; v < n; ++v)
      if (role_[v] == kListen) listeners_.push_back(v);
    const SlotOutcome outcome = step(*net_, transmissions_, listeners_);
    report.transmissions = transmissions_.size();
    report.collisions = outcome.collisions.size();

    for (const auto& [v, rx] : outcome.receptions) {
      auto it = flights_.find(rx.packet);
      if (it == flights_.end() || it->second.received_at[v] >= 0 || it->second.ranked->tree().parent(v) != rx.sender) {
        ++report.ignored;
        continue;
      }
      Flight& f = it->second;
      f.received_at[v] = slot;
      ++f.holders;
      ++report.accepted;
      if (!f.ranked->tree().is_leaf(v))
        enqueue(v, rx.packet, *f.ranked, *f.params, f.ranked->is_fast(v), next_seq_++, slot + 1);
    }

    for (std::size_t i = 0; i < transmissions_.size(); ++i) {
      const Transmission& t = transmissions_[i];
      Flight& f = flights_.at(t.packet);
      bool all_children = true;
      for (NodeId c : f.ranked->tree().children(t.sender))
        if (f.received_at[c] < 0) all_children = false;
      auto& node_buckets = buckets_[t.sender];
      Bucket& bucket = node_buckets[chosen_[i]];
      const auto head = bucket.items.begin();
      const std::uint64_t seq = head->first;
      const Pending item = head->second;
      bucket.items.erase(head);
      const bool emptied = bucket.items.empty();
      if (emptied) node_buckets.erase(node_buckets.begin() + static_cast<std::ptrdiff_t>(chosen_[i]));
      if (role_[t.sender] == kFastSend) {
        f.fast_done[t.sender] = 1;
        if (!all_children) {
          ++report.fast_link_failures;
          enqueue(t.sender, item.packet, *f.ranked, *f.params, false, seq, item.eligible_from);
        }
      } else if (!all_children) {
        enqueue(t.sender, item.packet, *f.ranked, *f.params, false, seq, item.eligible_from);
      }
    }

    for (const auto& [v, rx] : outcome.receptions) {
      auto it = flights_.find(rx.packet);
      if (it == flights_.end() || it->second.holders != n) continue;
      Flight& f = it->second;
      report.completed.push_back({rx.packet, f.ranked->root(), f.launch_slot, slot, std::move(f.received_at)});
      flights_.erase(it);
    }

    if (trace_) write_trace_row(slot, outcome);
    return report;
  }

 private:
  enum Role : unsigned char { kListen, kFastSend, kSlowSend };

  struct Flight {
    const RankedTree* ranked = nullptr;
    const ScheduleParams* params = nullptr;
    Slot launch_slot = 0;
    std::vector<Slot> received_at;
    std::vector<unsigned char> fast_done;
    std::size_t holders = 0;
  };

  struct Pending {
    PacketId packet = 0;
    Slot eligible_from = 0;
  };

  // Packets of one tree in one turn kind, keyed by FIFO arrival number.
  // eligible_from never decreases with arrival, so the head is the first to
  // become eligible.
  struct Bucket {
    const RankedTree* ranked = nullptr;
    const ScheduleParams* params = nullptr;
    bool fast = false;
    std::map<std::uint64_t, Pending> items;
  };

  void enqueue(NodeId v, PacketId packet, const RankedTree& ranked, const ScheduleParams& params, bool fast,
               std::uint64_t seq, Slot eligible_from) {
    auto& node_buckets = buckets_[v];
    auto it = std::find_if(node_buckets.begin(), node_buckets.end(),
                           [&](const Bucket& b) { return b.ranked == &ranked && b.fast == fast; });
    if (it == node_buckets.end()) it = node_buckets.insert(node_buckets.end(), Bucket{&ranked, &params, fast, {}});
    it->items.emplace(seq, Pending{packet, eligible_from});
  }

  void write_trace_row(Slot slot, const SlotOutcome& outcome) {
    *trace_ << slot << ',';
    for (std::size_t i = 0; i < transmissions_.size(); ++i)
      *trace_ << (i ? " " : "") << transmissions_[i].sender << ':' << transmissions_[i].packet;
    *trace_ << ',';
    bool first = true;
    for (const auto& [v, rx] : outcome.receptions) {
      *trace_ << (first ? "" : " ") << rx.sender << '>' << v;
      first = false;
    }
    *trace_ << '\n';
  }

  const Network* net_;
  std::unordered_map<PacketId, Flight> flights_;
  std::vector<std::vector<Bucket>> buckets_;
  std::vector<Role> role_;
  std::vector<Transmission> transmissions_;
  std::vector<std::size_t> chosen_;
  std::vector<NodeId> listeners_;
  std::vector<CompletedBroadcast> finished_;
  std::uint64_t next_seq_ = 0;
  std::ostream* trace_ = nullptr;
};

struct BroadcastResult {
  std::vector<std::optional<Slot>> delivery_slot;  // first reception per node; root at 0
  std::optional<Slot> length;                      // slots until every node holds the packet
  bool budget_exhausted = false;
  std::size_t fast_link_failures = 0;
  std::size_t transmissions = 0;
};

/// One packet from the root of `ranked`, starting at slot 0 and simulated for
/// at most `slot_budget` slots. Reaching the budget is reported, not thrown.
inline BroadcastResult run_single_broadcast(const Network& net, const RankedTree& ranked, const ScheduleParams& params,
                                            PacketId packet, std::uint64_t seed, Slot slot_budget,
                                            std::ostream* trace = nullptr) {
  Disseminator channel(net);
  channel.set_trace(trace);
  if (trace) *trace << "slot,transmitters,receptions\n";
  RandomStream rng = derive_stream(seed, "contention");
  BroadcastResult result;
  result.delivery_slot.assign(net.node_count(), std::nullopt);
  result.delivery_slot[ranked.root()] = 0;
  channel.launch(packet, ranked, params, 0);

  auto absorb = [&](const CompletedBroadcast& done) {
    for (NodeId v = 0; v < net.node_count(); ++v)
      if (done.received_at[v] >= 0) result.delivery_slot[v] = done.received_at[v];
    result.length = done.completion_slot + 1;
  };
  for (Slot t = 0; t < slot_budget && !result.length; ++t) {
    SlotReport r = channel.advance(t, rng);
    result.fast_link_failures += r.fast_link_failures;
    result.transmissions += r.transmissions;
    for (const auto& done : r.completed) absorb(done);
  }
  result.budget_exhausted = !result.length.has_value();
  if (auto partial = channel.progress(packet)) {
    for (NodeId v = 0; v < net.node_count(); ++v)
      if ((*partial)[v] >= 0) result.delivery_slot[v] = (*partial)[v];
  }
  return result;
}

}  // namespace mmb
