#ifndef DCMT_QUEUE_STATE_HPP
#define DCMT_QUEUE_STATE_HPP

#include <cstdint>
#include <deque>
#include <vector>

#include "dcmt/ids.hpp"
#include "dcmt/network.hpp"

namespace dcmt {

/// One queued packet, kept only when FIFO service order matters.
struct PacketRecord {
  PathId path;
  Lifetime lifetime = 0;
  std::int64_t enqueue_slot = 0;
  bool operator==(const PacketRecord&) const = default;
};

/// Path-indexed lifetime queues q_i^{(c,p,l)} plus optional per-interface FIFO order.
///
/// Counts are stored densely over (node, path, lifetime 0..L_max). Lifetime 0 and
/// destination entries stay zero between slots.
class QueueState {
 public:
  QueueState() = default;
  QueueState(const Network& network, bool track_fifo);

  [[nodiscard]] Count count(NodeId i, PathId p, Lifetime l) const { return counts_[slot(i, p, l)]; }
  Count& count_ref(NodeId i, PathId p, Lifetime l) { return counts_[slot(i, p, l)]; }

  [[nodiscard]] Lifetime max_lifetime() const { return lmax_; }
  [[nodiscard]] std::size_t num_nodes() const { return nodes_; }
  [[nodiscard]] std::size_t num_paths() const { return paths_; }
  [[nodiscard]] Count total() const;

  [[nodiscard]] std::int64_t clock() const { return clock_; }
  void set_clock(std::int64_t t) { clock_ = t; }

  [[nodiscard]] bool tracks_fifo() const { return track_fifo_; }
  /// Packets waiting at the tail of edge e, oldest first.
  [[nodiscard]] const std::deque<PacketRecord>& fifo(EdgeId e) const { return fifo_.at(e.index()); }
  std::deque<PacketRecord>& fifo_mut(EdgeId e) { return fifo_.at(e.index()); }

  /// Empties every queue and resets the clock.
  void clear();

  bool operator==(const QueueState&) const = default;

 private:
  [[nodiscard]] std::size_t slot(NodeId i, PathId p, Lifetime l) const {
    return (i.index() * paths_ + p.index()) * static_cast<std::size_t>(lmax_ + 1) + static_cast<std::size_t>(l);
  }

  std::size_t nodes_ = 0;
  std::size_t paths_ = 0;
  Lifetime lmax_ = 0;
  std::vector<Count> counts_;
  bool track_fifo_ = false;
  std::vector<std::deque<PacketRecord>> fifo_;
  std::int64_t clock_ = 0;
};

/// Q_i(t): packets queued at node i.
[[nodiscard]] Count congestion(const Network& network, const QueueState& q, NodeId i);
/// Q_ij(t): packets queued at i on paths that use edge (i,j).
[[nodiscard]] Count congestion(const Network& network, const QueueState& q, EdgeId e);

}  // namespace dcmt

#endif  // DCMT_QUEUE_STATE_HPP
