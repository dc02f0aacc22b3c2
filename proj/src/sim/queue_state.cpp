#include "dcmt/queue_state.hpp"

#include <algorithm>
#include <numeric>

namespace dcmt {

QueueState::QueueState(const Network& network, bool track_fifo)
    : nodes_(network.topology().num_nodes()),
      paths_(network.paths().size()),
      lmax_(network.max_lifetime()),
      counts_(nodes_ * paths_ * static_cast<std::size_t>(lmax_ + 1), 0),
      track_fifo_(track_fifo),
      fifo_(track_fifo ? network.topology().num_edges() : 0) {}

Count QueueState::total() const { return std::accumulate(counts_.begin(), counts_.end(), Count{0}); }

void QueueState::clear() {
  std::fill(counts_.begin(), counts_.end(), 0);
  for (auto& d : fifo_) d.clear();
  clock_ = 0;
}

Count congestion(const Network& network, const QueueState& q, NodeId i) {
  Count total = 0;
  for (const Path& p : network.paths().paths())
    for (Lifetime l = 1; l <= q.max_lifetime(); ++l) total += q.count(i, p.id, l);
  return total;
}

Count congestion(const Network& network, const QueueState& q, EdgeId e) {
  const NodeId i = network.topology().edge(e).from;
  Count total = 0;
  for (const Commodity& c : network.commodities())
    for (PathId p : network.paths().through_edge(e, c.id))
      for (Lifetime l = 1; l <= c.initial_lifetime; ++l) total += q.count(i, p, l);
  return total;
}

}  // namespace dcmt
