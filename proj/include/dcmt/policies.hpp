#ifndef DCMT_POLICIES_HPP
#define DCMT_POLICIES_HPP

#include <deque>
#include <span>
#include <vector>

#include "dcmt/environment.hpp"
#include "dcmt/network.hpp"
#include "dcmt/queue_state.hpp"
#include "dcmt/step_log.hpp"

namespace dcmt {

/// One nonempty queue index behind an interface, in canonical (commodity, path, lifetime) order.
struct QueuedIndex {
  CommodityId commodity;
  PathId path;
  Lifetime lifetime = 0;
  Lifetime effective = 0;  // EL(p, l, i)
  Count count = 0;
};

/// The q_ij view: packets at the tail node of `e` whose path continues over `e`.
std::vector<QueuedIndex> interface_view(const Network& net, const QueueState& q, EdgeId e);

/// Lowest Effective Lifetime First: forward packets in non-decreasing EL order
/// (ties by commodity, path, lifetime) until `capacity` is used up.
/// Packets with EL <= 0 are never selected.
std::vector<FlowEntry> lelf_schedule(const Network& net, const QueueState& q, EdgeId e, Count capacity);

/// W_ij and w_p for the minimum-weight router.
struct EdgeWeightTable {
  std::vector<double> edge;  // W_ij(t)
  std::vector<double> path;  // w_p = sum of W_ij over p's edges
};

/// W_ij = sum over c, p in P^c_ij, l of q_i^{(c,p,l)} * (|l - EL(p,l,i)| + 1).
EdgeWeightTable mwr_weights(const Network& net, const QueueState& q);

/// Smallest edge capacity along p.
Count bottleneck_capacity(const Network& net, PathId p);

/// Fills paths in increasing weight order (ties by path rank), each up to its
/// bottleneck capacity; the heaviest path takes whatever is left.
Assignment assign_by_path_weight(const Network& net, std::span<const double> path_weight,
                                 std::span<const Count> arrivals);

/// Minimum-weight router: mwr_weights followed by assign_by_path_weight.
Assignment mwr_route(const Network& net, const QueueState& q, std::span<const Count> arrivals);

/// Min-cost routing over per-edge virtual queues (lifetime-adapted UMW router).
///
/// Each arriving packet takes the feasible path with the smallest summed virtual
/// backlog (ties by path rank) and immediately adds one unit to every edge it uses.
/// After all commodities are routed, each virtual queue is served by its link
/// capacity: V_e <- max(0, V_e - C_e).
class UmwRouter {
 public:
  explicit UmwRouter(const Network& net);

  Assignment route(const Network& net, std::span<const Count> arrivals);

  [[nodiscard]] std::span<const Count> virtual_queues() const { return virtual_; }
  void set_virtual_queues(std::vector<Count> v) { virtual_ = std::move(v); }
  void reset();

 private:
  std::vector<Count> virtual_;
};

struct FifoDecision {
  std::vector<FlowEntry> flows;
  std::vector<DropEntry> expired;  // stale records found at service time
};

/// Serves the `capacity` oldest packets waiting at the tail of `e`. Records whose
/// lifetime already hit zero are skipped and reported as expired.
FifoDecision fifo_schedule(const Network& net, EdgeId e, const std::deque<PacketRecord>& fifo, Count capacity);

}  // namespace dcmt

#endif  // DCMT_POLICIES_HPP
