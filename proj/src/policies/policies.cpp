#include "dcmt/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "dcmt/errors.hpp"

namespace dcmt {

std::vector<QueuedIndex> interface_view(const Network& net, const QueueState& q, EdgeId e) {
  const NodeId i = net.topology().edge(e).from;
  std::vector<QueuedIndex> out;
  for (const Commodity& c : net.commodities())
    for (PathId p : net.paths().through_edge(e, c.id))
      for (Lifetime l = 1; l <= c.initial_lifetime; ++l)
        if (const Count n = q.count(i, p, l); n > 0)
          out.push_back(QueuedIndex{c.id, p, l, net.effective_lifetime(p, l, i), n});
  return out;
}

std::vector<FlowEntry> lelf_schedule(const Network& net, const QueueState& q, EdgeId e, Count capacity) {
  auto view = interface_view(net, q, e);
  std::erase_if(view, [](const QueuedIndex& x) { return x.effective <= 0; });
  std::stable_sort(view.begin(), view.end(),
                   [](const QueuedIndex& a, const QueuedIndex& b) { return a.effective < b.effective; });
  std::vector<FlowEntry> flows;
  Count left = capacity;
  for (const QueuedIndex& x : view) {
    if (left <= 0) break;
    const Count n = std::min(left, x.count);
    flows.push_back(FlowEntry{e, x.path, x.lifetime, n});
    left -= n;
  }
  return flows;
}

EdgeWeightTable mwr_weights(const Network& net, const QueueState& q) {
  const auto& g = net.topology();
  EdgeWeightTable w;
  w.edge.assign(g.num_edges(), 0.0);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const EdgeId e(k);
    const NodeId i = g.edge(e).from;
    double total = 0.0;
    for (const Commodity& c : net.commodities())
      for (PathId p : net.paths().through_edge(e, c.id))
        for (Lifetime l = 1; l <= c.initial_lifetime; ++l) {
          const Count n = q.count(i, p, l);
          if (n == 0) continue;
          const Lifetime el = net.effective_lifetime(p, l, i);
          total += static_cast<double>(n) * static_cast<double>(std::abs(l - el) + 1);
        }
    w.edge[k] = total;
  }
  w.path.reserve(net.paths().size());
  for (const Path& p : net.paths().paths()) {
    double s = 0.0;
    for (EdgeId e : p.edges) s += w.edge[e.index()];
    w.path.push_back(s);
  }
  return w;
}

Count bottleneck_capacity(const Network& net, PathId p) {
  Count cap = std::numeric_limits<Count>::max();
  for (EdgeId e : net.paths().path(p).edges) cap = std::min(cap, net.topology().capacity(e));
  return cap;
}

Assignment assign_by_path_weight(const Network& net, std::span<const double> path_weight,
                                 std::span<const Count> arrivals) {
  if (path_weight.size() != net.paths().size()) throw ContractError("assign_by_path_weight: weight vector size");
  if (arrivals.size() != net.num_commodities()) throw ContractError("assign_by_path_weight: arrivals size");
  Assignment out(net.paths().size(), 0);
  for (const Commodity& c : net.commodities()) {
    std::vector<PathId> order(net.paths().of_commodity(c.id).begin(), net.paths().of_commodity(c.id).end());
    std::stable_sort(order.begin(), order.end(), [&](PathId a, PathId b) {
      return path_weight[a.index()] < path_weight[b.index()];
    });
    Count left = arrivals[c.id.index()];
    for (std::size_t k = 0; k < order.size() && left > 0; ++k) {
      const bool last = k + 1 == order.size();
      const Count n = last ? left : std::min(left, bottleneck_capacity(net, order[k]));
      out[order[k].index()] += n;
      left -= n;
    }
  }
  return out;
}

Assignment mwr_route(const Network& net, const QueueState& q, std::span<const Count> arrivals) {
  const auto w = mwr_weights(net, q);
  return assign_by_path_weight(net, w.path, arrivals);
}

UmwRouter::UmwRouter(const Network& net) : virtual_(net.topology().num_edges(), 0) {}

void UmwRouter::reset() { std::fill(virtual_.begin(), virtual_.end(), 0); }

Assignment UmwRouter::route(const Network& net, std::span<const Count> arrivals) {
  if (arrivals.size() != net.num_commodities()) throw ContractError("UmwRouter::route: arrivals size");
  Assignment out(net.paths().size(), 0);
  for (const Commodity& c : net.commodities()) {
    const auto candidates = net.paths().of_commodity(c.id);
    for (Count k = 0; k < arrivals[c.id.index()]; ++k) {
      PathId best = candidates.front();
      Count best_cost = std::numeric_limits<Count>::max();
      for (PathId p : candidates) {
        Count cost = 0;
        for (EdgeId e : net.paths().path(p).edges) cost += virtual_[e.index()];
        if (cost < best_cost) {
          best_cost = cost;
          best = p;
        }
      }
      ++out[best.index()];
      for (EdgeId e : net.paths().path(best).edges) ++virtual_[e.index()];
    }
  }
  for (std::size_t e = 0; e < virtual_.size(); ++e)
    virtual_[e] = std::max<Count>(0, virtual_[e] - net.topology().capacity(EdgeId(e)));
  return out;
}

FifoDecision fifo_schedule(const Network& net, EdgeId e, const std::deque<PacketRecord>& fifo, Count capacity) {
  const NodeId i = net.topology().edge(e).from;
  // Merge per (path, lifetime) but keep the order in which each index was first served.
  std::map<std::pair<std::int32_t, Lifetime>, std::size_t> slot_of;
  FifoDecision out;
  std::map<std::pair<std::int32_t, Lifetime>, std::size_t> expired_slot;
  Count left = capacity;
  for (const PacketRecord& r : fifo) {
    if (r.lifetime <= 0) {
      auto [it, fresh] = expired_slot.try_emplace({r.path.value, r.lifetime}, out.expired.size());
      if (fresh) out.expired.push_back(DropEntry{i, r.path, r.lifetime, 0});
      ++out.expired[it->second].count;
      continue;
    }
    if (left <= 0) continue;
    auto [it, fresh] = slot_of.try_emplace({r.path.value, r.lifetime}, out.flows.size());
    if (fresh) out.flows.push_back(FlowEntry{e, r.path, r.lifetime, 0});
    ++out.flows[it->second].count;
    --left;
  }
  return out;
}

}  // namespace dcmt
