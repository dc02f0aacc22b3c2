#include "dcmt/environment.hpp"

#include <map>
#include <tuple>
#include <utility>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt {

namespace {

std::string describe(const Network& net, NodeId i, NodeId j, PathId p, Lifetime l) {
  const auto& g = net.topology();
  const CommodityId c = net.paths().path(p).commodity;
  if (j.valid())
    return fmt::format("(i={}, j={}, c={}, p={}, l={})", g.name(i), g.name(j), c.value, p.value, l);
  return fmt::format("(i={}, c={}, p={}, l={})", g.name(i), c.value, p.value, l);
}

void check_path(const Network& net, PathId p) {
  if (!p.valid() || p.index() >= net.paths().size()) throw ContractError(fmt::format("unknown path id {}", p.value));
}

std::size_t take_records(std::deque<PacketRecord>& d, PathId p, Lifetime l, Count n,
                         std::vector<PacketRecord>* moved) {
  std::size_t taken = 0;
  for (auto it = d.begin(); it != d.end() && static_cast<Count>(taken) < n;) {
    if (it->path == p && it->lifetime == l) {
      if (moved) moved->push_back(*it);
      it = d.erase(it);
      ++taken;
    } else {
      ++it;
    }
  }
  return taken;
}

}  // namespace

std::vector<Count> sample_arrivals(std::span<const Commodity> commodities, Rng& rng) {
  std::vector<Count> out;
  out.reserve(commodities.size());
  for (const Commodity& c : commodities) out.push_back(poisson(rng, c.mean_arrival_rate));
  return out;
}

void admit(const Network& net, QueueState& q, std::span<const Count> arrivals, const Assignment& assignment,
           StepLog& log) {
  const auto& paths = net.paths();
  if (arrivals.size() != net.num_commodities())
    throw ContractError(fmt::format("admit: {} arrival counts for {} commodities", arrivals.size(),
                                    net.num_commodities()));
  if (assignment.size() != paths.size())
    throw ContractError(fmt::format("admit: assignment has {} entries, expected {}", assignment.size(), paths.size()));

  std::vector<Count> per_commodity(net.num_commodities(), 0);
  for (const Path& p : paths.paths()) {
    const Count n = assignment[p.id.index()];
    if (n < 0) throw ContractError(fmt::format("admit: negative assignment on path {}", p.id.value));
    per_commodity[p.commodity.index()] += n;
  }
  for (std::size_t c = 0; c < per_commodity.size(); ++c)
    if (per_commodity[c] != arrivals[c])
      throw ContractError(fmt::format("admit: commodity {} assigns {} packets but {} arrived", c,
                                      per_commodity[c], arrivals[c]));

  log.arrivals.assign(arrivals.begin(), arrivals.end());
  for (const Path& p : paths.paths()) {
    const Count n = assignment[p.id.index()];
    if (n == 0) continue;
    const Commodity& c = net.commodity(p.commodity);
    q.count_ref(c.source, p.id, c.initial_lifetime) += n;
    if (q.tracks_fifo()) {
      auto& d = q.fifo_mut(p.edges.front());
      for (Count k = 0; k < n; ++k) d.push_back(PacketRecord{p.id, c.initial_lifetime, q.clock()});
    }
    log.admissions.push_back(AdmissionEntry{p.id, n});
  }
}

void apply_flows(const Network& net, QueueState& q, const SlotDecision& decision, StepLog& log) {
  const auto& g = net.topology();
  const auto& paths = net.paths();

  // Validation pass: nothing is mutated until every entry is known to be admissible.
  std::map<std::tuple<std::int32_t, std::int32_t, Lifetime>, Count> outgoing;
  std::vector<Count> edge_load(g.num_edges(), 0);

  for (const FlowEntry& f : decision.flows) {
    if (!f.edge.valid() || f.edge.index() >= g.num_edges())
      throw ContractError(fmt::format("apply_flows: unknown edge id {}", f.edge.value));
    check_path(net, f.path);
    const Edge& e = g.edge(f.edge);
    if (f.count < 0)
      throw ContractError("apply_flows: negative flow " + describe(net, e.from, e.to, f.path, f.lifetime));
    if (f.count == 0) continue;
    if (!paths.on_path(f.path, e.from) || paths.next_edge(f.path, e.from) != f.edge)
      throw ContractError("apply_flows: edge is not the next hop of the path " +
                          describe(net, e.from, e.to, f.path, f.lifetime));
    if (f.lifetime < 1 || f.lifetime > net.initial_lifetime(f.path))
      throw ContractError("apply_flows: lifetime out of range " + describe(net, e.from, e.to, f.path, f.lifetime));
    outgoing[{e.from.value, f.path.value, f.lifetime}] += f.count;
    edge_load[f.edge.index()] += f.count;
  }
  for (const DropEntry& d : decision.drops) {
    check_path(net, d.path);
    if (!d.node.valid() || d.node.index() >= g.num_nodes())
      throw ContractError(fmt::format("apply_flows: unknown node id {}", d.node.value));
    if (d.count < 0) throw ContractError("apply_flows: negative drop " + describe(net, d.node, {}, d.path, d.lifetime));
    if (d.count == 0) continue;
    if (!paths.on_path(d.path, d.node) || d.lifetime < 1 || d.lifetime > net.initial_lifetime(d.path))
      throw ContractError("apply_flows: drop outside the queue index space " +
                          describe(net, d.node, {}, d.path, d.lifetime));
    outgoing[{d.node.value, d.path.value, d.lifetime}] += d.count;
  }
  for (const auto& [key, n] : outgoing) {
    const auto [i, p, l] = key;
    const Count have = q.count(NodeId(i), PathId(p), l);
    if (n > have)
      throw ContractError(fmt::format("apply_flows: availability violated, {} requested but {} queued ", n, have) +
                          describe(net, NodeId(i), {}, PathId(p), l));
  }
  for (std::size_t k = 0; k < edge_load.size(); ++k) {
    const Edge& e = g.edge(EdgeId(k));
    if (edge_load[k] > e.capacity)
      throw ContractError(fmt::format("apply_flows: capacity violated on {}->{}: {} > {}", g.name(e.from),
                                      g.name(e.to), edge_load[k], e.capacity));
  }

  // Departures.
  std::vector<std::pair<const FlowEntry*, std::vector<PacketRecord>>> in_flight;
  for (const FlowEntry& f : decision.flows) {
    if (f.count == 0) continue;
    const NodeId i = g.edge(f.edge).from;
    q.count_ref(i, f.path, f.lifetime) -= f.count;
    std::vector<PacketRecord> moved;
    if (q.tracks_fifo()) {
      if (static_cast<Count>(take_records(q.fifo_mut(f.edge), f.path, f.lifetime, f.count, &moved)) != f.count)
        throw ContractError("apply_flows: FIFO records out of sync " +
                            describe(net, i, g.edge(f.edge).to, f.path, f.lifetime));
    }
    in_flight.emplace_back(&f, std::move(moved));
    log.flows.push_back(f);
  }
  for (const DropEntry& d : decision.drops) {
    if (d.count == 0) continue;
    q.count_ref(d.node, d.path, d.lifetime) -= d.count;
    if (q.tracks_fifo()) {
      const EdgeId e = paths.next_edge(d.path, d.node);
      if (!e.valid() || static_cast<Count>(take_records(q.fifo_mut(e), d.path, d.lifetime, d.count, nullptr)) != d.count)
        throw ContractError("apply_flows: FIFO records out of sync " + describe(net, d.node, {}, d.path, d.lifetime));
    }
    log.drops.push_back(d);
  }

  // Arrivals at the far end of each link; destinations consume immediately.
  std::map<std::pair<std::int32_t, Lifetime>, Count> delivered;
  for (auto& [f, records] : in_flight) {
    const NodeId j = g.edge(f->edge).to;
    const Path& p = paths.path(f->path);
    if (j == p.nodes.back()) {
      delivered[{p.commodity.value, f->lifetime}] += f->count;
      continue;
    }
    q.count_ref(j, f->path, f->lifetime) += f->count;
    if (q.tracks_fifo()) {
      auto& d = q.fifo_mut(paths.next_edge(f->path, j));
      for (PacketRecord r : records) {
        r.enqueue_slot = q.clock() + 1;
        d.push_back(r);
      }
    }
  }
  for (const auto& [key, n] : delivered)
    log.deliveries.push_back(DeliveryEntry{CommodityId(key.first), key.second, n});
}

void expire_and_advance(const Network& net, QueueState& q, bool effective_lifetime_expiry, StepLog& log) {
  const auto& paths = net.paths();
  const Lifetime lmax = q.max_lifetime();
  for (std::size_t ni = 0; ni < q.num_nodes(); ++ni) {
    const NodeId i(ni);
    for (const Path& p : paths.paths()) {
      if (!paths.on_path(p.id, i)) continue;
      for (Lifetime l = 1; l <= lmax; ++l) q.count_ref(i, p.id, l - 1) = q.count(i, p.id, l);
      q.count_ref(i, p.id, lmax) = 0;

      if (const Count dead = q.count(i, p.id, 0); dead > 0) {
        log.expiries.push_back(ExpiryEntry{i, p.id, 0, dead, ExpiryCause::lifetime});
        q.count_ref(i, p.id, 0) = 0;
      }
      if (!effective_lifetime_expiry) continue;
      const int d = paths.dist(p.id, i);
      for (Lifetime l = 1; l <= lmax && l - d + 1 <= 0; ++l) {
        if (const Count dead = q.count(i, p.id, l); dead > 0) {
          log.expiries.push_back(ExpiryEntry{i, p.id, l, dead, ExpiryCause::effective_lifetime});
          q.count_ref(i, p.id, l) = 0;
        }
      }
    }
  }
  if (q.tracks_fifo()) {
    for (std::size_t e = 0; e < net.topology().num_edges(); ++e) {
      auto& d = q.fifo_mut(EdgeId(e));
      const NodeId i = net.topology().edge(EdgeId(e)).from;
      std::erase_if(d, [&](PacketRecord& r) {
        --r.lifetime;
        if (r.lifetime <= 0) return true;
        return effective_lifetime_expiry && r.lifetime - paths.dist(r.path, i) + 1 <= 0;
      });
    }
  }
  q.set_clock(q.clock() + 1);
}

Environment::Environment(std::shared_ptr<const Network> network, EnvOptions options)
    : network_(std::move(network)), options_(options), queues_(*network_, options.track_fifo) {}

void Environment::reset() { queues_.clear(); }

StepLog Environment::step(std::span<const Count> arrivals, const Assignment& assignment, const Scheduler& scheduler) {
  StepLog log;
  log.timestep = queues_.clock();
  admit(*network_, queues_, arrivals, assignment, log);
  const SlotDecision decision = scheduler(queues_);
  apply_flows(*network_, queues_, decision, log);
  expire_and_advance(*network_, queues_, options_.effective_lifetime_expiry, log);
  return log;
}

}  // namespace dcmt
