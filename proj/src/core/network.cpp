#include "dcmt/network.hpp"

#include <algorithm>
#include <utility>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt {

namespace {

void extend(const Topology& g, NodeId target, int max_hops, std::vector<NodeId>& stack, std::vector<char>& on_stack,
            std::vector<std::vector<NodeId>>& out) {
  const NodeId here = stack.back();
  if (here == target) {
    out.push_back(stack);
    return;
  }
  if (static_cast<int>(stack.size()) - 1 >= max_hops) return;
  for (EdgeId e : g.out_edges(here)) {
    const NodeId next = g.edge(e).to;
    if (on_stack[next.index()]) continue;
    on_stack[next.index()] = 1;
    stack.push_back(next);
    extend(g, target, max_hops, stack, on_stack, out);
    stack.pop_back();
    on_stack[next.index()] = 0;
  }
}

}  // namespace

std::vector<std::vector<NodeId>> enumerate_feasible_paths(const Topology& topology, const Commodity& commodity) {
  const auto n = topology.num_nodes();
  if (!commodity.source.valid() || commodity.source.index() >= n || !commodity.destination.valid() ||
      commodity.destination.index() >= n)
    throw ContractError("enumerate_feasible_paths: commodity endpoint is not a topology node");

  std::vector<std::vector<NodeId>> out;
  if (commodity.source == commodity.destination) return out;
  std::vector<NodeId> stack{commodity.source};
  std::vector<char> on_stack(n, 0);
  on_stack[commodity.source.index()] = 1;
  extend(topology, commodity.destination, commodity.initial_lifetime, stack, on_stack, out);

  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

PathSet::PathSet(const Topology& topology, std::span<const Commodity> commodities) {
  const auto n = topology.num_nodes();
  by_commodity_.resize(commodities.size());
  through_edge_.assign(topology.num_edges(), std::vector<std::vector<PathId>>(commodities.size()));

  for (const Commodity& c : commodities) {
    auto seqs = enumerate_feasible_paths(topology, c);
    std::size_t rank = 0;
    for (auto& seq : seqs) {
      Path p;
      p.id = PathId(paths_.size());
      p.commodity = c.id;
      p.rank = rank++;
      for (std::size_t k = 0; k + 1 < seq.size(); ++k) p.edges.push_back(*topology.find_edge(seq[k], seq[k + 1]));
      p.nodes = std::move(seq);

      std::vector<int> dist(n, -1);
      std::vector<EdgeId> next(n);
      const int hops = p.hops();
      for (int k = 0; k <= hops; ++k) dist[p.nodes[k].index()] = hops - k;
      for (int k = 0; k < hops; ++k) next[p.nodes[k].index()] = p.edges[k];
      for (EdgeId e : p.edges) through_edge_[e.index()][c.id.index()].push_back(p.id);

      by_commodity_[c.id.index()].push_back(p.id);
      dist_.push_back(std::move(dist));
      next_edge_.push_back(std::move(next));
      paths_.push_back(std::move(p));
    }
  }
}

int PathSet::dist(PathId p, NodeId i) const {
  const int d = dist_.at(p.index()).at(i.index());
  if (d < 0) throw ContractError(fmt::format("node {} is not on path {}", i.value, p.value));
  return d;
}

Lifetime effective_lifetime(const PathSet& paths, PathId p, Lifetime lifetime, NodeId i) {
  return lifetime - paths.dist(p, i) + 1;
}

Network::Network(Topology topology, std::vector<Commodity> commodities)
    : topology_(std::move(topology)), commodities_(std::move(commodities)) {
  for (std::size_t k = 0; k < commodities_.size(); ++k) {
    Commodity& c = commodities_[k];
    if (c.id.valid() && c.id.index() != k) throw ConfigError("commodity ids must be 0..n-1 in order");
    c.id = CommodityId(k);
    const auto n = topology_.num_nodes();
    if (!c.source.valid() || c.source.index() >= n || !c.destination.valid() || c.destination.index() >= n)
      throw ConfigError(fmt::format("commodity {}: endpoint is not a topology node", k));
    if (c.source == c.destination) throw ConfigError(fmt::format("commodity {}: source equals destination", k));
    if (c.initial_lifetime < 1) throw ConfigError(fmt::format("commodity {}: lifetime must be >= 1", k));
    if (!(c.mean_arrival_rate >= 0.0)) throw ConfigError(fmt::format("commodity {}: negative arrival rate", k));
    max_lifetime_ = std::max(max_lifetime_, c.initial_lifetime);
  }
  paths_ = PathSet(topology_, commodities_);
  for (const Commodity& c : commodities_)
    if (paths_.of_commodity(c.id).empty())
      throw ConfigError(fmt::format("commodity {} ({} -> {}, L={}) has no feasible path", c.id.value,
                                    topology_.name(c.source), topology_.name(c.destination), c.initial_lifetime));
}

}  // namespace dcmt
