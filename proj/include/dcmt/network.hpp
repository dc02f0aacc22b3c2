#ifndef DCMT_NETWORK_HPP
#define DCMT_NETWORK_HPP

#include <span>
#include <vector>

#include "dcmt/ids.hpp"
#include "dcmt/topology.hpp"

namespace dcmt {

/// One unicast service: packets born at `source` with `initial_lifetime` slots to live.
struct Commodity {
  CommodityId id;
  NodeId source;
  NodeId destination;
  Lifetime initial_lifetime = 1;
  double mean_arrival_rate = 0.0;  // Poisson mean, packets per slot
};

/// A simple source->destination walk, stored as node sequence plus the edges it uses.
struct Path {
  PathId id;
  CommodityId commodity;
  std::size_t rank = 0;  // position within its commodity's path list
  std::vector<NodeId> nodes;
  std::vector<EdgeId> edges;

  [[nodiscard]] int hops() const { return static_cast<int>(edges.size()); }
};

/// All simple paths from the commodity's source to its destination with at most
/// `initial_lifetime` hops, ordered by hop count then lexicographically by node
/// index. An empty result means the commodity cannot be served.
std::vector<std::vector<NodeId>> enumerate_feasible_paths(const Topology& topology, const Commodity& commodity);

/// Precomputed path tables for a fixed topology and commodity list.
///
/// Paths are numbered globally: commodity 0's paths first (in canonical order),
/// then commodity 1's, and so on. That numbering is the router's action layout.
class PathSet {
 public:
  PathSet() = default;
  PathSet(const Topology& topology, std::span<const Commodity> commodities);

  [[nodiscard]] std::size_t size() const { return paths_.size(); }
  [[nodiscard]] const Path& path(PathId p) const { return paths_.at(p.index()); }
  [[nodiscard]] std::span<const Path> paths() const { return paths_; }

  /// P^c in canonical order.
  [[nodiscard]] std::span<const PathId> of_commodity(CommodityId c) const { return by_commodity_.at(c.index()); }
  /// P^c_ij: paths of commodity c that traverse edge e, in canonical order.
  [[nodiscard]] std::span<const PathId> through_edge(EdgeId e, CommodityId c) const {
    return through_edge_.at(e.index()).at(c.index());
  }

  [[nodiscard]] bool on_path(PathId p, NodeId i) const { return dist_.at(p.index()).at(i.index()) >= 0; }
  /// Hops from node i to the end of p. Throws ContractError if i is not on p.
  [[nodiscard]] int dist(PathId p, NodeId i) const;
  /// The edge p takes out of node i, or an invalid id when i is p's destination or off-path.
  [[nodiscard]] EdgeId next_edge(PathId p, NodeId i) const { return next_edge_.at(p.index()).at(i.index()); }

 private:
  std::vector<Path> paths_;
  std::vector<std::vector<PathId>> by_commodity_;
  std::vector<std::vector<std::vector<PathId>>> through_edge_;  // [edge][commodity]
  std::vector<std::vector<int>> dist_;                          // [path][node], -1 off-path
  std::vector<std::vector<EdgeId>> next_edge_;                  // [path][node]
};

/// EL(p, l, i) = l - dist(i, p) + 1: slots a packet may still spend waiting.
/// Values <= 0 mean the packet can no longer arrive in time.
[[nodiscard]] Lifetime effective_lifetime(const PathSet& paths, PathId p, Lifetime lifetime, NodeId i);

/// Immutable problem description shared by every component.
class Network {
 public:
  /// Validates commodities (distinct endpoints, lifetime >= 1, rate >= 0) and
  /// rejects any commodity that has no feasible path.
  Network(Topology topology, std::vector<Commodity> commodities);

  [[nodiscard]] const Topology& topology() const { return topology_; }
  [[nodiscard]] std::span<const Commodity> commodities() const { return commodities_; }
  [[nodiscard]] const Commodity& commodity(CommodityId c) const { return commodities_.at(c.index()); }
  [[nodiscard]] std::size_t num_commodities() const { return commodities_.size(); }
  [[nodiscard]] const PathSet& paths() const { return paths_; }
  [[nodiscard]] Lifetime max_lifetime() const { return max_lifetime_; }

  [[nodiscard]] Lifetime effective_lifetime(PathId p, Lifetime l, NodeId i) const {
    return dcmt::effective_lifetime(paths_, p, l, i);
  }
  [[nodiscard]] Lifetime initial_lifetime(PathId p) const {
    return commodity(paths_.path(p).commodity).initial_lifetime;
  }

 private:
  Topology topology_;
  std::vector<Commodity> commodities_;
  PathSet paths_;
  Lifetime max_lifetime_ = 0;
};

}  // namespace dcmt

#endif  // DCMT_NETWORK_HPP
