#ifndef DCMT_TOPOLOGY_HPP
#define DCMT_TOPOLOGY_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcmt/ids.hpp"

namespace dcmt {

struct Edge {
  NodeId from;
  NodeId to;
  Count capacity = 0;  // packets per slot
};

/// Simple directed graph with per-link integer capacities. Immutable once built.
///
/// Nodes are numbered 0..n-1 in declaration order; edges keep their declaration
/// order, which is also the canonical interface order used by schedulers.
class Topology {
 public:
  Topology() = default;

  /// Throws ConfigError on self-loops, duplicate edges, unknown endpoints,
  /// duplicate node names or negative capacities.
  Topology(std::vector<std::string> node_names, std::vector<Edge> edges);

  [[nodiscard]] std::size_t num_nodes() const { return names_.size(); }
  [[nodiscard]] std::size_t num_edges() const { return edges_.size(); }

  [[nodiscard]] const Edge& edge(EdgeId e) const { return edges_.at(e.index()); }
  [[nodiscard]] std::span<const Edge> edges() const { return edges_; }
  [[nodiscard]] Count capacity(EdgeId e) const { return edge(e).capacity; }

  [[nodiscard]] const std::string& name(NodeId n) const { return names_.at(n.index()); }
  [[nodiscard]] std::span<const std::string> names() const { return names_; }
  [[nodiscard]] std::optional<NodeId> find_node(const std::string& name) const;
  [[nodiscard]] std::optional<EdgeId> find_edge(NodeId from, NodeId to) const;

  /// rho+(i): outgoing edges of i, in edge-index order.
  [[nodiscard]] std::span<const EdgeId> out_edges(NodeId n) const { return out_.at(n.index()); }
  /// rho-(i): incoming edges of i, in edge-index order.
  [[nodiscard]] std::span<const EdgeId> in_edges(NodeId n) const { return in_.at(n.index()); }

 private:
  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
};

}  // namespace dcmt

#endif  // DCMT_TOPOLOGY_HPP
