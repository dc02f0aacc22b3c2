#include "dcmt/topology.hpp"

#include <set>
#include <unordered_set>
#include <utility>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt {

Topology::Topology(std::vector<std::string> node_names, std::vector<Edge> edges)
    : names_(std::move(node_names)), edges_(std::move(edges)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ConfigError("topology: empty node name");
    if (!seen.insert(n).second) throw ConfigError(fmt::format("topology: duplicate node '{}'", n));
  }
  out_.resize(names_.size());
  in_.resize(names_.size());
  std::set<std::pair<std::int32_t, std::int32_t>> pairs;
  const auto n = static_cast<std::int32_t>(names_.size());
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (e.from.value < 0 || e.from.value >= n || e.to.value < 0 || e.to.value >= n)
      throw ConfigError(fmt::format("topology: edge {} references an undeclared node", k));
    if (e.from == e.to) throw ConfigError(fmt::format("topology: self-loop at '{}'", names_[e.from.index()]));
    if (e.capacity < 0) throw ConfigError(fmt::format("topology: negative capacity on edge {}", k));
    if (!pairs.emplace(e.from.value, e.to.value).second)
      throw ConfigError(fmt::format("topology: duplicate edge {}->{}", names_[e.from.index()], names_[e.to.index()]));
    out_[e.from.index()].emplace_back(k);
    in_[e.to.index()].emplace_back(k);
  }
}

std::optional<NodeId> Topology::find_node(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return NodeId(i);
  return std::nullopt;
}

std::optional<EdgeId> Topology::find_edge(NodeId from, NodeId to) const {
  if (!from.valid() || from.index() >= out_.size()) return std::nullopt;
  for (EdgeId e : out_[from.index()])
    if (edges_[e.index()].to == to) return e;
  return std::nullopt;
}

}  // namespace dcmt
