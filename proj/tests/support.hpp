#ifndef DCMT_TESTS_SUPPORT_HPP
#define DCMT_TESTS_SUPPORT_HPP

#include <filesystem>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "dcmt/config.hpp"
#include "dcmt/network.hpp"
#include "dcmt/queue_state.hpp"
#include "dcmt/rng.hpp"

namespace dcmt::test {

struct CommodityDef {
  std::string source;
  std::string destination;
  Lifetime lifetime = 3;
  double rate = 1.0;
};

using EdgeDef = std::tuple<std::string, std::string, Count>;

inline std::shared_ptr<const Network> make_network(const std::vector<std::string>& nodes,
                                                   const std::vector<EdgeDef>& edges,
                                                   const std::vector<CommodityDef>& commodities) {
  std::vector<Edge> es;
  auto index = [&](const std::string& n) {
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k] == n) return NodeId(k);
    return NodeId();
  };
  for (const auto& [a, b, c] : edges) es.push_back(Edge{index(a), index(b), c});
  Topology g(nodes, es);
  std::vector<Commodity> cs;
  for (std::size_t k = 0; k < commodities.size(); ++k) {
    const auto& d = commodities[k];
    cs.push_back(Commodity{CommodityId(k), index(d.source), index(d.destination), d.lifetime, d.rate});
  }
  return std::make_shared<const Network>(std::move(g), std::move(cs));
}

/// S -> M -> D plus a direct S -> D link.
inline std::shared_ptr<const Network> triangle(Lifetime l = 3, double rate = 8.0, Count direct = 10, Count detour = 2) {
  return make_network({"S", "M", "D"}, {{"S", "D", direct}, {"S", "M", detour}, {"M", "D", detour}},
                      {{"S", "D", l, rate}});
}

inline std::filesystem::path source_dir() { return DCMT_SOURCE_DIR; }
inline std::filesystem::path config_path(const std::string& name) { return source_dir() / "configs" / name; }
inline ExperimentConfig shipped(const std::string& name) { return load_config(config_path(name)); }

/// Fresh scratch directory under the build tree, emptied on creation.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(DCMT_BINARY_DIR) / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random backlog at every (on-path, non-destination node, lifetime) index.
/// With `positive_el` only indices with EL >= 1 are filled.
inline QueueState random_queues(const Network& net, Rng& rng, Count max_count, double fill, bool positive_el) {
  QueueState q(net, false);
  for (const Path& p : net.paths().paths()) {
    const Lifetime lc = net.initial_lifetime(p.id);
    for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k)
      for (Lifetime l = 1; l <= lc; ++l) {
        if (positive_el && net.effective_lifetime(p.id, l, p.nodes[k]) < 1) continue;
        if (uniform01(rng) >= fill) continue;
        q.count_ref(p.nodes[k], p.id, l) = 1 + static_cast<Count>(uniform_index(rng, static_cast<std::size_t>(max_count)));
      }
  }
  return q;
}

/// Random directed graph on n nodes named v0..v{n-1}; each ordered pair gets an edge with probability `density`.
inline Topology random_topology(std::size_t n, double density, Rng& rng, Count max_capacity = 10) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n; ++k) names.push_back("v" + std::to_string(k));
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && uniform01(rng) < density)
        edges.push_back(Edge{NodeId(a), NodeId(b), 1 + static_cast<Count>(uniform_index(rng, max_capacity))});
  return Topology(names, edges);
}

}  // namespace dcmt::test

#endif  // DCMT_TESTS_SUPPORT_HPP
