#include "dcmt/audit.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

#include "dcmt/archive.hpp"
#include "dcmt/config.hpp"
#include "dcmt/controller.hpp"
#include "dcmt/errors.hpp"

namespace dcmt {

namespace {

using Slot = std::tuple<int, int, int>;  // node, path, lifetime

/// Hops left from `node` to the end of `path`, or -1 when the node is not on it.
int hops_left(const Path& path, int node) {
  for (std::size_t k = 0; k < path.nodes.size(); ++k)
    if (path.nodes[k].value == node) return static_cast<int>(path.nodes.size() - 1 - k);
  return -1;
}

/// Tail node of `edge` if `path` uses it, else -1.
int tail_on_path(const Path& path, int edge) {
  for (std::size_t k = 0; k < path.edges.size(); ++k)
    if (path.edges[k].value == edge) return path.nodes[k].value;
  return -1;
}

}  // namespace

EpisodeMetrics audit_episode(const Network& net, bool effective_expiry, std::span<const StepLog> logs,
                             int arrival_steps, bool expect_empty, AuditReport& report, const std::string& context) {
  const auto& g = net.topology();
  const auto all_paths = net.paths().paths();
  const int num_paths = static_cast<int>(all_paths.size());
  const auto num_commodities = net.num_commodities();
  auto violation = [&](std::int64_t t, const std::string& what) {
    report.violations.push_back(fmt::format("{} t={}: {}", context, t, what));
  };

  std::map<Slot, Count> queue;
  EpisodeMetrics m;
  Count admitted_total = 0;

  for (std::size_t step = 0; step < logs.size(); ++step) {
    const StepLog& log = logs[step];
    const auto t = static_cast<std::int64_t>(step);
    ++report.steps;
    if (log.timestep != t) violation(t, fmt::format("timestep field is {}", log.timestep));

    // Admission.
    if (log.arrivals.size() != num_commodities) {
      violation(t, "arrival vector has the wrong length");
      continue;
    }
    std::vector<Count> admitted(num_commodities, 0);
    Count arrived = 0;
    for (Count b : log.arrivals) {
      if (b < 0) violation(t, "negative arrivals");
      arrived += b;
    }
    for (const auto& a : log.admissions) {
      if (a.path.value < 0 || a.path.value >= num_paths || a.count <= 0) {
        violation(t, fmt::format("bad admission entry path={} count={}", a.path.value, a.count));
        continue;
      }
      const Path& p = all_paths[static_cast<std::size_t>(a.path.value)];
      const Commodity& c = net.commodity(p.commodity);
      admitted[p.commodity.index()] += a.count;
      queue[{c.source.value, a.path.value, c.initial_lifetime}] += a.count;
    }
    for (std::size_t c = 0; c < num_commodities; ++c)
      if (admitted[c] != log.arrivals[c])
        violation(t, fmt::format("commodity {} admitted {} of {} arrivals", c, admitted[c], log.arrivals[c]));
    admitted_total += arrived;

    // Availability, direction and capacity.
    std::map<Slot, Count> taken;
    std::unordered_map<int, Count> load;
    Count dropped_now = 0;
    for (const auto& d : log.drops) {
      if (d.count <= 0 || d.path.value < 0 || d.path.value >= num_paths) {
        violation(t, "bad drop entry");
        continue;
      }
      taken[{d.node.value, d.path.value, d.lifetime}] += d.count;
      dropped_now += d.count;
    }
    struct Move {
      int to;
      int path;
      int lifetime;
      Count count;
    };
    std::vector<Move> moves;
    for (const auto& f : log.flows) {
      if (f.count <= 0 || f.edge.value < 0 || f.edge.value >= static_cast<int>(g.num_edges()) || f.path.value < 0 ||
          f.path.value >= num_paths) {
        violation(t, "bad flow entry");
        continue;
      }
      const Path& p = all_paths[static_cast<std::size_t>(f.path.value)];
      const int tail = tail_on_path(p, f.edge.value);
      const Edge& e = g.edge(f.edge);
      if (tail < 0 || tail != e.from.value) {
        violation(t, fmt::format("path {} does not continue over edge {}", f.path.value, f.edge.value));
        continue;
      }
      if (f.lifetime < 1) violation(t, fmt::format("flow of lifetime {} packets", f.lifetime));
      taken[{tail, f.path.value, f.lifetime}] += f.count;
      load[f.edge.value] += f.count;
      moves.push_back({e.to.value, f.path.value, f.lifetime, f.count});
    }
    for (const auto& [slot, n] : taken) {
      auto it = queue.find(slot);
      const Count have = it == queue.end() ? 0 : it->second;
      if (n > have) {
        violation(t, fmt::format("node {} path {} lifetime {}: {} packets used, {} available", std::get<0>(slot),
                                 std::get<1>(slot), std::get<2>(slot), n, have));
        queue[slot] = 0;
      } else {
        it->second -= n;
      }
    }
    for (const auto& [edge, n] : load)
      if (n > g.capacity(EdgeId(edge)))
        violation(t, fmt::format("edge {} carries {} packets, capacity {}", edge, n, g.capacity(EdgeId(edge))));

    // Deliveries.
    std::map<std::pair<int, int>, Count> delivered_expect, delivered_log;
    Count delivered_now = 0;
    for (const Move& mv : moves) {
      const Path& p = all_paths[static_cast<std::size_t>(mv.path)];
      if (mv.to == p.nodes.back().value) {
        delivered_expect[{p.commodity.value, mv.lifetime}] += mv.count;
        delivered_now += mv.count;
      } else {
        queue[{mv.to, mv.path, mv.lifetime}] += mv.count;
      }
    }
    for (const auto& d : log.deliveries) delivered_log[{d.commodity.value, d.lifetime}] += d.count;
    if (delivered_expect != delivered_log) violation(t, "logged deliveries differ from replayed deliveries");

    // Aging and expiry.
    std::map<std::tuple<int, int, int, int>, Count> expired_expect, expired_log;
    std::map<Slot, Count> aged;
    Count expired_l = 0, expired_e = 0;
    for (const auto& [slot, n] : queue) {
      if (n == 0) continue;
      const auto [node, path, l] = slot;
      const int left = l - 1;
      if (left <= 0) {
        expired_expect[{node, path, 0, 0}] += n;
        expired_l += n;
        continue;
      }
      if (effective_expiry && left < hops_left(all_paths[static_cast<std::size_t>(path)], node)) {
        expired_expect[{node, path, left, 1}] += n;
        expired_e += n;
        continue;
      }
      aged[{node, path, left}] += n;
    }
    queue = std::move(aged);
    for (const auto& e : log.expiries)
      expired_log[{e.node.value, e.path.value, e.lifetime, static_cast<int>(e.cause)}] += e.count;
    if (expired_expect != expired_log) violation(t, "logged expiries differ from replayed expiries");

    // Conservation.
    m.deliveries += delivered_now;
    m.dropped += dropped_now;
    m.expired_lifetime += expired_l;
    m.expired_effective += expired_e;
    Count held = 0;
    for (const auto& [slot, n] : queue) held += n;
    if (admitted_total != m.deliveries + m.dropped + m.expired_lifetime + m.expired_effective + held)
      violation(t, fmt::format("conservation: {} admitted, {} delivered, {} dropped, {} expired, {} queued",
                               admitted_total, m.deliveries, m.dropped, m.expired_lifetime + m.expired_effective,
                               held));

    if (static_cast<int>(step) < arrival_steps) {
      m.step_arrivals.push_back(arrived);
      m.step_deliveries.push_back(delivered_now);
    } else {
      ++m.drain_steps;
      if (arrived != 0) violation(t, "arrivals during the drain phase");
    }
  }
  if (static_cast<int>(logs.size()) < arrival_steps)
    violation(static_cast<std::int64_t>(logs.size()), "episode shorter than the arrival phase");
  if (expect_empty) {
    Count held = 0;
    for (const auto& [slot, n] : queue) held += n;
    if (held != 0) violation(static_cast<std::int64_t>(logs.size()), fmt::format("{} packets left after drain", held));
  }
  m.arrivals = admitted_total;
  m.reliability = reliability(m.deliveries, m.arrivals);
  m.degenerate = m.arrivals == 0;
  ++report.episodes;
  return m;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw FileError(fmt::format("cannot open '{}'", file.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

/// The leading (strategy, lifetime, rate, seed, episode) fields of a CSV row.
std::string row_key(const std::string& line) {
  std::size_t pos = 0;
  for (int f = 0; f < 5 && pos != std::string::npos; ++f) pos = line.find(',', f == 0 ? 0 : pos + 1);
  return line.substr(0, pos);
}

}  // namespace

AuditReport audit_archive(const std::filesystem::path& archive_dir) {
  const ArchiveManifest manifest = read_manifest(archive_dir);
  const ExperimentConfig cfg = parse_config(manifest.config);
  const auto run_dir = archive_dir.parent_path();
  const auto metrics_lines = read_lines(run_dir / manifest.metrics_file);
  const auto step_lines = read_lines(run_dir / manifest.steps_file);

  AuditReport report;
  if (metrics_lines.empty() || metrics_lines[0] != metrics_header())
    report.violations.push_back("metrics file: unexpected header");
  if (step_lines.empty() || step_lines[0] != steps_header()) report.violations.push_back("steps file: unexpected header");

  std::unordered_map<std::string, std::string> metrics_by_key;
  for (std::size_t k = 1; k < metrics_lines.size(); ++k) {
    if (!metrics_by_key.emplace(row_key(metrics_lines[k]), metrics_lines[k]).second)
      report.violations.push_back(fmt::format("metrics file line {}: duplicate row", k + 1));
  }
  std::unordered_map<std::string, std::string> steps_by_key;
  for (std::size_t k = 1; k < step_lines.size(); ++k) steps_by_key[row_key(step_lines[k])] += step_lines[k] + '\n';

  for (const ArchiveShard& shard : manifest.shards) {
    const auto net = build_network(cfg, shard.lifetime, shard.rate);
    const bool eff = env_options(shard.strategy).effective_lifetime_expiry;
    std::vector<std::vector<StepLog>> episodes(static_cast<std::size_t>(shard.episodes));
    std::ifstream is(archive_dir / shard.file, std::ios::binary);
    if (!is) {
      report.violations.push_back(fmt::format("missing shard '{}'", shard.file));
      continue;
    }
    std::string line;
    while (std::getline(is, line)) {
      int ep = -1;
      StepLog log = parse_steplog_line(line, ep);
      if (ep < 0 || ep >= shard.episodes) {
        report.violations.push_back(fmt::format("{}: episode {} out of range", shard.file, ep));
        continue;
      }
      episodes[static_cast<std::size_t>(ep)].push_back(std::move(log));
    }
    const RowKey key{shard.strategy, shard.lifetime, shard.aggregate_rate, shard.seed};
    for (int ep = 0; ep < shard.episodes; ++ep) {
      const std::string ctx = fmt::format("{} episode {}", shard.file, ep);
      const EpisodeMetrics m = audit_episode(*net, eff, episodes[static_cast<std::size_t>(ep)],
                                             manifest.arrival_steps, manifest.drain, report, ctx);
      const std::string expected = format_metrics_row(key, ep, m);
      const std::string k = row_key(expected);
      const auto it = metrics_by_key.find(k);
      if (it == metrics_by_key.end())
        report.violations.push_back(ctx + ": no metrics row");
      else if (it->second != expected)
        report.violations.push_back(fmt::format("{}: metrics row '{}' recomputes as '{}'", ctx, it->second, expected));
      const auto st = steps_by_key.find(k);
      if (st == steps_by_key.end() || st->second != format_step_rows(key, ep, m))
        report.violations.push_back(ctx + ": step rows do not recompute");
      ++report.rows_checked;
    }
  }
  return report;
}

}  // namespace dcmt
