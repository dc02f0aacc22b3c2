// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dcmt/archive.hpp"
#include "dcmt/audit.hpp"
#include "dcmt/config.hpp"
#include "dcmt/experiment.hpp"
#include "dcmt/policies.hpp"
#include "gradcheck.hpp"
#include "support.hpp"
#include "accounting_oracle.hpp"

namespace fs = std::filesystem;
using namespace dcmt;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict invariant_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = test::shipped("seven_node.json");
  const auto grid = grid_points(cfg);
  AuditReport report;
  const RunOptions untrained{PolicyMode::untrained, {}, false};
  for (Strategy s : kAllStrategies) {
    for (int ep = 0; ep < 100; ++ep) {
      const GridPoint& g = grid[static_cast<std::size_t>(ep) % grid.size()];
      const std::uint64_t seed = cfg.seeds[static_cast<std::size_t>(ep) % cfg.seeds.size()];
      const auto net = build_network(cfg, g.lifetime, g.rate);
      auto controller = make_controller(cfg, net, s, g, seed, untrained);
      Environment env(net, env_options(s));
      Rng arrivals = make_rng({seed, static_cast<std::uint64_t>(ep), stream::eval_arrivals});
      Rng policy = make_rng({seed, static_cast<std::uint64_t>(ep), stream::eval_policy});
      controller->set_rng(&policy);
      const EpisodeRun run = run_episode(env, *controller, arrivals, 50, true);
      const EpisodeMetrics replayed =
          audit_episode(*net, env_options(s).effective_lifetime_expiry, run.logs, 50, true, report,
                        fmt::format("{} episode {}", to_string(s), ep));
      if (replayed.deliveries != run.metrics.deliveries || replayed.arrivals != run.metrics.arrivals)
        report.violations.push_back(fmt::format("{} episode {}: recount differs", to_string(s), ep));
    }
  }
  const double secs = seconds_since(t0);
  std::string first = report.violations.empty() ? "" : "; first: " + report.violations.front();
  return {report.ok() && secs < 60.0,
          fmt::format("{} episodes, {} slots, {} violations, {:.1f} s{}", report.episodes, report.steps,
                      report.violations.size(), secs, first)};
}

Verdict accounting() {
  const ExperimentConfig cfg = test::shipped("seven_node.json");
  std::vector<std::string> bad;
  int checked = 0;
  for (Lifetime l : cfg.lifetimes) {
    for (auto& m : test::accounting_mismatches(*build_network(cfg, l, cfg.rates.front()))) bad.push_back(m);
    ++checked;
  }
  for (const auto& net : test::random_small_networks(20, 2024)) {
    for (auto& m : test::accounting_mismatches(*net)) bad.push_back(m);
    ++checked;
  }
  return {bad.empty(), fmt::format("{} networks x {} strategies, {} mismatches{}", checked, kAllStrategies.size(),
                                   bad.size(), bad.empty() ? "" : "; first: " + bad.front())};
}

Verdict gradient_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto shapes =
      test::agent_network_shapes({test::shipped("seven_node.json"), test::shipped("tiny.json")});
  const int cases = std::max<int>(100, static_cast<int>(shapes.size()));
  double worst = 0.0;
  int failed = 0;
  for (int k = 0; k < cases; ++k) {
    const auto& s = shapes[static_cast<std::size_t>(k) % shapes.size()];
    Rng rng = make_rng({0x9c, static_cast<std::uint64_t>(k)});
    const nn::Mlp net(s.sizes, s.output, rng);
    const double err = test::gradient_check(net, rng, 2, 40);
    worst = std::max(worst, err);
    if (!(err <= 1e-4)) ++failed;
  }
  const double secs = seconds_since(t0);
  return {failed == 0 && secs < 30.0, fmt::format("{} cases over {} distinct shapes, worst relative error {:.2e}, {:.1f} s",
                                                  cases, shapes.size(), worst, secs)};
}

Verdict el_and_lelf() {
  const ExperimentConfig cfg = test::shipped("seven_node.json");
  long sweeps = 0, violations = 0;
  for (Lifetime l : cfg.lifetimes) {
    const auto net = build_network(cfg, l, cfg.rates.front());
    for (const Path& p : net->paths().paths())
      for (std::size_t h = 0; h < p.nodes.size(); ++h)
        for (Lifetime ell = 0; ell <= l; ++ell) {
          const auto hops_left = static_cast<Lifetime>(p.nodes.size() - 1 - h);
          ++sweeps;
          if (net->effective_lifetime(p.id, ell, p.nodes[h]) != ell - hops_left + 1) ++violations;
        }
  }

  Rng rng = make_rng({0x1e1f});
  long states = 0, prefix_bad = 0;
  const std::vector<std::shared_ptr<const Network>> nets{build_network(cfg, 3, 6.0), build_network(cfg, 5, 6.0),
                                                         build_network(cfg, 7, 6.0)};
  for (; states < 10000; ++states) {
    const Network& net = *nets[static_cast<std::size_t>(states) % nets.size()];
    const QueueState q = test::random_queues(net, rng, 5, 0.5, false);
    for (std::size_t ei = 0; ei < net.topology().num_edges(); ++ei) {
      const EdgeId e(ei);
      const NodeId i = net.topology().edge(e).from;
      const Count cap = static_cast<Count>(uniform_index(rng, 16));
      std::vector<Lifetime> eligible;
      for (const Path& p : net.paths().paths()) {
        if (std::find(p.edges.begin(), p.edges.end(), e) == p.edges.end()) continue;
        for (Lifetime ell = 1; ell <= net.initial_lifetime(p.id); ++ell) {
          const Lifetime el = net.effective_lifetime(p.id, ell, i);
          if (el >= 1)
            for (Count k = 0; k < q.count(i, p.id, ell); ++k) eligible.push_back(el);
        }
      }
      std::sort(eligible.begin(), eligible.end());
      std::vector<Lifetime> sent;
      for (const FlowEntry& f : lelf_schedule(net, q, e, cap))
        for (Count k = 0; k < f.count; ++k) sent.push_back(net.effective_lifetime(f.path, f.lifetime, i));
      std::sort(sent.begin(), sent.end());
      const std::size_t expect = std::min<std::size_t>(eligible.size(), static_cast<std::size_t>(cap));
      if (sent.size() != expect || !std::equal(sent.begin(), sent.end(), eligible.begin())) ++prefix_bad;
    }
  }
  return {violations == 0 && prefix_bad == 0,
          fmt::format("{} (path, node, lifetime) triples with {} EL mismatches; {} random states with {} non-prefix "
                      "LELF selections",
                      sweeps, violations, states, prefix_bad)};
}

Verdict deterministic_replay() {
  ExperimentConfig cfg = test::shipped("seven_node.json");
  cfg.evaluation.episodes = 4;
  const RunOptions opt{PolicyMode::untrained, {}, true};
  const fs::path a = test::scratch("acceptance_replay_a"), b = test::scratch("acceptance_replay_b");
  run_comparison(cfg, cfg.strategies, opt, a);
  run_comparison(cfg, cfg.strategies, opt, b);
  int files = 0, differ = 0;
  for (const char* f : {"metrics.csv", "steps.csv", "summary.csv", "config.json", "archive/manifest.json"}) {
    ++files;
    if (slurp(a / f) != slurp(b / f)) ++differ;
  }
  for (const auto& s : read_manifest(a / "archive").shards) {
    ++files;
    if (slurp(a / "archive" / s.file) != slurp(b / "archive" / s.file)) ++differ;
  }
  return {differ == 0 && files > 5, fmt::format("{} files compared byte for byte, {} differ", files, differ)};
}

Verdict uncongested() {
  ExperimentConfig cfg = test::shipped("uncongested.json");
  cfg.evaluation.episodes = 100;
  const fs::path dir = test::scratch("acceptance_uncongested");
  const auto rows = run_comparison(cfg, cfg.strategies, RunOptions{PolicyMode::untrained, {}, false}, dir);
  const auto records = parse_metrics_csv(slurp(dir / "metrics.csv"));
  int imperfect = 0;
  for (const auto& r : records)
    if (r.reliability != 1.0) ++imperfect;
  double worst = 1.0;
  for (const auto& r : rows) worst = std::min(worst, r.aggregate_reliability);
  return {imperfect == 0 && worst == 1.0 && !records.empty(),
          fmt::format("{} episodes over {} strategies x {} grid points, {} below 1.0, worst aggregate {}",
                      records.size(), cfg.strategies.size(), grid_points(cfg).size(), imperfect,
                      format_number(worst))};
}

Verdict mwr_trend() {
  const ExperimentConfig cfg = test::shipped("seven_node.json");
  const std::vector<Strategy> only{Strategy::mwr_el_lelf};
  const auto rows = run_comparison(cfg, only, RunOptions{PolicyMode::untrained, {}, false},
                                   test::scratch("acceptance_trend"));
  const std::size_t nl = cfg.lifetimes.size(), nr = cfg.rates.size();
  auto at = [&](std::size_t li, std::size_t ri) { return rows[li * nr + ri].mean_episode_reliability; };
  int inversions = 0;
  double worst = 0.0;
  auto check = [&](double should_not_exceed, double other) {
    // `other` must be <= `should_not_exceed`
    if (other > should_not_exceed) {
      ++inversions;
      worst = std::max(worst, other - should_not_exceed);
    }
  };
  for (std::size_t li = 0; li < nl; ++li)
    for (std::size_t ri = 1; ri < nr; ++ri) check(at(li, ri - 1), at(li, ri));
  for (std::size_t ri = 0; ri < nr; ++ri)
    for (std::size_t li = 1; li < nl; ++li) check(at(li, ri), at(li - 1, ri));
  std::string table;
  for (std::size_t li = 0; li < nl; ++li) {
    table += fmt::format(" L={}:", cfg.lifetimes[li]);
    for (std::size_t ri = 0; ri < nr; ++ri) table += fmt::format(" {:.4f}", at(li, ri));
  }
  return {inversions == 0 || (inversions == 1 && worst <= 0.01),
          fmt::format("{} inversions (largest {:.4f});{}", inversions, worst, table)};
}

// Shared by the two training criteria.
struct TrainedTiny {
  bool done = false;
  std::vector<std::uint64_t> seeds;
  std::vector<double> el_lelf, lt_dsk, random_routing;
  double seconds = 0.0;
};

double evaluate(const ExperimentConfig& base, Strategy s, std::uint64_t seed, PolicyMode mode, const fs::path& ckpt,
                const std::string& tag) {
  ExperimentConfig cfg = base;
  cfg.seeds = {seed};
  const std::vector<Strategy> only{s};
  const auto rows = run_comparison(cfg, only, RunOptions{mode, ckpt, false},
                                   test::scratch(fmt::format("acceptance_eval_{}_{}", tag, seed)));
  return rows.front().mean_episode_reliability;
}

TrainedTiny& trained_tiny() {
  static TrainedTiny t;
  if (t.done) return t;
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = test::shipped("tiny.json");
  const fs::path root = test::scratch("acceptance_training");
  TrainOptions opt;
  opt.out_root = root;
  run_training(cfg, Strategy::marl_el_lelf, opt);
  run_training(cfg, Strategy::marl_lt_dsk, opt);
  const fs::path ckpt = root / "checkpoints";
  for (std::uint64_t seed : cfg.seeds) {
    t.seeds.push_back(seed);
    t.el_lelf.push_back(evaluate(cfg, Strategy::marl_el_lelf, seed, PolicyMode::checkpoint, ckpt, "el"));
    t.lt_dsk.push_back(evaluate(cfg, Strategy::marl_lt_dsk, seed, PolicyMode::checkpoint, ckpt, "dsk"));
    t.random_routing.push_back(evaluate(cfg, Strategy::marl_el_lelf, seed, PolicyMode::random, ckpt, "random"));
  }
  t.seconds = seconds_since(t0);
  t.done = true;
  return t;
}

Verdict training_smoke() {
  const ExperimentConfig cfg = test::shipped("tiny.json");
  const TrainedTiny& t = trained_tiny();
  int passing = 0;
  std::string per_seed;
  for (std::size_t k = 0; k < t.seeds.size(); ++k) {
    const bool ok = t.el_lelf[k] >= t.random_routing[k] + 0.10;
    passing += ok ? 1 : 0;
    per_seed += fmt::format(" seed {}: {:.4f} vs random {:.4f}{};", t.seeds[k], t.el_lelf[k], t.random_routing[k],
                            ok ? "" : " (short)");
  }
  return {passing >= 2 && cfg.training.total_episodes() <= 2000,
          fmt::format("{}/{} seeds, {} episodes, training+evaluation {:.0f} s;{}", passing, t.seeds.size(),
                      cfg.training.total_episodes(), t.seconds, per_seed)};
}

Verdict strategy_ordering() {
  const TrainedTiny& t = trained_tiny();
  int passing = 0;
  std::string per_seed;
  for (std::size_t k = 0; k < t.seeds.size(); ++k) {
    const bool ok = t.el_lelf[k] >= t.lt_dsk[k];
    passing += ok ? 1 : 0;
    per_seed += fmt::format(" seed {}: EL-LELF {:.4f} vs LT-DSK {:.4f};", t.seeds[k], t.el_lelf[k], t.lt_dsk[k]);
  }
  return {passing >= 2, fmt::format("{}/{} seeds;{}", passing, t.seeds.size(), per_seed)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, invariant_suite}, {2, accounting},         {3, gradient_checks},
      {4, el_and_lelf},     {5, deterministic_replay}, {6, uncongested},
      {7, mwr_trend},       {8, training_smoke},      {9, strategy_ordering}};
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));
  int failures = 0;
  for (const auto& [n, run] : criteria) {
    if (!wanted.empty() && !wanted.contains(n)) continue;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    if (!v.pass) ++failures;
    fmt::print("criterion {}: {} {}\n", n, v.pass ? "PASS" : "FAIL", v.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
