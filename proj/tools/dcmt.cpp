// dcmt: command-line front end for training, evaluation, comparison and audits.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dcmt/agents.hpp"
#include "dcmt/archive.hpp"
#include "dcmt/audit.hpp"
#include "dcmt/config.hpp"
#include "dcmt/errors.hpp"
#include "dcmt/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using namespace dcmt;

enum Exit : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kBadConfig = 3,
  kUnknownStrategy = 4,
  kMissingFile = 5,
  kAuditFailed = 6,
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> strategies;
  std::optional<int> episodes;
};

void add_common(CLI::App* cmd, Common& c, bool strategies) {
  cmd->add_option("--config", c.config, "Experiment config (JSON)")->required();
  cmd->add_option("--seed", c.seed, "Run a single seed instead of the configured list");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--episodes", c.episodes, "Episode count override");
  if (strategies) cmd->add_option("--strategy", c.strategies, "Strategy name (repeatable)");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  return cfg;
}

std::vector<Strategy> chosen(const Common& c, const ExperimentConfig& cfg) {
  if (c.strategies.empty()) return cfg.strategies;
  std::vector<Strategy> out;
  for (const auto& name : c.strategies) {
    const auto s = parse_strategy(name);
    if (!s) throw UnknownStrategyError(name);
    out.push_back(*s);
  }
  return out;
}

void print_summary(const std::vector<SummaryRow>& rows) {
  fmt::print("{:<14} {:>3} {:>6} {:>8} {:>10} {:>10} {:>10}\n", "strategy", "L", "rate", "episodes", "mean_rel",
             "std_rel", "agg_rel");
  for (const auto& r : rows)
    fmt::print("{:<14} {:>3} {:>6} {:>8} {:>10.4f} {:>10.4f} {:>10.4f}\n", to_string(r.strategy), r.lifetime,
               format_number(r.aggregate_rate), r.episodes, r.mean_episode_reliability, r.std_episode_reliability,
               r.aggregate_reliability);
}

int cmd_paths(const Common& c, std::optional<Lifetime> lifetime) {
  const ExperimentConfig cfg = load(c);
  const auto strategies = chosen(c, cfg);
  for (Lifetime l : cfg.lifetimes) {
    if (lifetime && *lifetime != l) continue;
    const auto net = build_network(cfg, l, cfg.rates.front());
    fmt::print("lifetime {}\n", l);
    const auto& g = net->topology();
    for (const Commodity& k : net->commodities()) {
      fmt::print("  commodity {} {}->{}\n", k.id.value, g.name(k.source), g.name(k.destination));
      for (PathId p : net->paths().of_commodity(k.id)) {
        std::string hops;
        for (NodeId n : net->paths().path(p).nodes) hops += (hops.empty() ? "" : "->") + g.name(n);
        fmt::print("    path {} (rank {}): {}\n", p.value, net->paths().path(p).rank, hops);
      }
    }
    for (Strategy s : strategies) std::cout << format_accounting(accounting_report(s, *net), *net);
  }
  return kOk;
}

int cmd_train(const Common& c, std::optional<Lifetime> lifetime, std::optional<double> rate, bool resume) {
  const ExperimentConfig cfg = load(c);
  const auto strategies = chosen(c, cfg);
  TrainOptions opt;
  opt.out_root = output_root(cfg, c.out ? std::optional<fs::path>(*c.out) : std::nullopt);
  opt.lifetime = lifetime;
  opt.rate = rate;
  opt.episodes = c.episodes;
  opt.resume = resume;
  for (Strategy s : strategies) {
    if (!is_learned(s)) {
      fmt::print(stderr, "skipping {}: rule-based\n", to_string(s));
      continue;
    }
    run_training(cfg, s, opt);
    fmt::print("trained {} -> {}\n", to_string(s), (opt.out_root / "checkpoints").string());
  }
  return kOk;
}

int cmd_run(const Common& c, const std::optional<std::string>& checkpoints, bool untrained, bool random,
            bool no_archive) {
  ExperimentConfig cfg = load(c);
  if (c.episodes) {
    if (*c.episodes < 1) throw ConfigError("--episodes must be >= 1");
    cfg.evaluation.episodes = *c.episodes;
  }
  const auto strategies = chosen(c, cfg);
  const fs::path out = output_root(cfg, c.out ? std::optional<fs::path>(*c.out) : std::nullopt);
  RunOptions opt;
  opt.mode = random ? PolicyMode::random : untrained ? PolicyMode::untrained : PolicyMode::checkpoint;
  opt.checkpoint_root = checkpoints ? fs::path(*checkpoints) : out / "checkpoints";
  opt.archive = cfg.output.archive_steplogs && !no_archive;
  const auto rows = run_comparison(cfg, strategies, opt, out / "eval");
  print_summary(rows);
  fmt::print("results in {}\n", (out / "eval").string());
  return kOk;
}

int cmd_audit(const std::string& target) {
  fs::path dir(target);
  if (fs::exists(dir / "archive" / kArchiveManifest)) dir /= "archive";
  const AuditReport r = audit_archive(dir);
  fmt::print("audited {} episodes, {} steps, {} metric rows\n", r.episodes, r.steps, r.rows_checked);
  for (std::size_t k = 0; k < r.violations.size() && k < 50; ++k) fmt::print(stderr, "violation: {}\n", r.violations[k]);
  if (r.violations.size() > 50) fmt::print(stderr, "... {} more\n", r.violations.size() - 50);
  fmt::print("{} violations\n", r.violations.size());
  return r.ok() ? kOk : kAuditFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deadline-constrained multi-commodity routing and scheduling experiments"};
  app.require_subcommand(1);

  Common paths_opts, train_opts, eval_opts, cmp_opts;
  std::optional<Lifetime> paths_lifetime, train_lifetime;
  std::optional<double> train_rate;
  bool resume = false;

  auto* paths = app.add_subcommand("paths", "Print feasible paths and state/action accounting");
  add_common(paths, paths_opts, true);
  paths->add_option("--lifetime", paths_lifetime, "Only this lifetime");

  auto* train = app.add_subcommand("train", "Train learned strategies with MADDPG");
  add_common(train, train_opts, true);
  train->add_option("--lifetime", train_lifetime, "Only this grid lifetime");
  train->add_option("--rate", train_rate, "Only this per-commodity grid rate");
  train->add_flag("--resume", resume, "Continue from existing checkpoints");

  struct RunFlags {
    std::optional<std::string> checkpoints;
    bool untrained = false;
    bool random = false;
    bool no_archive = false;
  } eval_flags, cmp_flags;
  auto add_run_flags = [](CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--checkpoints", f.checkpoints, "Checkpoint root (default <out>/checkpoints)");
    auto* u = cmd->add_flag("--untrained", f.untrained, "Use freshly initialised actors for learned strategies");
    auto* r = cmd->add_flag("--random", f.random, "Use uniform random actions for learned strategies");
    u->excludes(r);
    cmd->add_flag("--no-archive", f.no_archive, "Skip StepLog archives");
  };
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one strategy over the grid");
  add_common(evaluate, eval_opts, true);
  add_run_flags(evaluate, eval_flags);
  auto* compare = app.add_subcommand("compare", "Evaluate several strategies on shared seeds");
  add_common(compare, cmp_opts, true);
  add_run_flags(compare, cmp_flags);

  std::string audit_target;
  auto* audit = app.add_subcommand("audit", "Replay a StepLog archive through the invariant checks");
  audit->add_option("archive", audit_target, "Run directory or its archive/ directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*paths) return cmd_paths(paths_opts, paths_lifetime);
    if (*train) return cmd_train(train_opts, train_lifetime, train_rate, resume);
    if (*evaluate) {
      if (eval_opts.strategies.size() != 1) {
        fmt::print(stderr, "error: evaluate needs exactly one --strategy\n");
        return kUsage;
      }
      return cmd_run(eval_opts, eval_flags.checkpoints, eval_flags.untrained, eval_flags.random,
                     eval_flags.no_archive);
    }
    if (*compare)
      return cmd_run(cmp_opts, cmp_flags.checkpoints, cmp_flags.untrained, cmp_flags.random, cmp_flags.no_archive);
    if (*audit) return cmd_audit(audit_target);
  } catch (const UnknownStrategyError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUnknownStrategy;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kBadConfig;
  } catch (const FileError& e) {
    fmt::print(stderr, "file error: {}\n", e.what());
    return kMissingFile;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kOther;
  }
  return kUsage;
}
