#include "dcmt/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dcmt/archive.hpp"
#include "dcmt/errors.hpp"
#include "dcmt/maddpg.hpp"

namespace dcmt {

namespace fs = std::filesystem;

std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
  std::vector<GridPoint> out;
  const auto n = static_cast<double>(cfg.commodities.size());
  for (Lifetime l : cfg.lifetimes)
    for (double r : cfg.rates) out.push_back(GridPoint{l, r, r * n});
  return out;
}

EpisodeRun run_episode(Environment& env, Controller& controller, Rng& arrivals_rng, int steps, bool drain) {
  env.reset();
  controller.reset();
  const Network& net = env.network();
  auto scheduler = [&](const QueueState& q) { return controller.schedule(q); };
  EpisodeRun run;
  run.logs.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const auto arrivals = sample_arrivals(net.commodities(), arrivals_rng);
    const Assignment a = controller.route(env.state(), arrivals);
    run.logs.push_back(env.step(arrivals, a, scheduler));
  }
  if (drain) {
    const std::vector<Count> none(net.num_commodities(), 0);
    // Every packet ages by one per slot, so the network is empty after at most L_max slots.
    for (int extra = 0; env.state().total() > 0; ++extra) {
      if (extra > net.max_lifetime()) throw ContractError("network failed to drain within the lifetime bound");
      const Assignment a = controller.route(env.state(), none);
      run.logs.push_back(env.step(none, a, scheduler));
    }
  }
  run.metrics = compute_metrics(run.logs, steps);
  return run;
}

fs::path checkpoint_dir(const fs::path& root, Strategy s, const GridPoint& g, std::uint64_t seed) {
  return root / std::string(to_string(s)) / fmt::format("L{}_r{}_s{}", g.lifetime, format_number(g.rate), seed);
}

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg, std::shared_ptr<const Network> net,
                                            Strategy s, const GridPoint& g, std::uint64_t seed,
                                            const RunOptions& options) {
  if (!is_learned(s)) return make_rule_controller(std::move(net), s);
  switch (options.mode) {
    case PolicyMode::checkpoint: {
      const fs::path dir = checkpoint_dir(options.checkpoint_root, s, g, seed);
      if (!fs::exists(dir / "manifest.json"))
        throw FileError(fmt::format("no trained checkpoint for {} at '{}'", to_string(s), dir.string()));
      return make_policy_controller(net, s, load_policy(dir, *net, s), cfg.normalizers);
    }
    case PolicyMode::untrained:
      return make_untrained_controller(std::move(net), s, cfg.training, cfg.normalizers, seed);
    case PolicyMode::random: {
      auto c = make_untrained_controller(std::move(net), s, cfg.training, cfg.normalizers, seed);
      c->set_epsilon(1.0);
      return c;
    }
  }
  throw ContractError("unknown policy mode");
}

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw FileError(fmt::format("cannot write '{}'", file.string()));
  return os;
}

}  // namespace

std::vector<SummaryRow> run_comparison(const ExperimentConfig& cfg, std::span<const Strategy> strategies,
                                       const RunOptions& options, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const fs::path archive_dir = out_dir / "archive";
  if (options.archive) fs::create_directories(archive_dir);

  std::ofstream metrics = open_out(out_dir / "metrics.csv");
  std::ofstream steps = open_out(out_dir / "steps.csv");
  metrics << metrics_header() << '\n';
  steps << steps_header() << '\n';

  ArchiveManifest manifest;
  manifest.config = to_json(cfg);
  manifest.arrival_steps = cfg.evaluation.steps_per_episode;
  manifest.drain = cfg.evaluation.drain;
  manifest.metrics_file = "metrics.csv";
  manifest.steps_file = "steps.csv";

  std::vector<SummaryRow> summary;
  for (Strategy s : strategies) {
    for (const GridPoint& g : grid_points(cfg)) {
      const auto net = build_network(cfg, g.lifetime, g.rate);
      SummaryAccumulator acc;
      for (std::uint64_t seed : cfg.seeds) {
        auto controller = make_controller(cfg, net, s, g, seed, options);
        Environment env(net, env_options(s));
        const RowKey key{s, g.lifetime, g.aggregate_rate, seed};
        std::ofstream shard;
        if (options.archive) {
          const std::string file = shard_file_name(s, g.lifetime, g.rate, seed);
          shard = open_out(archive_dir / file);
          manifest.shards.push_back({file, s, g.lifetime, g.rate, g.aggregate_rate, seed, cfg.evaluation.episodes});
        }
        for (int ep = 0; ep < cfg.evaluation.episodes; ++ep) {
          const auto e = static_cast<std::uint64_t>(ep);
          Rng arrivals = make_rng({seed, e, stream::eval_arrivals});
          Rng policy = make_rng({seed, e, stream::eval_policy});
          controller->set_rng(&policy);
          const EpisodeRun run =
              run_episode(env, *controller, arrivals, cfg.evaluation.steps_per_episode, cfg.evaluation.drain);
          controller->set_rng(nullptr);
          metrics << format_metrics_row(key, ep, run.metrics) << '\n';
          steps << format_step_rows(key, ep, run.metrics);
          if (options.archive)
            for (const StepLog& log : run.logs) shard << steplog_line(log, ep) << '\n';
          acc.add(run.metrics);
        }
        if (options.archive && !shard) throw FileError("short write to archive shard");
      }
      summary.push_back(acc.finish(s, g.lifetime, g.aggregate_rate));
    }
  }
  if (!metrics || !steps) throw FileError(fmt::format("short write under '{}'", out_dir.string()));

  std::ofstream sum = open_out(out_dir / "summary.csv");
  sum << summary_header() << '\n';
  for (const auto& r : summary) sum << format_summary_row(r) << '\n';
  std::ofstream conf = open_out(out_dir / "config.json");
  conf << to_json(cfg).dump(2) << '\n';
  if (options.archive) write_manifest(archive_dir, manifest);
  return summary;
}

namespace {

/// Keeps the header and rows of episodes before `next_episode`.
void truncate_trace(const fs::path& file, int next_episode) {
  std::ifstream is(file);
  if (!is) return;
  std::string line, kept;
  bool header = true;
  while (std::getline(is, line)) {
    if (header) {
      kept += line + '\n';
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoi(line.substr(0, comma)) < next_episode) kept += line + '\n';
  }
  is.close();
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  os << kept;
}

constexpr int kCheckpointEvery = 500;

}  // namespace

void run_training(const ExperimentConfig& cfg, Strategy s, const TrainOptions& options) {
  if (!is_learned(s)) throw ContractError(fmt::format("{} is rule-based and needs no training", to_string(s)));
  bool any = false;
  for (const GridPoint& g : grid_points(cfg)) {
    if (options.lifetime && *options.lifetime != g.lifetime) continue;
    if (options.rate && *options.rate != g.rate) continue;
    any = true;
    const auto net = build_network(cfg, g.lifetime, g.rate);
    for (std::uint64_t seed : cfg.seeds) {
      Trainer trainer(net, s, cfg.training, cfg.normalizers, seed, training_hash(cfg, g.lifetime, g.rate));
      const fs::path dir = checkpoint_dir(options.out_root / "checkpoints", s, g, seed);
      fs::create_directories(dir);
      const fs::path trace_file = dir / "trace.csv";
      if (options.resume && fs::exists(dir / "manifest.json")) {
        trainer.restore(dir);
        truncate_trace(trace_file, trainer.episode());
      } else {
        std::ofstream os(trace_file, std::ios::binary | std::ios::trunc);
        os << trace_header(trainer.roster()) << '\n';
      }
      std::ofstream trace(trace_file, std::ios::binary | std::ios::app);
      const int until = std::min(options.episodes.value_or(cfg.training.total_episodes()),
                                 cfg.training.total_episodes());
      while (trainer.episode() < until) {
        const int next = std::min(until, (trainer.episode() / kCheckpointEvery + 1) * kCheckpointEvery);
        trainer.run(next, &trace);
        trace.flush();
        trainer.save(dir);
      }
      if (trainer.episode() == 0) trainer.save(dir);
    }
  }
  if (!any) throw ConfigError("no grid point matches the requested lifetime/rate");
}

fs::path output_root(const ExperimentConfig& cfg, const std::optional<fs::path>& cli_out) {
  if (cli_out) return *cli_out;
  if (const char* env = std::getenv("DCMT_OUTPUT_ROOT"); env != nullptr && *env != '\0')
    return fs::path(env) / (cfg.name.empty() ? std::string("run") : cfg.name);
  return cfg.output.directory;
}

}  // namespace dcmt
