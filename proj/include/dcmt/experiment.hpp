#ifndef DCMT_EXPERIMENT_HPP
#define DCMT_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dcmt/config.hpp"
#include "dcmt/controller.hpp"
#include "dcmt/environment.hpp"
#include "dcmt/metrics.hpp"

namespace dcmt {

struct GridPoint {
  Lifetime lifetime = 0;
  double rate = 0.0;  // per commodity
  double aggregate_rate = 0.0;
};

/// Lifetimes outer, rates inner, both in config order.
std::vector<GridPoint> grid_points(const ExperimentConfig& cfg);

struct EpisodeRun {
  std::vector<StepLog> logs;
  EpisodeMetrics metrics;
};

/// `steps` slots with Poisson arrivals, then (if `drain`) zero-arrival slots until the network is empty.
EpisodeRun run_episode(Environment& env, Controller& controller, Rng& arrivals_rng, int steps, bool drain);

/// Where learned strategies get their actors during evaluation.
enum class PolicyMode {
  checkpoint,  // trained actors from the checkpoint root (missing files are an error)
  untrained,   // freshly initialised actors for the seed
  random,      // uniform random raw actions (epsilon = 1)
};

struct RunOptions {
  PolicyMode mode = PolicyMode::checkpoint;
  std::filesystem::path checkpoint_root;
  bool archive = true;
};

std::filesystem::path checkpoint_dir(const std::filesystem::path& root, Strategy s, const GridPoint& g,
                                     std::uint64_t seed);

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg, std::shared_ptr<const Network> net,
                                            Strategy s, const GridPoint& g, std::uint64_t seed,
                                            const RunOptions& options);

/// Evaluates every strategy at every grid point and seed with a shared arrival stream
/// per (seed, episode), writing metrics.csv, steps.csv, summary.csv, config.json and
/// (if enabled) archive/ under `out_dir`.
std::vector<SummaryRow> run_comparison(const ExperimentConfig& cfg, std::span<const Strategy> strategies,
                                       const RunOptions& options, const std::filesystem::path& out_dir);

struct TrainOptions {
  std::filesystem::path out_root;  // checkpoints go under out_root/checkpoints
  std::optional<Lifetime> lifetime;
  std::optional<double> rate;
  std::optional<int> episodes;  // stop after this many episodes in total
  bool resume = false;
};

/// Trains `s` at the selected grid points for every configured seed.
void run_training(const ExperimentConfig& cfg, Strategy s, const TrainOptions& options);

/// --out if given, else $DCMT_OUTPUT_ROOT/<name> if set, else the config's output.directory.
std::filesystem::path output_root(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& cli_out);

}  // namespace dcmt

#endif  // DCMT_EXPERIMENT_HPP
