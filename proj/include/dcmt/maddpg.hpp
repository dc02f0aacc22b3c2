#ifndef DCMT_MADDPG_HPP
#define DCMT_MADDPG_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dcmt/controller.hpp"
#include "dcmt/environment.hpp"
#include "dcmt/nn/mlp.hpp"
#include "dcmt/rng.hpp"
#include "dcmt/strategy.hpp"

namespace dcmt {

/// Joint experience of all agents for one slot.
struct Transition {
  std::vector<double> state;  // concatenated agent observations (roster order)
  std::vector<double> action;  // concatenated raw actions
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
  bool operator==(const Transition&) const = default;
};

/// Ring buffer with FIFO eviction and uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

  void push(Transition t);
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  /// Logical index: 0 is the oldest stored transition.
  [[nodiscard]] const Transition& at(std::size_t k) const;
  [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

  void save(const std::filesystem::path& file) const;
  static ReplayBuffer load(const std::filesystem::path& file);

  bool operator==(const ReplayBuffer&) const = default;

 private:
  std::size_t capacity_ = 0;
  std::size_t head_ = 0;  // slot overwritten next once full
  std::vector<Transition> data_;
};

enum class RewardKind { timely, timely_minus_expired };

struct TrainSchedule {
  int training_episodes = 10000;
  int improvement_episodes = 4000;
  int steps_per_episode = 50;
  double learning_rate = 1e-3;
  int buffer_threshold_episodes = 500;
  std::size_t minibatch = 25000;  // transitions per update
  int updates_per_episode = 1;
  double epsilon_initial = 1.0;
  double epsilon_decay = 0.95;
  double epsilon_floor = 0.0;
  double gamma = 0.99;
  double tau = 0.01;
  int replay_capacity_episodes = 5000;
  std::vector<std::size_t> hidden{128, 64};
  bool rmse_loss = true;
  RewardKind reward = RewardKind::timely;
  double reward_scale = 1.0;

  [[nodiscard]] int total_episodes() const { return training_episodes + improvement_episodes; }
  /// Exploration rate for a global episode index; restarts in the improvement phase.
  [[nodiscard]] double epsilon(int episode) const;
  /// Throws ConfigError on non-positive sizes or out-of-range rates.
  void validate() const;
};

struct Agent {
  AgentSpec spec;
  nn::Mlp actor;
  nn::Mlp critic;  // input: joint state ++ joint action
  nn::Mlp target_actor;
  nn::Mlp target_critic;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
};

/// Builds actors (sigmoid outputs) and critics (linear output) for every roster entry.
std::vector<Agent> make_agents(std::span<const AgentSpec> roster, const TrainSchedule& schedule, Rng& rng);

/// Column-stacked views of a minibatch.
struct Batch {
  Eigen::MatrixXd state;
  Eigen::MatrixXd action;
  Eigen::VectorXd reward;
  Eigen::MatrixXd next_state;
  Eigen::VectorXd done;
};

Batch make_batch(const ReplayBuffer& buffer, std::span<const std::size_t> indices);

/// One Adam step on agent i's critic towards y = r + gamma * (1 - done) * Q'_i(s', mu'(s')).
/// Returns the loss before the step.
double critic_update(std::vector<Agent>& agents, std::size_t i, const Batch& batch, double gamma, bool rmse);

/// Critic targets alone (no parameter change); exposed for tests.
Eigen::RowVectorXd critic_targets(const std::vector<Agent>& agents, std::size_t i, const Batch& batch, double gamma);

/// One Adam ascent step on agent i's actor through critic i's action slot i; other
/// agents' actions come from the batch. Returns mean Q before the step.
double actor_update(std::vector<Agent>& agents, std::size_t i, const Batch& batch);

/// Soft target update of every actor and critic.
void update_targets(std::vector<Agent>& agents, double tau);

struct RolloutResult {
  std::vector<Transition> transitions;
  double reward = 0.0;  // unscaled, summed over steps
  Count arrivals = 0;
  Count deliveries = 0;
  [[nodiscard]] double reliability() const;
};

/// Runs one training episode (no drain) and collects its transitions.
RolloutResult rollout_episode(Environment& env, MarlController& controller, Rng& arrivals_rng,
                              const TrainSchedule& schedule);

/// Per-step reward of a slot, before scaling.
double slot_reward(const StepLog& log, RewardKind kind);

struct AgentLosses {
  double critic = 0.0;
  double actor = 0.0;
};

struct TraceRow {
  int episode = 0;
  int phase = 0;  // 0 training, 1 improvement
  double epsilon = 0.0;
  double mean_reward = 0.0;
  double reliability = 0.0;
  bool updated = false;
  std::vector<AgentLosses> losses;
};

std::string trace_header(std::span<const AgentSpec> roster);
std::string format_trace_row(const TraceRow& row);

/// Two-phase MADDPG driver. All random streams are derived from (seed, episode),
/// so a run restored from a checkpoint continues exactly as the original would.
class Trainer {
 public:
  Trainer(std::shared_ptr<const Network> net, Strategy strategy, TrainSchedule schedule, Normalizers norm,
          std::uint64_t seed, std::uint64_t config_hash = 0);

  [[nodiscard]] const std::vector<Agent>& agents() const { return agents_; }
  [[nodiscard]] std::vector<Agent>& agents() { return agents_; }
  [[nodiscard]] const ReplayBuffer& buffer() const { return buffer_; }
  [[nodiscard]] int episode() const { return episode_; }
  [[nodiscard]] const TrainSchedule& schedule() const { return schedule_; }
  [[nodiscard]] Strategy strategy() const { return strategy_; }
  [[nodiscard]] const std::vector<AgentSpec>& roster() const { return roster_; }

  /// Rollout plus (once the buffer is warm) one round of updates.
  TraceRow run_episode();
  /// Runs until `until` episodes have completed (clamped to the schedule); writes trace rows if given.
  void run(int until, std::ostream* trace = nullptr);

  /// Writes one network file per agent, the replay buffer and a JSON manifest.
  void save(const std::filesystem::path& dir) const;
  /// Restores a directory written by save(); the network, strategy and seed must match.
  void restore(const std::filesystem::path& dir);

 private:
  std::shared_ptr<const Network> net_;
  Strategy strategy_;
  TrainSchedule schedule_;
  Normalizers norm_;
  std::uint64_t seed_;
  std::uint64_t config_hash_;
  std::vector<AgentSpec> roster_;
  std::vector<Agent> agents_;
  ReplayBuffer buffer_;
  int episode_ = 0;
};

/// Actors read back from a trainer checkpoint directory.
struct LoadedPolicy {
  std::vector<AgentSpec> roster;
  std::vector<nn::Mlp> actors;
};

LoadedPolicy load_policy(const std::filesystem::path& dir, const Network& net, Strategy strategy);

/// Controller over freshly initialised actors, identical to a trainer's episode-0 actors for `seed`.
std::unique_ptr<MarlController> make_untrained_controller(std::shared_ptr<const Network> net, Strategy strategy,
                                                          const TrainSchedule& schedule, Normalizers norm,
                                                          std::uint64_t seed);
std::unique_ptr<MarlController> make_policy_controller(std::shared_ptr<const Network> net, Strategy strategy,
                                                       LoadedPolicy policy, Normalizers norm);

/// Stream tags mixed into make_rng seeds.
namespace stream {
inline constexpr std::uint64_t init = 0x1001;
inline constexpr std::uint64_t train_arrivals = 0x2001;
inline constexpr std::uint64_t train_policy = 0x2002;
inline constexpr std::uint64_t train_sample = 0x2003;
inline constexpr std::uint64_t eval_arrivals = 0x3001;
inline constexpr std::uint64_t eval_policy = 0x3002;
}  // namespace stream

}  // namespace dcmt

#endif  // DCMT_MADDPG_HPP
