#ifndef DCMT_CONTROLLER_HPP
#define DCMT_CONTROLLER_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dcmt/agents.hpp"
#include "dcmt/environment.hpp"
#include "dcmt/network.hpp"
#include "dcmt/nn/mlp.hpp"
#include "dcmt/policies.hpp"
#include "dcmt/rng.hpp"
#include "dcmt/strategy.hpp"

namespace dcmt {

/// Router + schedulers for one strategy, driven slot by slot.
class Controller {
 public:
  virtual ~Controller() = default;
  /// Called at the start of every episode.
  virtual void reset() = 0;
  /// Called before admission with this slot's arrivals.
  virtual Assignment route(const QueueState& q, std::span<const Count> arrivals) = 0;
  /// Called after admission.
  virtual SlotDecision schedule(const QueueState& q) = 0;
  /// Random source for exploration and stochastic schedulers; ignored by deterministic controllers.
  virtual void set_rng(Rng*) {}
};

EnvOptions env_options(Strategy s);

/// Minimum-weight router with LELF on every interface.
class MwrLelfController final : public Controller {
 public:
  explicit MwrLelfController(std::shared_ptr<const Network> net) : net_(std::move(net)) {}
  void reset() override {}
  Assignment route(const QueueState& q, std::span<const Count> arrivals) override;
  SlotDecision schedule(const QueueState& q) override;

 private:
  std::shared_ptr<const Network> net_;
};

/// Virtual-queue min-cost router with FIFO service on every interface.
class UmwFifoController final : public Controller {
 public:
  explicit UmwFifoController(std::shared_ptr<const Network> net) : net_(std::move(net)), router_(*net_) {}
  void reset() override { router_.reset(); }
  Assignment route(const QueueState& q, std::span<const Count> arrivals) override;
  SlotDecision schedule(const QueueState& q) override;
  [[nodiscard]] const UmwRouter& router() const { return router_; }

 private:
  std::shared_ptr<const Network> net_;
  UmwRouter router_;
};

enum class AgentRole { router, scheduler };

/// One learning agent: the router, or the scheduler of one interface.
struct AgentSpec {
  AgentRole role = AgentRole::router;
  std::string name;
  SchedulerLayout layout;  // schedulers only
  std::size_t observation_size = 0;
  std::size_t action_size = 0;
};

/// Router first, then one scheduler per interface with a nonempty index space
/// (edge order) when the strategy learns its schedulers.
std::vector<AgentSpec> make_roster(const Network& net, Strategy s);

/// Offsets of each agent's slice inside a joint vector.
std::vector<std::size_t> slice_offsets(std::span<const AgentSpec> roster, bool actions);

/// Learned policies: each actor sees only its own observation. With probability
/// epsilon an agent replaces its output by a uniform random raw action.
class MarlController final : public Controller {
 public:
  MarlController(std::shared_ptr<const Network> net, Strategy s, std::vector<AgentSpec> roster,
                 std::vector<const nn::Mlp*> actors, Normalizers norm);

  void reset() override;
  Assignment route(const QueueState& q, std::span<const Count> arrivals) override;
  SlotDecision schedule(const QueueState& q) override;

  void set_epsilon(double e) { epsilon_ = e; }
  [[nodiscard]] double epsilon() const { return epsilon_; }
  void set_rng(Rng* rng) override { rng_ = rng; }
  /// Keeps whatever owns the actors alive as long as the controller.
  void hold(std::shared_ptr<const void> owner) { owner_ = std::move(owner); }

  [[nodiscard]] const std::vector<AgentSpec>& roster() const { return roster_; }
  /// Observations and raw actions of the last routed + scheduled slot, per agent.
  [[nodiscard]] const std::vector<std::vector<double>>& last_observations() const { return obs_; }
  [[nodiscard]] const std::vector<std::vector<double>>& last_actions() const { return act_; }

  /// Joint observation of a state without acting on it (used for terminal next-states).
  std::vector<double> joint_observation(const QueueState& q, std::span<const Count> arrivals) const;

 private:
  std::vector<double> act(std::size_t agent, const std::vector<double>& obs);

  std::shared_ptr<const Network> net_;
  Strategy strategy_;
  StrategyTraits traits_;
  std::vector<AgentSpec> roster_;
  std::vector<const nn::Mlp*> actors_;
  Normalizers norm_;
  double epsilon_ = 0.0;
  Rng* rng_ = nullptr;
  std::shared_ptr<const void> owner_;
  std::vector<std::vector<double>> obs_;
  std::vector<std::vector<double>> act_;
};

/// Rule-based controller for mwr_el_lelf / umw_fifo. Throws ContractError for learned strategies.
std::unique_ptr<Controller> make_rule_controller(std::shared_ptr<const Network> net, Strategy s);

}  // namespace dcmt

#endif  // DCMT_CONTROLLER_HPP
