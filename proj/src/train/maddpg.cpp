#include "dcmt/maddpg.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt {

using Eigen::Index;
using Eigen::MatrixXd;

double TrainSchedule::epsilon(int episode) const {
  const int k = (improvement_episodes > 0 && episode >= training_episodes) ? episode - training_episodes : episode;
  return std::max(epsilon_floor, epsilon_initial * std::pow(epsilon_decay, k));
}

void TrainSchedule::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("training: " + m); };
  if (training_episodes < 0 || improvement_episodes < 0) fail("episode counts must be >= 0");
  if (steps_per_episode <= 0) fail("steps_per_episode must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (buffer_threshold_episodes <= 0) fail("buffer_threshold_episodes must be positive");
  if (minibatch == 0) fail("minibatch must be positive");
  if (updates_per_episode < 0) fail("updates_per_episode must be >= 0");
  if (epsilon_initial < 0.0 || epsilon_initial > 1.0) fail("epsilon_initial must lie in [0,1]");
  if (epsilon_floor < 0.0 || epsilon_floor > 1.0) fail("epsilon_floor must lie in [0,1]");
  if (!(epsilon_decay > 0.0) || epsilon_decay > 1.0) fail("epsilon_decay must lie in (0,1]");
  if (gamma < 0.0 || gamma > 1.0) fail("gamma must lie in [0,1]");
  if (!(tau > 0.0) || tau > 1.0) fail("tau must lie in (0,1]");
  if (replay_capacity_episodes < buffer_threshold_episodes)
    fail("replay_capacity_episodes must be at least buffer_threshold_episodes");
  if (hidden.empty()) fail("hidden must list at least one layer");
  for (auto h : hidden)
    if (h == 0) fail("hidden layer sizes must be positive");
  if (!std::isfinite(reward_scale)) fail("reward_scale must be finite");
}

std::vector<Agent> make_agents(std::span<const AgentSpec> roster, const TrainSchedule& schedule, Rng& rng) {
  std::size_t joint = 0;
  for (const AgentSpec& a : roster) joint += a.observation_size + a.action_size;
  const nn::AdamConfig adam{schedule.learning_rate};
  std::vector<Agent> agents;
  for (const AgentSpec& spec : roster) {
    std::vector<std::size_t> actor_sizes{spec.observation_size};
    std::vector<std::size_t> critic_sizes{joint};
    for (auto h : schedule.hidden) {
      actor_sizes.push_back(h);
      critic_sizes.push_back(h);
    }
    actor_sizes.push_back(spec.action_size);
    critic_sizes.push_back(1);
    Agent a;
    a.spec = spec;
    a.actor = nn::Mlp(actor_sizes, nn::Activation::sigmoid, rng);
    a.critic = nn::Mlp(critic_sizes, nn::Activation::identity, rng);
    a.target_actor = a.actor;
    a.target_critic = a.critic;
    a.actor_opt = nn::AdamState(a.actor, adam);
    a.critic_opt = nn::AdamState(a.critic, adam);
    agents.push_back(std::move(a));
  }
  return agents;
}

Batch make_batch(const ReplayBuffer& buffer, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ContractError("make_batch: empty index list");
  const Transition& first = buffer.at(indices[0]);
  const auto n = static_cast<Index>(indices.size());
  Batch b;
  b.state.resize(static_cast<Index>(first.state.size()), n);
  b.action.resize(static_cast<Index>(first.action.size()), n);
  b.next_state.resize(static_cast<Index>(first.next_state.size()), n);
  b.reward.resize(n);
  b.done.resize(n);
  for (Index k = 0; k < n; ++k) {
    const Transition& t = buffer.at(indices[static_cast<std::size_t>(k)]);
    if (static_cast<Index>(t.state.size()) != b.state.rows() || static_cast<Index>(t.action.size()) != b.action.rows() ||
        static_cast<Index>(t.next_state.size()) != b.next_state.rows())
      throw ContractError("make_batch: transitions of different shapes");
    b.state.col(k) = Eigen::Map<const Eigen::VectorXd>(t.state.data(), b.state.rows());
    b.action.col(k) = Eigen::Map<const Eigen::VectorXd>(t.action.data(), b.action.rows());
    b.next_state.col(k) = Eigen::Map<const Eigen::VectorXd>(t.next_state.data(), b.next_state.rows());
    b.reward(k) = t.reward;
    b.done(k) = t.done ? 1.0 : 0.0;
  }
  return b;
}

namespace {

struct Slices {
  std::vector<std::size_t> obs;
  std::vector<std::size_t> act;
};

Slices slices_of(const std::vector<Agent>& agents) {
  Slices s{{0}, {0}};
  for (const Agent& a : agents) {
    s.obs.push_back(s.obs.back() + a.spec.observation_size);
    s.act.push_back(s.act.back() + a.spec.action_size);
  }
  return s;
}

MatrixXd stack(const MatrixXd& top, const MatrixXd& bottom) {
  MatrixXd x(top.rows() + bottom.rows(), top.cols());
  x << top, bottom;
  return x;
}

void check_index(const std::vector<Agent>& agents, std::size_t i) {
  if (i >= agents.size()) throw ContractError(fmt::format("agent index {} out of {}", i, agents.size()));
}

}  // namespace

Eigen::RowVectorXd critic_targets(const std::vector<Agent>& agents, std::size_t i, const Batch& batch, double gamma) {
  check_index(agents, i);
  const Slices sl = slices_of(agents);
  MatrixXd next_action(static_cast<Index>(sl.act.back()), batch.next_state.cols());
  for (std::size_t j = 0; j < agents.size(); ++j) {
    const auto rows = static_cast<Index>(agents[j].spec.observation_size);
    next_action.middleRows(static_cast<Index>(sl.act[j]), static_cast<Index>(agents[j].spec.action_size)) =
        agents[j].target_actor.forward(MatrixXd(batch.next_state.middleRows(static_cast<Index>(sl.obs[j]), rows)));
  }
  const MatrixXd q_next = agents[i].target_critic.forward(stack(batch.next_state, next_action));
  Eigen::RowVectorXd y(batch.reward.size());
  for (Index k = 0; k < y.size(); ++k) y(k) = batch.reward(k) + gamma * (1.0 - batch.done(k)) * q_next(0, k);
  return y;
}

double critic_update(std::vector<Agent>& agents, std::size_t i, const Batch& batch, double gamma, bool rmse) {
  const Eigen::RowVectorXd y = critic_targets(agents, i, batch, gamma);
  Agent& a = agents[i];
  nn::Tape tape;
  const MatrixXd q = a.critic.forward(stack(batch.state, batch.action), tape);
  const nn::LossResult loss = rmse ? nn::rmse_loss(q, y) : nn::mse_loss(q, y);
  if (!std::isfinite(loss.value))
    throw NumericError(fmt::format("critic of '{}': non-finite loss {}", a.spec.name, loss.value));
  adam_step(a.critic, a.critic.backward(tape, loss.gradient), a.critic_opt);
  return loss.value;
}

double actor_update(std::vector<Agent>& agents, std::size_t i, const Batch& batch) {
  check_index(agents, i);
  const Slices sl = slices_of(agents);
  Agent& a = agents[i];
  const auto obs_rows = static_cast<Index>(a.spec.observation_size);
  const auto act_rows = static_cast<Index>(a.spec.action_size);
  const auto act_off = static_cast<Index>(sl.act[i]);

  nn::Tape actor_tape;
  const MatrixXd own = a.actor.forward(MatrixXd(batch.state.middleRows(static_cast<Index>(sl.obs[i]), obs_rows)),
                                       actor_tape);
  MatrixXd joint_action = batch.action;
  joint_action.middleRows(act_off, act_rows) = own;

  nn::Tape critic_tape;
  const MatrixXd q = a.critic.forward(stack(batch.state, joint_action), critic_tape);
  const double n = static_cast<double>(q.cols());
  // Ascent on mean Q is descent on -mean Q.
  const MatrixXd upstream = MatrixXd::Constant(1, q.cols(), -1.0 / n);
  const nn::Gradients through_critic = a.critic.backward(critic_tape, upstream);
  const MatrixXd d_action = through_critic.input.middleRows(batch.state.rows() + act_off, act_rows);
  const nn::Gradients g = a.actor.backward(actor_tape, d_action);
  for (const auto& l : g.layers)
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw NumericError(fmt::format("actor of '{}': non-finite policy gradient", a.spec.name));
  adam_step(a.actor, g, a.actor_opt);
  return q.mean();
}

void update_targets(std::vector<Agent>& agents, double tau) {
  for (Agent& a : agents) {
    nn::update_target(a.target_actor, a.actor, nn::TargetMode::soft, tau);
    nn::update_target(a.target_critic, a.critic, nn::TargetMode::soft, tau);
  }
}

double RolloutResult::reliability() const {
  return arrivals == 0 ? 1.0 : static_cast<double>(deliveries) / static_cast<double>(arrivals);
}

double slot_reward(const StepLog& log, RewardKind kind) {
  double r = static_cast<double>(log.total_deliveries());
  if (kind == RewardKind::timely_minus_expired)
    r -= static_cast<double>(log.total_drops() + log.total_expired(ExpiryCause::lifetime) +
                             log.total_expired(ExpiryCause::effective_lifetime));
  return r;
}

namespace {

std::vector<double> concat(const std::vector<std::vector<double>>& parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

RolloutResult rollout_episode(Environment& env, MarlController& controller, Rng& arrivals_rng,
                              const TrainSchedule& schedule) {
  env.reset();
  controller.reset();
  const Network& net = env.network();
  RolloutResult out;
  out.transitions.reserve(static_cast<std::size_t>(schedule.steps_per_episode));
  for (int t = 0; t < schedule.steps_per_episode; ++t) {
    const auto arrivals = sample_arrivals(net.commodities(), arrivals_rng);
    const Assignment assignment = controller.route(env.state(), arrivals);
    const StepLog log = env.step(arrivals, assignment, [&](const QueueState& q) { return controller.schedule(q); });
    const double r = slot_reward(log, schedule.reward);
    out.reward += r;
    out.arrivals += log.total_arrivals();
    out.deliveries += log.total_deliveries();

    std::vector<double> state = concat(controller.last_observations());
    if (!out.transitions.empty()) out.transitions.back().next_state = state;
    out.transitions.push_back(Transition{std::move(state), concat(controller.last_actions()),
                                         schedule.reward_scale * r, {}, false});
  }
  if (!out.transitions.empty()) {
    const std::vector<Count> none(net.num_commodities(), 0);
    out.transitions.back().next_state = controller.joint_observation(env.state(), none);
    out.transitions.back().done = true;
  }
  return out;
}

std::string trace_header(std::span<const AgentSpec> roster) {
  std::string h = "episode,phase,epsilon,mean_reward,reliability,updated";
  for (const AgentSpec& a : roster) h += fmt::format(",{0}_critic_loss,{0}_actor_q", a.name);
  return h;
}

std::string format_trace_row(const TraceRow& row) {
  std::string s = fmt::format("{},{},{:.10g},{:.10g},{:.10g},{}", row.episode, row.phase == 0 ? "train" : "improve",
                              row.epsilon, row.mean_reward, row.reliability, row.updated ? 1 : 0);
  for (const AgentLosses& l : row.losses) {
    if (row.updated)
      s += fmt::format(",{:.10g},{:.10g}", l.critic, l.actor);
    else
      s += ",,";
  }
  return s;
}

}  // namespace dcmt
