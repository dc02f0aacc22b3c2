#include <cmath>
#include <numeric>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dcmt/errors.hpp"
#include "dcmt/maddpg.hpp"
#include "support.hpp"

namespace dcmt {
namespace {

Transition numbered(double r) { return Transition{{r}, {r, r}, r, {r + 1}, false}; }

TEST(Replay, EvictsOldestAtCapacity) {
  ReplayBuffer b(3);
  for (int k = 0; k < 5; ++k) b.push(numbered(k));
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b.at(0).reward, 2.0);
  EXPECT_EQ(b.at(1).reward, 3.0);
  EXPECT_EQ(b.at(2).reward, 4.0);
  EXPECT_THROW((void)b.at(3), ContractError);
}

TEST(Replay, SamplingIsUniformAndReproducible) {
  ReplayBuffer b(10);
  for (int k = 0; k < 10; ++k) b.push(numbered(k));
  Rng r1 = make_rng({51}), r2 = make_rng({51});
  EXPECT_EQ(b.sample_indices(64, r1), b.sample_indices(64, r2));
  std::vector<int> hist(10, 0);
  Rng r = make_rng({52});
  const int n = 100000;
  for (std::size_t k : b.sample_indices(n, r)) {
    ASSERT_LT(k, 10u);
    ++hist[k];
  }
  for (int h : hist) EXPECT_NEAR(h / static_cast<double>(n), 0.1, 0.006);
}

TEST(Replay, SaveLoadRoundTrip) {
  ReplayBuffer b(4);
  for (int k = 0; k < 6; ++k) b.push(numbered(k * 0.5));
  const auto dir = test::scratch("replay");
  b.save(dir / "r.bin");
  EXPECT_EQ(ReplayBuffer::load(dir / "r.bin"), b);
  {
    std::fstream f(dir / "r.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    f.put('\x7f');
  }
  EXPECT_THROW(ReplayBuffer::load(dir / "r.bin"), FileError);
}

TEST(Epsilon, DecaysPerEpisodeAndRestartsForImprovement) {
  TrainSchedule s;
  for (int k = 0; k < 200; ++k) EXPECT_DOUBLE_EQ(s.epsilon(k), std::pow(0.95, k));
  EXPECT_DOUBLE_EQ(s.epsilon(s.training_episodes), 1.0);
  EXPECT_DOUBLE_EQ(s.epsilon(s.training_episodes + 3), std::pow(0.95, 3));
  s.epsilon_floor = 0.1;
  EXPECT_DOUBLE_EQ(s.epsilon(10), std::pow(0.95, 10));
  EXPECT_DOUBLE_EQ(s.epsilon(100), 0.1);
  s.epsilon_decay = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
}

struct Fixture {
  std::shared_ptr<const Network> net;
  std::vector<AgentSpec> roster;
  std::vector<Agent> agents;
  Batch batch;
};

Fixture make_fixture(Strategy s, std::uint64_t seed, std::size_t batch_size = 16, double gamma_reward = 1.0) {
  Fixture f;
  f.net = test::triangle();
  f.roster = make_roster(*f.net, s);
  TrainSchedule sched;
  sched.hidden = {16, 8};
  Rng rng = make_rng({seed});
  f.agents = make_agents(f.roster, sched, rng);
  std::size_t obs = 0, act = 0;
  for (const auto& a : f.roster) {
    obs += a.observation_size;
    act += a.action_size;
  }
  ReplayBuffer buf(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    Transition t;
    for (std::size_t j = 0; j < obs; ++j) t.state.push_back(uniform01(rng));
    for (std::size_t j = 0; j < act; ++j) t.action.push_back(uniform01(rng));
    for (std::size_t j = 0; j < obs; ++j) t.next_state.push_back(uniform01(rng));
    t.reward = gamma_reward;
    t.done = k % 5 == 4;
    buf.push(std::move(t));
  }
  std::vector<std::size_t> idx(batch_size);
  std::iota(idx.begin(), idx.end(), 0);
  f.batch = make_batch(buf, idx);
  return f;
}

void perturb(nn::Mlp& m, double by) {
  for (auto& l : m.layers()) {
    l.weight.array() += by;
    l.bias.array() -= by;
  }
}

TEST(CriticTargets, UseOnlyTargetNetworks) {
  Fixture f = make_fixture(Strategy::marl_lt_sk, 53);
  ASSERT_GT(f.agents.size(), 1u);
  const auto y0 = critic_targets(f.agents, 0, f.batch, 0.9);
  for (Agent& a : f.agents) {
    perturb(a.actor, 0.3);
    perturb(a.critic, -0.2);
  }
  EXPECT_EQ(critic_targets(f.agents, 0, f.batch, 0.9), y0);
  perturb(f.agents[1].target_actor, 0.3);
  EXPECT_NE(critic_targets(f.agents, 0, f.batch, 0.9), y0);
}

TEST(CriticTargets, MatchHandComputedBellmanTargets) {
  Fixture f = make_fixture(Strategy::marl_lt_sk, 54);
  const auto y = critic_targets(f.agents, 1, f.batch, 0.9);
  const auto offsets = slice_offsets(f.roster, false);
  for (Eigen::Index k = 0; k < f.batch.state.cols(); ++k) {
    std::vector<double> input(f.batch.next_state.col(k).data(),
                              f.batch.next_state.col(k).data() + f.batch.next_state.rows());
    for (std::size_t j = 0; j < f.agents.size(); ++j) {
      std::vector<double> obs(input.begin() + static_cast<long>(offsets[j]), input.begin() + static_cast<long>(offsets[j + 1]));
      const Eigen::VectorXd a = f.agents[j].target_actor.forward(std::span<const double>(obs));
      input.insert(input.end(), a.data(), a.data() + a.size());
    }
    const double q = f.agents[1].target_critic.forward(std::span<const double>(input))(0);
    const double expected = f.batch.reward(k) + (f.batch.done(k) > 0.5 ? 0.0 : 0.9 * q);
    EXPECT_NEAR(y(k), expected, 1e-12);
  }
}

bool same_params(const Agent& a, const Agent& b) {
  return a.actor == b.actor && a.critic == b.critic && a.target_actor == b.target_actor &&
         a.target_critic == b.target_critic;
}

TEST(Updates, TouchOnlyTheUpdatedAgent) {
  Fixture f = make_fixture(Strategy::marl_el_sk, 55);
  ASSERT_GT(f.agents.size(), 2u);
  const auto before = f.agents;
  critic_update(f.agents, 1, f.batch, 0.99, true);
  actor_update(f.agents, 1, f.batch);
  for (std::size_t j = 0; j < f.agents.size(); ++j) {
    if (j == 1) continue;
    EXPECT_TRUE(same_params(f.agents[j], before[j])) << "agent " << j;
  }
  EXPECT_FALSE(f.agents[1].critic == before[1].critic);
  EXPECT_FALSE(f.agents[1].actor == before[1].actor);
  EXPECT_TRUE(f.agents[1].target_critic == before[1].target_critic);
}

TEST(Updates, CriticConvergesToAConstantTarget) {
  // gamma = 0 and reward 1 everywhere: Q must approach 1.
  Fixture f = make_fixture(Strategy::marl_el_lelf, 56, 64);
  double loss = 0.0;
  for (int step = 0; step < 2000; ++step) loss = critic_update(f.agents, 0, f.batch, 0.0, true);
  const Eigen::MatrixXd x = [&] {
    Eigen::MatrixXd m(f.batch.state.rows() + f.batch.action.rows(), f.batch.state.cols());
    m << f.batch.state, f.batch.action;
    return m;
  }();
  const Eigen::MatrixXd q = f.agents[0].critic.forward(x);
  EXPECT_LT((q.array() - 1.0).abs().maxCoeff(), 0.01);
  EXPECT_LT(loss, 0.01);
}

double mean_q_with_own_action(const std::vector<Agent>& agents, std::size_t i, const Batch& b,
                              const std::vector<AgentSpec>& roster) {
  const auto obs_off = slice_offsets(roster, false);
  const auto act_off = slice_offsets(roster, true);
  const auto& a = agents[i];
  const Eigen::MatrixXd own = a.actor.forward(Eigen::MatrixXd(
      b.state.middleRows(static_cast<Eigen::Index>(obs_off[i]), static_cast<Eigen::Index>(roster[i].observation_size))));
  Eigen::MatrixXd act = b.action;
  act.middleRows(static_cast<Eigen::Index>(act_off[i]), own.rows()) = own;
  Eigen::MatrixXd x(b.state.rows() + act.rows(), b.state.cols());
  x << b.state, act;
  return a.critic.forward(x).mean();
}

TEST(Updates, ActorStepFollowsFiniteDifferencePolicyGradient) {
  // Adam's first step moves each parameter by -lr * sign(gradient of the loss), so every
  // parameter with a clear finite-difference slope of mean Q must move uphill.
  for (std::uint64_t seed : {57u, 58u, 59u}) {
    Fixture f = make_fixture(Strategy::marl_lt_sk, seed);
    const std::size_t i = 1;
    const double q0 = mean_q_with_own_action(f.agents, i, f.batch, f.roster);
    auto probe = f.agents;
    const double reported = actor_update(f.agents, i, f.batch);
    EXPECT_NEAR(reported, q0, 1e-12);
    int checked = 0;
    for (std::size_t l = 0; l < probe[i].actor.layers().size(); ++l) {
      auto& w = probe[i].actor.layers()[l].weight;
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        const double keep = w.data()[k];
        w.data()[k] = keep + 1e-6;
        const double up = mean_q_with_own_action(probe, i, f.batch, f.roster);
        w.data()[k] = keep - 1e-6;
        const double down = mean_q_with_own_action(probe, i, f.batch, f.roster);
        w.data()[k] = keep;
        const double slope = (up - down) / 2e-6;
        if (std::abs(slope) < 1e-5) continue;
        const double moved = f.agents[i].actor.layers()[l].weight.data()[k] - keep;
        EXPECT_GT(moved * slope, 0.0) << "layer " << l << " entry " << k;
        ++checked;
      }
    }
    EXPECT_GT(checked, 20);
    EXPECT_GT(mean_q_with_own_action(f.agents, i, f.batch, f.roster), q0);
  }
}

TEST(Rollout, ActorsSeeOnlyTheirOwnObservation) {
  const auto net = test::triangle();
  for (Strategy s : {Strategy::marl_lt_dsk, Strategy::marl_el_smax}) {
    auto ctrl = make_untrained_controller(net, s, TrainSchedule{}, Normalizers{}, 5);
    Environment env(net, env_options(s));
    Rng rng = make_rng({60});
    ctrl->set_rng(&rng);
    ctrl->set_epsilon(0.0);
    for (int t = 0; t < 10; ++t) {
      const std::vector<Count> arrivals{poisson(rng, 8.0)};
      const QueueState before = env.state();
      const Assignment a = ctrl->route(env.state(), arrivals);
      std::vector<std::vector<double>> sched_obs;
      env.step(arrivals, a, [&](const QueueState& q) {
        for (std::size_t k = 1; k < ctrl->roster().size(); ++k)
          sched_obs.push_back(encode_scheduler_obs(ctrl->roster()[k].layout, q, Normalizers{}));
        return ctrl->schedule(q);
      });
      const auto& obs = ctrl->last_observations();
      ASSERT_EQ(obs.size(), ctrl->roster().size());
      EXPECT_EQ(obs[0], encode_router_obs(*net, arrivals, before, Normalizers{}));
      for (std::size_t k = 1; k < obs.size(); ++k) {
        EXPECT_EQ(obs[k], sched_obs[k - 1]);
        EXPECT_EQ(obs[k].size(), ctrl->roster()[k].observation_size);
        EXPECT_EQ(ctrl->last_actions()[k].size(), ctrl->roster()[k].action_size);
      }
    }
  }
}

TEST(Rollout, TransitionsChainAndEndWithDone) {
  const auto net = test::triangle();
  TrainSchedule sched;
  sched.steps_per_episode = 12;
  sched.reward_scale = 0.5;
  auto ctrl = make_untrained_controller(net, Strategy::marl_el_sk, sched, Normalizers{}, 9);
  Rng policy = make_rng({61}), arrivals = make_rng({62});
  ctrl->set_rng(&policy);
  ctrl->set_epsilon(0.3);
  Environment env(net, env_options(Strategy::marl_el_sk));
  const RolloutResult r = rollout_episode(env, *ctrl, arrivals, sched);
  ASSERT_EQ(r.transitions.size(), 12u);
  double scaled = 0.0;
  for (std::size_t k = 0; k < r.transitions.size(); ++k) {
    const auto& t = r.transitions[k];
    EXPECT_EQ(t.done, k + 1 == r.transitions.size());
    if (k + 1 < r.transitions.size()) EXPECT_EQ(t.next_state, r.transitions[k + 1].state);
    scaled += t.reward;
  }
  EXPECT_DOUBLE_EQ(scaled, 0.5 * r.reward);
  EXPECT_DOUBLE_EQ(r.reward, static_cast<double>(r.deliveries));
}

TrainSchedule small_schedule() {
  TrainSchedule s;
  s.training_episodes = 14;
  s.improvement_episodes = 6;
  s.steps_per_episode = 10;
  s.buffer_threshold_episodes = 3;
  s.minibatch = 32;
  s.updates_per_episode = 2;
  s.replay_capacity_episodes = 8;
  s.hidden = {16, 8};
  return s;
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  const auto net = test::triangle();
  for (Strategy s : {Strategy::marl_el_lelf, Strategy::marl_lt_dsk}) {
    Trainer straight(net, s, small_schedule(), Normalizers{}, 77, 0xabc);
    std::ostringstream trace_a;
    straight.run(20, &trace_a);

    const auto dir = test::scratch(std::string("resume_") + std::string(to_string(s)));
    std::ostringstream trace_b;
    {
      Trainer first(net, s, small_schedule(), Normalizers{}, 77, 0xabc);
      first.run(9, &trace_b);
      first.save(dir);
    }
    Trainer second(net, s, small_schedule(), Normalizers{}, 77, 0xabc);
    second.restore(dir);
    EXPECT_EQ(second.episode(), 9);
    second.run(20, &trace_b);

    EXPECT_EQ(trace_a.str(), trace_b.str());
    EXPECT_EQ(second.buffer(), straight.buffer());
    ASSERT_EQ(second.agents().size(), straight.agents().size());
    for (std::size_t k = 0; k < straight.agents().size(); ++k) {
      EXPECT_TRUE(same_params(second.agents()[k], straight.agents()[k]));
      EXPECT_EQ(second.agents()[k].actor_opt.step, straight.agents()[k].actor_opt.step);
    }
  }
}

TEST(Trainer, RestoreRejectsForeignCheckpoints) {
  const auto net = test::triangle();
  const auto dir = test::scratch("foreign");
  Trainer t(net, Strategy::marl_el_lelf, small_schedule(), Normalizers{}, 1, 0x1);
  t.run(2);
  t.save(dir);
  Trainer other_seed(net, Strategy::marl_el_lelf, small_schedule(), Normalizers{}, 2, 0x1);
  EXPECT_THROW(other_seed.restore(dir), FileError);
  Trainer other_hash(net, Strategy::marl_el_lelf, small_schedule(), Normalizers{}, 1, 0x2);
  EXPECT_THROW(other_hash.restore(dir), FileError);
  Trainer other_strategy(net, Strategy::marl_el_sk, small_schedule(), Normalizers{}, 1, 0x1);
  EXPECT_THROW(other_strategy.restore(dir), FileError);
  EXPECT_THROW(load_policy(dir, *net, Strategy::marl_el_sk), FileError);
  EXPECT_EQ(load_policy(dir, *net, Strategy::marl_el_lelf).actors.at(0), t.agents()[0].actor);
}

TEST(Trainer, OptimizerRestartsAtThePhaseBoundary) {
  const auto net = test::triangle();
  Trainer t(net, Strategy::marl_el_lelf, small_schedule(), Normalizers{}, 3);
  t.run(14);
  const auto steps_before = t.agents()[0].actor_opt.step;
  EXPECT_EQ(steps_before, (14 - 2) * 2);  // updates start once 3 episodes are buffered
  const TraceRow row = t.run_episode();
  EXPECT_EQ(row.phase, 1);
  EXPECT_DOUBLE_EQ(row.epsilon, 1.0);
  EXPECT_EQ(t.agents()[0].actor_opt.step, 2);
}

TEST(Trainer, UntrainedControllerUsesEpisodeZeroActors) {
  const auto net = test::triangle();
  const Trainer t(net, Strategy::marl_el_smax, small_schedule(), Normalizers{}, 12);
  auto c = make_untrained_controller(net, Strategy::marl_el_smax, small_schedule(), Normalizers{}, 12);
  c->set_epsilon(0.0);
  Rng rng = make_rng({63});
  c->set_rng(&rng);
  Environment env(net, env_options(Strategy::marl_el_smax));
  for (int step = 0; step < 5; ++step) {
    const std::vector<Count> arrivals{poisson(rng, 8.0)};
    const Assignment a = c->route(env.state(), arrivals);
    env.step(arrivals, a, [&](const QueueState& q) { return c->schedule(q); });
    for (std::size_t k = 0; k < t.agents().size(); ++k) {
      const Eigen::VectorXd y = t.agents()[k].actor.forward(std::span<const double>(c->last_observations()[k]));
      EXPECT_EQ(std::vector<double>(y.data(), y.data() + y.size()), c->last_actions()[k]);
    }
  }
}

}  // namespace
}  // namespace dcmt
