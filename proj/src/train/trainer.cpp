#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "dcmt/errors.hpp"
#include "dcmt/maddpg.hpp"
#include "dcmt/nn/checkpoint.hpp"

namespace dcmt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kReplay = "replay.bin";

std::vector<const nn::Mlp*> actor_pointers(const std::vector<Agent>& agents) {
  std::vector<const nn::Mlp*> out;
  for (const Agent& a : agents) out.push_back(&a.actor);
  return out;
}

json read_manifest(const fs::path& dir) {
  std::ifstream is(dir / kManifest);
  if (!is) throw FileError(fmt::format("no trainer manifest in '{}'", dir.string()));
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FileError(fmt::format("unreadable trainer manifest in '{}': {}", dir.string(), e.what()));
  }
}

void check_roster(const json& m, std::span<const AgentSpec> roster, const fs::path& dir) {
  const auto& listed = m.at("agents");
  if (listed.size() != roster.size())
    throw FileError(fmt::format("'{}' lists {} agents, the network needs {}", dir.string(), listed.size(),
                                roster.size()));
  for (std::size_t k = 0; k < roster.size(); ++k) {
    const auto& e = listed[k];
    if (e.at("name").get<std::string>() != roster[k].name ||
        e.at("observation_size").get<std::size_t>() != roster[k].observation_size ||
        e.at("action_size").get<std::size_t>() != roster[k].action_size)
      throw FileError(fmt::format("'{}': agent {} does not match this network", dir.string(), k));
  }
}

}  // namespace

Trainer::Trainer(std::shared_ptr<const Network> net, Strategy strategy, TrainSchedule schedule, Normalizers norm,
                 std::uint64_t seed, std::uint64_t config_hash)
    : net_(std::move(net)),
      strategy_(strategy),
      schedule_(std::move(schedule)),
      norm_(norm),
      seed_(seed),
      config_hash_(config_hash) {
  schedule_.validate();
  roster_ = make_roster(*net_, strategy_);
  if (roster_.empty()) throw ContractError(fmt::format("{} has nothing to train", to_string(strategy_)));
  Rng init = make_rng({seed_, stream::init});
  agents_ = make_agents(roster_, schedule_, init);
  buffer_ = ReplayBuffer(static_cast<std::size_t>(schedule_.replay_capacity_episodes) *
                         static_cast<std::size_t>(schedule_.steps_per_episode));
}

TraceRow Trainer::run_episode() {
  const int ep = episode_;
  if (ep >= schedule_.total_episodes()) throw ContractError("training schedule already complete");
  if (schedule_.improvement_episodes > 0 && ep == schedule_.training_episodes) {
    for (Agent& a : agents_) {
      a.actor_opt.reset();
      a.critic_opt.reset();
    }
  }
  const auto e = static_cast<std::uint64_t>(ep);
  Rng arrivals = make_rng({seed_, e, stream::train_arrivals});
  Rng policy = make_rng({seed_, e, stream::train_policy});
  Environment env(net_, env_options(strategy_));
  MarlController controller(net_, strategy_, roster_, actor_pointers(agents_), norm_);
  controller.set_rng(&policy);
  controller.set_epsilon(schedule_.epsilon(ep));
  RolloutResult res = rollout_episode(env, controller, arrivals, schedule_);

  TraceRow row;
  row.episode = ep;
  row.phase = ep < schedule_.training_episodes ? 0 : 1;
  row.epsilon = schedule_.epsilon(ep);
  row.mean_reward = res.reward / static_cast<double>(schedule_.steps_per_episode);
  row.reliability = res.reliability();
  row.losses.resize(agents_.size());
  for (auto& t : res.transitions) buffer_.push(std::move(t));

  const auto warm = static_cast<std::size_t>(schedule_.buffer_threshold_episodes) *
                    static_cast<std::size_t>(schedule_.steps_per_episode);
  if (buffer_.size() >= warm && schedule_.updates_per_episode > 0) {
    Rng sample = make_rng({seed_, e, stream::train_sample});
    for (int u = 0; u < schedule_.updates_per_episode; ++u) {
      const auto idx = buffer_.sample_indices(schedule_.minibatch, sample);
      const Batch batch = make_batch(buffer_, idx);
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        row.losses[i].critic = critic_update(agents_, i, batch, schedule_.gamma, schedule_.rmse_loss);
        row.losses[i].actor = actor_update(agents_, i, batch);
      }
      update_targets(agents_, schedule_.tau);
    }
    row.updated = true;
  }
  ++episode_;
  return row;
}

void Trainer::run(int until, std::ostream* trace) {
  until = std::min(until, schedule_.total_episodes());
  while (episode_ < until) {
    const TraceRow row = run_episode();
    if (trace) *trace << format_trace_row(row) << '\n';
  }
}

void Trainer::save(const fs::path& dir) const {
  fs::create_directories(dir);
  json agents = json::array();
  for (const Agent& a : agents_) {
    nn::Checkpoint ckpt;
    ckpt.config_hash = config_hash_;
    ckpt.sections.push_back({"actor", a.actor, a.actor_opt});
    ckpt.sections.push_back({"critic", a.critic, a.critic_opt});
    ckpt.sections.push_back({"target_actor", a.target_actor, std::nullopt});
    ckpt.sections.push_back({"target_critic", a.target_critic, std::nullopt});
    const std::string file = a.spec.name + ".ckpt";
    nn::save_checkpoint(dir / file, ckpt);
    agents.push_back({{"name", a.spec.name},
                      {"file", file},
                      {"observation_size", a.spec.observation_size},
                      {"action_size", a.spec.action_size}});
  }
  buffer_.save(dir / kReplay);
  json m = {{"format", "dcmt-trainer"},
            {"version", 1},
            {"strategy", std::string(to_string(strategy_))},
            {"seed", seed_},
            {"config_hash", fmt::format("{:016x}", config_hash_)},
            {"next_episode", episode_},
            {"epsilon_next", episode_ < schedule_.total_episodes() ? schedule_.epsilon(episode_) : 0.0},
            {"training_episodes", schedule_.training_episodes},
            {"improvement_episodes", schedule_.improvement_episodes},
            {"gamma", schedule_.gamma},
            {"tau", schedule_.tau},
            {"agents", agents},
            {"replay", kReplay}};
  std::ofstream os(dir / kManifest, std::ios::trunc);
  if (!os) throw FileError(fmt::format("cannot write '{}'", (dir / kManifest).string()));
  os << m.dump(2) << '\n';
}

void Trainer::restore(const fs::path& dir) {
  const json m = read_manifest(dir);
  try {
    if (m.at("strategy").get<std::string>() != to_string(strategy_))
      throw FileError(fmt::format("'{}' holds strategy {}, not {}", dir.string(), m.at("strategy").get<std::string>(),
                                  to_string(strategy_)));
    if (m.at("seed").get<std::uint64_t>() != seed_)
      throw FileError(fmt::format("'{}' was trained with another seed", dir.string()));
    if (m.at("config_hash").get<std::string>() != fmt::format("{:016x}", config_hash_))
      throw FileError(fmt::format("'{}' was trained with another configuration", dir.string()));
    check_roster(m, roster_, dir);
    for (std::size_t k = 0; k < agents_.size(); ++k) {
      const auto ckpt = nn::load_checkpoint(dir / m.at("agents")[k].at("file").get<std::string>());
      Agent& a = agents_[k];
      a.actor = ckpt.section("actor").network;
      a.critic = ckpt.section("critic").network;
      a.target_actor = ckpt.section("target_actor").network;
      a.target_critic = ckpt.section("target_critic").network;
      if (!ckpt.section("actor").adam || !ckpt.section("critic").adam)
        throw FileError(fmt::format("'{}': optimizer state missing", a.spec.name));
      a.actor_opt = *ckpt.section("actor").adam;
      a.critic_opt = *ckpt.section("critic").adam;
    }
    buffer_ = ReplayBuffer::load(dir / m.at("replay").get<std::string>());
    episode_ = m.at("next_episode").get<int>();
  } catch (const json::exception& e) {
    throw FileError(fmt::format("malformed trainer manifest in '{}': {}", dir.string(), e.what()));
  }
}

LoadedPolicy load_policy(const fs::path& dir, const Network& net, Strategy strategy) {
  const json m = read_manifest(dir);
  LoadedPolicy p;
  p.roster = make_roster(net, strategy);
  try {
    if (m.at("strategy").get<std::string>() != to_string(strategy))
      throw FileError(fmt::format("'{}' holds strategy {}, not {}", dir.string(), m.at("strategy").get<std::string>(),
                                  to_string(strategy)));
    check_roster(m, p.roster, dir);
    for (std::size_t k = 0; k < p.roster.size(); ++k)
      p.actors.push_back(
          nn::load_checkpoint(dir / m.at("agents")[k].at("file").get<std::string>()).section("actor").network);
  } catch (const json::exception& e) {
    throw FileError(fmt::format("malformed trainer manifest in '{}': {}", dir.string(), e.what()));
  }
  return p;
}

std::unique_ptr<MarlController> make_policy_controller(std::shared_ptr<const Network> net, Strategy strategy,
                                                       LoadedPolicy policy, Normalizers norm) {
  auto owned = std::make_shared<LoadedPolicy>(std::move(policy));
  std::vector<const nn::Mlp*> ptrs;
  for (const auto& a : owned->actors) ptrs.push_back(&a);
  auto c = std::make_unique<MarlController>(std::move(net), strategy, owned->roster, std::move(ptrs), norm);
  c->hold(owned);
  return c;
}

std::unique_ptr<MarlController> make_untrained_controller(std::shared_ptr<const Network> net, Strategy strategy,
                                                          const TrainSchedule& schedule, Normalizers norm,
                                                          std::uint64_t seed) {
  LoadedPolicy p;
  p.roster = make_roster(*net, strategy);
  Rng init = make_rng({seed, stream::init});
  for (Agent& a : make_agents(p.roster, schedule, init)) p.actors.push_back(std::move(a.actor));
  return make_policy_controller(std::move(net), strategy, std::move(p), norm);
}

}  // namespace dcmt
