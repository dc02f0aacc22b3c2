#include "dcmt/controller.hpp"

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt {

EnvOptions env_options(Strategy s) {
  const StrategyTraits t = traits(s);
  return EnvOptions{t.effective_expiry, t.fifo};
}

Assignment MwrLelfController::route(const QueueState& q, std::span<const Count> arrivals) {
  return mwr_route(*net_, q, arrivals);
}

SlotDecision MwrLelfController::schedule(const QueueState& q) {
  SlotDecision d;
  for (std::size_t k = 0; k < net_->topology().num_edges(); ++k) {
    const EdgeId e(k);
    auto flows = lelf_schedule(*net_, q, e, net_->topology().capacity(e));
    d.flows.insert(d.flows.end(), flows.begin(), flows.end());
  }
  return d;
}

Assignment UmwFifoController::route(const QueueState&, std::span<const Count> arrivals) {
  return router_.route(*net_, arrivals);
}

SlotDecision UmwFifoController::schedule(const QueueState& q) {
  SlotDecision d;
  for (std::size_t k = 0; k < net_->topology().num_edges(); ++k) {
    const EdgeId e(k);
    auto served = fifo_schedule(*net_, e, q.fifo(e), net_->topology().capacity(e));
    d.flows.insert(d.flows.end(), served.flows.begin(), served.flows.end());
  }
  return d;
}

std::unique_ptr<Controller> make_rule_controller(std::shared_ptr<const Network> net, Strategy s) {
  switch (s) {
    case Strategy::mwr_el_lelf: return std::make_unique<MwrLelfController>(std::move(net));
    case Strategy::umw_fifo: return std::make_unique<UmwFifoController>(std::move(net));
    default: break;
  }
  throw ContractError(fmt::format("{} needs trained actors", to_string(s)));
}

std::vector<AgentSpec> make_roster(const Network& net, Strategy s) {
  const StrategyTraits t = traits(s);
  std::vector<AgentSpec> roster;
  if (!t.learned_router) return roster;
  AgentSpec router;
  router.role = AgentRole::router;
  router.name = "router";
  router.observation_size = router_observation_size(net);
  router.action_size = router_action_size(net);
  roster.push_back(std::move(router));
  if (!t.learned_schedulers) return roster;
  const auto& g = net.topology();
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    AgentSpec a;
    a.role = AgentRole::scheduler;
    a.layout = make_scheduler_layout(net, EdgeId(k), s);
    if (a.layout.slots.empty()) continue;
    const Edge& e = g.edge(EdgeId(k));
    a.name = fmt::format("sched_{}_{}", g.name(e.from), g.name(e.to));
    a.observation_size = a.layout.observation_size();
    a.action_size = a.layout.action_size();
    roster.push_back(std::move(a));
  }
  return roster;
}

std::vector<std::size_t> slice_offsets(std::span<const AgentSpec> roster, bool actions) {
  std::vector<std::size_t> off{0};
  for (const AgentSpec& a : roster) off.push_back(off.back() + (actions ? a.action_size : a.observation_size));
  return off;
}

MarlController::MarlController(std::shared_ptr<const Network> net, Strategy s, std::vector<AgentSpec> roster,
                               std::vector<const nn::Mlp*> actors, Normalizers norm)
    : net_(std::move(net)),
      strategy_(s),
      traits_(traits(s)),
      roster_(std::move(roster)),
      actors_(std::move(actors)),
      norm_(norm) {
  if (!traits_.learned_router) throw ContractError(fmt::format("{} has no learned agents", to_string(s)));
  if (actors_.size() != roster_.size()) throw ContractError("MarlController: one actor per roster entry");
  for (std::size_t k = 0; k < roster_.size(); ++k) {
    if (actors_[k] == nullptr) throw ContractError("MarlController: null actor");
    if (actors_[k]->input_size() != roster_[k].observation_size ||
        actors_[k]->output_size() != roster_[k].action_size)
      throw ContractError(fmt::format("actor '{}' has shape {}->{}, agent needs {}->{}", roster_[k].name,
                                      actors_[k]->input_size(), actors_[k]->output_size(),
                                      roster_[k].observation_size, roster_[k].action_size));
  }
  obs_.resize(roster_.size());
  act_.resize(roster_.size());
}

void MarlController::reset() {
  for (auto& v : obs_) v.clear();
  for (auto& v : act_) v.clear();
}

std::vector<double> MarlController::act(std::size_t agent, const std::vector<double>& obs) {
  const AgentSpec& a = roster_[agent];
  std::vector<double> raw(a.action_size);
  if (epsilon_ > 0.0 && rng_ != nullptr && bernoulli(*rng_, epsilon_)) {
    for (double& x : raw) x = uniform01(*rng_);
    return raw;
  }
  const Eigen::VectorXd y = actors_[agent]->forward(std::span<const double>(obs));
  for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = y(static_cast<Eigen::Index>(k));
  return raw;
}

Assignment MarlController::route(const QueueState& q, std::span<const Count> arrivals) {
  obs_[0] = encode_router_obs(*net_, arrivals, q, norm_);
  act_[0] = act(0, obs_[0]);
  return decode_router_action(*net_, act_[0], arrivals);
}

SlotDecision MarlController::schedule(const QueueState& q) {
  SlotDecision d;
  if (!traits_.learned_schedulers) {
    for (std::size_t k = 0; k < net_->topology().num_edges(); ++k) {
      const EdgeId e(k);
      auto flows = lelf_schedule(*net_, q, e, net_->topology().capacity(e));
      d.flows.insert(d.flows.end(), flows.begin(), flows.end());
    }
    return d;
  }
  for (std::size_t k = 1; k < roster_.size(); ++k) {
    const SchedulerLayout& layout = roster_[k].layout;
    obs_[k] = encode_scheduler_obs(layout, q, norm_);
    act_[k] = act(k, obs_[k]);
    const Count cap = net_->topology().capacity(layout.edge);
    switch (traits_.scheduler) {
      case SchedulerKind::drop_send_keep:
        apply_scheduler_action_dsk(layout, decode_dsk(layout, act_[k], q), q, cap, d);
        break;
      case SchedulerKind::send_keep:
        if (layout.effective)
          apply_scheduler_action_el_sk(layout, decode_sk(layout, act_[k], q), q, cap, d);
        else
          apply_scheduler_action_sk(layout, decode_sk(layout, act_[k], q), q, cap, d);
        break;
      case SchedulerKind::send_max: {
        if (rng_ == nullptr) throw ContractError("send-max scheduler needs a random source");
        apply_scheduler_action_smax(layout, act_[k], q, cap, *rng_, d);
        break;
      }
      case SchedulerKind::lelf:
        apply_scheduler_action_el_lelf(layout, decode_forward_caps(layout, act_[k], q), q, cap, d);
        break;
      case SchedulerKind::fifo:
        throw ContractError("FIFO service is not learned");
    }
  }
  return d;
}

std::vector<double> MarlController::joint_observation(const QueueState& q, std::span<const Count> arrivals) const {
  std::vector<double> out = encode_router_obs(*net_, arrivals, q, norm_);
  for (std::size_t k = 1; k < roster_.size(); ++k) {
    const auto o = encode_scheduler_obs(roster_[k].layout, q, norm_);
    out.insert(out.end(), o.begin(), o.end());
  }
  return out;
}

}  // namespace dcmt
