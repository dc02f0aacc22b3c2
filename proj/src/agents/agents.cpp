#include "dcmt/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt {

namespace {

double score(double v) { return std::isfinite(v) && v > 0.0 ? v : 0.0; }

void check_raw(std::span<const double> raw, std::size_t expected, const char* what) {
  if (raw.size() != expected)
    throw ContractError(fmt::format("{}: got {} raw values, layout needs {}", what, raw.size(), expected));
}

Count backlog(const SchedulerLayout& layout, const SchedulerSlot& s, const QueueState& q) {
  return q.count(layout.node, s.path, s.lifetime);
}

// Shared clip-and-emit loop for the drop/send/keep and send/keep families.
void apply_clipped(const SchedulerLayout& layout, std::span<const Count> drops, std::span<const Count> forwards,
                   const QueueState& q, Count capacity, SlotDecision& out) {
  Count residual = std::max<Count>(0, capacity);
  for (std::size_t k = 0; k < layout.slots.size(); ++k) {
    const SchedulerSlot& s = layout.slots[k];
    const Count have = backlog(layout, s, q);
    const Count g = std::clamp<Count>(drops.empty() ? 0 : drops[k], 0, have);
    Count f = std::clamp<Count>(forwards[k], 0, have - g);
    f = std::min(f, residual);
    residual -= f;
    if (g > 0) out.drops.push_back(DropEntry{layout.node, s.path, s.lifetime, g});
    if (f > 0) out.flows.push_back(FlowEntry{layout.edge, s.path, s.lifetime, f});
  }
}

}  // namespace

std::vector<Count> largest_remainder(std::span<const double> weights, Count total) {
  std::vector<Count> out(weights.size(), 0);
  if (weights.empty() || total <= 0) return out;
  double sum = 0.0;
  for (double w : weights) sum += score(w);
  const std::size_t n = weights.size();
  std::vector<double> quota(n);
  for (std::size_t k = 0; k < n; ++k)
    quota[k] = sum > 0.0 ? static_cast<double>(total) * score(weights[k]) / sum
                         : static_cast<double>(total) / static_cast<double>(n);
  Count assigned = 0;
  std::vector<double> frac(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = static_cast<Count>(std::floor(quota[k]));
    // Quantised so that mathematically equal remainders tie and fall back to index order.
    frac[k] = std::round((quota[k] - static_cast<double>(out[k])) * 1e9);
    assigned += out[k];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  // Floating error can leave the floors one short or long; fix up in remainder order.
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n, ++assigned) ++out[order[k]];
  for (std::size_t k = n; assigned > total; --assigned) {
    k = (k == 0 ? n : k) - 1;
    while (out[order[k]] == 0) k = (k == 0 ? n : k) - 1;
    --out[order[k]];
  }
  return out;
}

std::size_t router_observation_size(const Network& net) {
  return net.num_commodities() + net.topology().num_nodes();
}

std::size_t router_action_size(const Network& net) { return net.paths().size(); }

std::vector<double> encode_router_obs(const Network& net, std::span<const Count> arrivals, const QueueState& q,
                                      const Normalizers& norm) {
  if (arrivals.size() != net.num_commodities()) throw ContractError("encode_router_obs: arrivals size");
  std::vector<double> obs;
  obs.reserve(router_observation_size(net));
  for (Count b : arrivals) obs.push_back(static_cast<double>(b) / norm.arrival);
  for (std::size_t i = 0; i < net.topology().num_nodes(); ++i)
    obs.push_back(static_cast<double>(congestion(net, q, NodeId(i))) / norm.queue);
  return obs;
}

Assignment decode_router_action(const Network& net, std::span<const double> raw, std::span<const Count> arrivals) {
  check_raw(raw, router_action_size(net), "decode_router_action");
  if (arrivals.size() != net.num_commodities()) throw ContractError("decode_router_action: arrivals size");
  Assignment out(net.paths().size(), 0);
  for (const Commodity& c : net.commodities()) {
    const auto ids = net.paths().of_commodity(c.id);
    std::vector<double> w;
    w.reserve(ids.size());
    for (PathId p : ids) w.push_back(raw[p.index()]);
    const auto counts = largest_remainder(w, arrivals[c.id.index()]);
    for (std::size_t k = 0; k < ids.size(); ++k) out[ids[k].index()] = counts[k];
  }
  return out;
}

SchedulerLayout make_scheduler_layout(const Network& net, EdgeId e, Strategy s) {
  const StrategyTraits t = traits(s);
  SchedulerLayout layout;
  layout.edge = e;
  layout.node = net.topology().edge(e).from;
  layout.effective = t.effective_indexing;
  layout.arity = t.action_arity;
  for (const Commodity& c : net.commodities())
    for (PathId p : net.paths().through_edge(e, c.id)) {
      if (t.effective_indexing) {
        const int d = net.paths().dist(p, layout.node);
        const Lifetime top = net.effective_lifetime(p, c.initial_lifetime, layout.node);
        for (Lifetime el = 1; el <= top; ++el) layout.slots.push_back(SchedulerSlot{c.id, p, el, el + d - 1});
      } else {
        for (Lifetime l = 1; l <= c.initial_lifetime; ++l) layout.slots.push_back(SchedulerSlot{c.id, p, l, l});
      }
    }
  return layout;
}

std::vector<double> encode_scheduler_obs(const SchedulerLayout& layout, const QueueState& q, const Normalizers& norm) {
  std::vector<double> obs;
  obs.reserve(layout.slots.size());
  for (const SchedulerSlot& s : layout.slots) obs.push_back(static_cast<double>(backlog(layout, s, q)) / norm.queue);
  return obs;
}

std::vector<DskAction> decode_dsk(const SchedulerLayout& layout, std::span<const double> raw, const QueueState& q) {
  check_raw(raw, layout.slots.size() * 3, "decode_dsk");
  std::vector<DskAction> out;
  out.reserve(layout.slots.size());
  for (std::size_t k = 0; k < layout.slots.size(); ++k) {
    const auto split = largest_remainder(raw.subspan(3 * k, 3), backlog(layout, layout.slots[k], q));
    out.push_back(DskAction{split[0], split[1], split[2]});
  }
  return out;
}

std::vector<SkAction> decode_sk(const SchedulerLayout& layout, std::span<const double> raw, const QueueState& q) {
  check_raw(raw, layout.slots.size() * 2, "decode_sk");
  std::vector<SkAction> out;
  out.reserve(layout.slots.size());
  for (std::size_t k = 0; k < layout.slots.size(); ++k) {
    const auto split = largest_remainder(raw.subspan(2 * k, 2), backlog(layout, layout.slots[k], q));
    out.push_back(SkAction{split[0], split[1]});
  }
  return out;
}

std::vector<Count> decode_forward_caps(const SchedulerLayout& layout, std::span<const double> raw,
                                       const QueueState& q) {
  check_raw(raw, layout.slots.size(), "decode_forward_caps");
  std::vector<Count> out;
  out.reserve(layout.slots.size());
  for (std::size_t k = 0; k < layout.slots.size(); ++k) {
    const double f = std::clamp(score(raw[k]), 0.0, 1.0);
    out.push_back(std::llround(f * static_cast<double>(backlog(layout, layout.slots[k], q))));
  }
  return out;
}

void apply_scheduler_action_dsk(const SchedulerLayout& layout, std::span<const DskAction> action, const QueueState& q,
                                Count capacity, SlotDecision& out) {
  if (action.size() != layout.slots.size()) throw ContractError("apply_scheduler_action_dsk: action size");
  std::vector<Count> g, f;
  for (const auto& a : action) {
    g.push_back(a.drop);
    f.push_back(a.forward);
  }
  apply_clipped(layout, g, f, q, capacity, out);
}

void apply_scheduler_action_sk(const SchedulerLayout& layout, std::span<const SkAction> action, const QueueState& q,
                               Count capacity, SlotDecision& out) {
  if (action.size() != layout.slots.size()) throw ContractError("apply_scheduler_action_sk: action size");
  if (layout.effective) throw ContractError("apply_scheduler_action_sk: expects a lifetime-indexed layout");
  std::vector<Count> f;
  for (const auto& a : action) f.push_back(a.forward);
  apply_clipped(layout, {}, f, q, capacity, out);
}

void apply_scheduler_action_el_sk(const SchedulerLayout& layout, std::span<const SkAction> action,
                                  const QueueState& q, Count capacity, SlotDecision& out) {
  if (action.size() != layout.slots.size()) throw ContractError("apply_scheduler_action_el_sk: action size");
  if (!layout.effective) throw ContractError("apply_scheduler_action_el_sk: expects an EL-indexed layout");
  std::vector<Count> f;
  for (const auto& a : action) f.push_back(a.forward);
  apply_clipped(layout, {}, f, q, capacity, out);
}

void apply_scheduler_action_smax(const SchedulerLayout& layout, std::span<const double> probabilities,
                                 const QueueState& q, Count capacity, Rng& rng, SlotDecision& out) {
  const std::size_t n = layout.slots.size();
  if (probabilities.size() != n) throw ContractError("apply_scheduler_action_smax: probability vector size");
  std::vector<double> prob(n);
  std::vector<Count> left(n), taken(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    prob[k] = std::clamp(score(probabilities[k]), 0.0, 1.0);
    left[k] = backlog(layout, layout.slots[k], q);
  }
  Count residual = std::max<Count>(0, capacity);
  auto take = [&](std::size_t k) {
    --left[k];
    ++taken[k];
    --residual;
  };
  auto eligible = [&](std::size_t k) { return left[k] > 0 && prob[k] > 0.0; };

  bool previous_sweep_empty = false;
  while (residual > 0) {
    bool any = false;
    for (std::size_t k = 0; k < n && !any; ++k) any = eligible(k);
    if (!any) break;

    std::size_t start = 0;
    bool took = false;
    if (previous_sweep_empty) {
      // First success of a sweep conditioned on the sweep not being empty.
      std::vector<double> w(n, 0.0);
      double miss = 1.0, total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (!eligible(k)) continue;
        w[k] = prob[k] * miss;
        miss *= 1.0 - prob[k];
        total += w[k];
      }
      double u = uniform01(rng) * total;
      std::size_t pick = n;
      for (std::size_t k = 0; k < n; ++k) {
        if (w[k] <= 0.0) continue;
        pick = k;
        if (u < w[k]) break;
        u -= w[k];
      }
      take(pick);
      start = pick + 1;
      took = true;
    }
    for (std::size_t k = start; k < n && residual > 0; ++k) {
      if (!eligible(k)) continue;
      if (bernoulli(rng, prob[k])) {
        take(k);
        took = true;
      }
    }
    previous_sweep_empty = !took;
  }
  for (std::size_t k = 0; k < n; ++k)
    if (taken[k] > 0) out.flows.push_back(FlowEntry{layout.edge, layout.slots[k].path, layout.slots[k].lifetime, taken[k]});
}

void apply_scheduler_action_el_lelf(const SchedulerLayout& layout, std::span<const Count> caps, const QueueState& q,
                                    Count capacity, SlotDecision& out) {
  const std::size_t n = layout.slots.size();
  if (caps.size() != n) throw ContractError("apply_scheduler_action_el_lelf: caps size");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return layout.slots[a].level < layout.slots[b].level; });
  Count residual = std::max<Count>(0, capacity);
  for (std::size_t k : order) {
    if (residual == 0) break;
    const SchedulerSlot& s = layout.slots[k];
    const Count f = std::min({std::max<Count>(0, caps[k]), backlog(layout, s, q), residual});
    if (f == 0) continue;
    out.flows.push_back(FlowEntry{layout.edge, s.path, s.lifetime, f});
    residual -= f;
  }
}

AccountingReport accounting_report(Strategy s, const Network& net, std::size_t m1, std::size_t m2) {
  const StrategyTraits t = traits(s);
  AccountingReport r;
  r.strategy = s;
  r.router_learned = t.learned_router;
  r.schedulers_tabulated = t.scheduler != SchedulerKind::fifo;
  r.router_observation_size = router_observation_size(net);
  r.router_action_size = router_action_size(net);
  const std::size_t np = net.paths().size();
  const std::size_t ne = net.topology().num_edges();
  if (t.learned_router) {
    r.router_mlp_complexity = fmt::format("O((|C|+|V|)*m1+m1*m2+m2*|P|) = O({}*{}+{}*{}+{}*{})",
                                          r.router_observation_size, m1, m1, m2, m2, r.router_action_size);
    r.router_algorithm_complexity = fmt::format("O(|P|) = O({})", np);
  } else if (t.fifo) {
    r.router_algorithm_complexity = "min-cost over virtual queues (not tabulated)";
  } else {
    r.router_algorithm_complexity =
        fmt::format("O(2*(|P|*|E|)+|P|) = O(2*({}*{})+{})", np, ne, np);
  }
  if (!r.schedulers_tabulated) return r;

  for (std::size_t k = 0; k < ne; ++k) {
    const EdgeId e(k);
    const SchedulerLayout layout = make_scheduler_layout(net, e, s);
    InterfaceAccounting a;
    a.edge = e;
    a.observation_size = layout.observation_size();
    a.action_size = layout.action_size();
    if (t.learned_schedulers)
      a.mlp_complexity =
          fmt::format("O({}*{}+{}*{}+{}*{})", a.observation_size, m1, m1, m2, m2, a.action_size);
    Lifetime max_el = 0;
    for (const Commodity& c : net.commodities())
      for (PathId p : net.paths().through_edge(e, c.id))
        max_el = std::max(max_el, net.effective_lifetime(p, net.max_lifetime(), layout.node));
    switch (t.scheduler) {
      case SchedulerKind::drop_send_keep:
        a.algorithm_complexity = fmt::format("O(|P|*|L|*3) = O({}*{}*3)", np, net.max_lifetime());
        break;
      case SchedulerKind::send_keep:
        a.algorithm_complexity =
            t.effective_indexing ? fmt::format("O(|P|*max EL(p,L_max,i)*2) = O({}*{}*2)", np, max_el)
                                 : fmt::format("O(|P|*|L|*2) = O({}*{}*2)", np, net.max_lifetime());
        break;
      case SchedulerKind::send_max:
      case SchedulerKind::lelf:
        a.algorithm_complexity = fmt::format("O(|q_i|*|P|*max EL(p,L_max,i)) = O(|q_i|*{}*{})", np, max_el);
        break;
      case SchedulerKind::fifo:
        break;
    }
    r.interfaces.push_back(std::move(a));
  }
  return r;
}

std::string format_accounting(const AccountingReport& r, const Network& net) {
  const auto& g = net.topology();
  std::string out = fmt::format("strategy {}\n", to_string(r.strategy));
  out += fmt::format("  router: observation {} action {} {}{}{}\n", r.router_observation_size, r.router_action_size,
                     r.router_learned ? "mlp " : "rule-based ", r.router_mlp_complexity,
                     r.router_algorithm_complexity.empty() ? "" : " apply " + r.router_algorithm_complexity);
  if (!r.schedulers_tabulated) {
    out += "  schedulers: FIFO (no observation/action space)\n";
    return out;
  }
  for (const auto& a : r.interfaces) {
    const Edge& e = g.edge(a.edge);
    out += fmt::format("  {}->{}: observation {} action {}", g.name(e.from), g.name(e.to), a.observation_size,
                       a.action_size);
    if (!a.mlp_complexity.empty()) out += " mlp " + a.mlp_complexity;
    out += " apply " + a.algorithm_complexity + "\n";
  }
  return out;
}

}  // namespace dcmt
