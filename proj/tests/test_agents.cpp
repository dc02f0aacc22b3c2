#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "dcmt/agents.hpp"
#include "dcmt/controller.hpp"
#include "dcmt/errors.hpp"
#include "support.hpp"
#include "accounting_oracle.hpp"

namespace dcmt {
namespace {

// Largest remainder with exact integer arithmetic: quota_k = total * w_k / W.
std::vector<Count> exact_largest_remainder(const std::vector<long long>& w, long long total) {
  const long long sum = std::accumulate(w.begin(), w.end(), 0LL);
  const std::size_t n = w.size();
  std::vector<Count> out(n);
  std::vector<long long> rem(n);
  long long assigned = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const long long num = sum > 0 ? total * w[k] : total;
    const long long den = sum > 0 ? sum : static_cast<long long>(n);
    out[k] = num / den;
    rem[k] = num % den;  // every remainder shares the denominator
    assigned += out[k];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
  return out;
}

TEST(LargestRemainder, MatchesExactArithmeticOracle) {
  Rng rng = make_rng({41});
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    std::vector<long long> w(n);
    std::vector<double> wd(n);
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = static_cast<long long>(uniform_index(rng, 8));
      wd[k] = static_cast<double>(w[k]);
    }
    const auto total = static_cast<long long>(uniform_index(rng, 40));
    const auto got = largest_remainder(wd, total);
    ASSERT_EQ(got, exact_largest_remainder(w, total)) << "trial " << trial;
  }
}

TEST(LargestRemainder, SumsExactlyAndStaysWithinOneOfQuota) {
  Rng rng = make_rng({42});
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 10);
    std::vector<double> w(n);
    for (double& x : w) x = uniform01(rng);
    const Count total = static_cast<Count>(uniform_index(rng, 100));
    const auto got = largest_remainder(w, total);
    EXPECT_EQ(std::accumulate(got.begin(), got.end(), Count{0}), total);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(static_cast<double>(got[k]) - total * w[k] / sum), 1.0);
  }
  const std::vector<double> junk{std::nan(""), -3.0, 0.0};
  EXPECT_EQ(largest_remainder(junk, 4), (std::vector<Count>{2, 1, 1}));
}

TEST(Accounting, ShippedConfigMatchesIndependentFormulas) {
  const auto cfg = test::shipped("seven_node.json");
  for (Lifetime l : cfg.lifetimes) {
    const auto bad = test::accounting_mismatches(*build_network(cfg, l, 3.0));
    EXPECT_TRUE(bad.empty()) << bad.front();
  }
}

TEST(Accounting, RandomSmallConfigsMatchIndependentFormulas) {
  for (const auto& net : test::random_small_networks(20, 1)) {
    const auto bad = test::accounting_mismatches(*net);
    EXPECT_TRUE(bad.empty()) << bad.front();
  }
}

TEST(Router, DecodedAssignmentsConserveArrivals) {
  Rng rng = make_rng({43});
  const auto net = build_network(test::shipped("seven_node.json"), 7, 12.0);
  EXPECT_EQ(router_observation_size(*net), 2u + 7u);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> raw(router_action_size(*net));
    for (double& x : raw) x = uniform01(rng) < 0.1 ? 0.0 : uniform01(rng);
    const std::vector<Count> arrivals{poisson(rng, 12.0), poisson(rng, 12.0)};
    const auto a = decode_router_action(*net, raw, arrivals);
    for (const Commodity& c : net->commodities()) {
      Count s = 0;
      for (PathId p : net->paths().of_commodity(c.id)) {
        EXPECT_GE(a[p.index()], 0);
        s += a[p.index()];
      }
      EXPECT_EQ(s, arrivals[c.id.index()]);
    }
  }
  EXPECT_THROW(decode_router_action(*net, std::vector<double>(3, 0.5), std::vector<Count>{1, 1}), ContractError);
}

TEST(Router, ObservationIsArrivalsThenNodeBacklogs) {
  const auto net = test::triangle();
  QueueState q(*net, false);
  q.count_ref(NodeId(0), PathId(0), 3) = 4;
  q.count_ref(NodeId(1), PathId(1), 2) = 6;
  const auto obs = encode_router_obs(*net, std::vector<Count>{5}, q, Normalizers{2.0, 10.0});
  EXPECT_EQ(obs, (std::vector<double>{0.5, 2.0, 3.0, 0.0}));
}

TEST(SchedulerLayout, EffectiveIndicesStayWithinTheBound) {
  const auto cfg = test::shipped("seven_node.json");
  for (Lifetime l : cfg.lifetimes) {
    const auto net = build_network(cfg, l, 3.0);
    for (Strategy s : kAllStrategies) {
      if (!traits(s).effective_indexing) continue;
      for (std::size_t e = 0; e < net->topology().num_edges(); ++e) {
        const auto layout = make_scheduler_layout(*net, EdgeId(e), s);
        for (const auto& slot : layout.slots) {
          const Lifetime top = net->effective_lifetime(slot.path, l, layout.node);
          EXPECT_GE(slot.level, 1);
          EXPECT_LE(slot.level, top);
          EXPECT_EQ(net->effective_lifetime(slot.path, slot.lifetime, layout.node), slot.level);
          EXPECT_LE(slot.lifetime, l);
        }
      }
    }
  }
}

/// Decodes a random raw action for every interface and applies it the way the controller does.
SlotDecision random_scheduler_decision(const Network& net, Strategy s, const QueueState& q, Rng& rng) {
  SlotDecision d;
  for (std::size_t k = 0; k < net.topology().num_edges(); ++k) {
    const EdgeId e(k);
    const auto layout = make_scheduler_layout(net, e, s);
    std::vector<double> raw(layout.action_size());
    for (double& x : raw) x = uniform01(rng) < 0.05 ? 2.0 * uniform01(rng) - 0.5 : uniform01(rng);
    const Count cap = net.topology().capacity(e);
    switch (traits(s).scheduler) {
      case SchedulerKind::drop_send_keep:
        apply_scheduler_action_dsk(layout, decode_dsk(layout, raw, q), q, cap, d);
        break;
      case SchedulerKind::send_keep:
        if (layout.effective)
          apply_scheduler_action_el_sk(layout, decode_sk(layout, raw, q), q, cap, d);
        else
          apply_scheduler_action_sk(layout, decode_sk(layout, raw, q), q, cap, d);
        break;
      case SchedulerKind::send_max:
        apply_scheduler_action_smax(layout, raw, q, cap, rng, d);
        break;
      default:
        apply_scheduler_action_el_lelf(layout, decode_forward_caps(layout, raw, q), q, cap, d);
        break;
    }
  }
  return d;
}

TEST(Schedulers, RandomActionsNeverBreakAvailabilityOrCapacity) {
  Rng rng = make_rng({44});
  const auto cfg = test::shipped("seven_node.json");
  int applied = 0;
  for (Lifetime l : cfg.lifetimes) {
    const auto net = build_network(cfg, l, 3.0);
    for (Strategy s : {Strategy::marl_lt_dsk, Strategy::marl_lt_sk, Strategy::marl_el_sk, Strategy::marl_el_smax,
                       Strategy::marl_el_lelf}) {
      for (int trial = 0; trial < 700; ++trial) {
        QueueState q = test::random_queues(*net, rng, 12, 0.6, traits(s).effective_indexing);
        const SlotDecision d = random_scheduler_decision(*net, s, q, rng);
        StepLog log;
        ASSERT_NO_THROW(apply_flows(*net, q, d, log)) << to_string(s) << " trial " << trial;
        ++applied;
      }
    }
  }
  EXPECT_GE(applied, 10000);
}

TEST(Schedulers, ClippingDropsFirstThenForwardsInIndexOrder) {
  const auto net = test::make_network({"A", "B"}, {{"A", "B", 4}}, {{"A", "B", 2, 0.0}});
  const auto layout = make_scheduler_layout(*net, EdgeId(0), Strategy::marl_lt_dsk);
  ASSERT_EQ(layout.slots.size(), 2u);
  QueueState q(*net, false);
  q.count_ref(NodeId(0), PathId(0), 1) = 5;
  q.count_ref(NodeId(0), PathId(0), 2) = 3;
  SlotDecision d;
  const std::vector<DskAction> a{{2, 9, 0}, {0, 3, 0}};
  apply_scheduler_action_dsk(layout, a, q, 4, d);
  ASSERT_EQ(d.drops.size(), 1u);
  EXPECT_EQ(d.drops[0].count, 2);
  ASSERT_EQ(d.flows.size(), 2u);
  EXPECT_EQ(d.flows[0].count, 3);  // 5 - 2 dropped
  EXPECT_EQ(d.flows[1].count, 1);  // residual capacity
}

TEST(Schedulers, DecodersSplitTheBacklog) {
  const auto net = test::make_network({"A", "B"}, {{"A", "B", 4}}, {{"A", "B", 2, 0.0}});
  const auto lt = make_scheduler_layout(*net, EdgeId(0), Strategy::marl_lt_dsk);
  QueueState q(*net, false);
  q.count_ref(NodeId(0), PathId(0), 1) = 7;
  const auto dsk = decode_dsk(lt, std::vector<double>{0.2, 0.5, 0.3, 0.0, 0.0, 0.0}, q);
  EXPECT_EQ(dsk[0].drop + dsk[0].forward + dsk[0].keep, 7);
  EXPECT_EQ(dsk[0].forward, 4);  // quotas 1.4 / 3.5 / 2.1
  EXPECT_EQ(dsk[1].drop + dsk[1].forward + dsk[1].keep, 0);
  const auto el = make_scheduler_layout(*net, EdgeId(0), Strategy::marl_el_lelf);
  const auto caps = decode_forward_caps(el, std::vector<double>{0.5, 1.7}, q);
  // EL level 1 at A is lifetime 1 (one hop left), level 2 is lifetime 2.
  EXPECT_EQ(caps, (std::vector<Count>{4, 0}));  // round(3.5) = 4; empty index gives 0
}

TEST(Smax, FirstIndexWinsHalfTheTime) {
  // Index 0 forwards with probability 0.5, index 1 with certainty, one slot of capacity.
  const auto net = test::make_network({"A", "C"}, {{"A", "C", 1}}, {{"A", "C", 1, 0.0}, {"A", "C", 1, 0.0}});
  const auto layout = make_scheduler_layout(*net, EdgeId(0), Strategy::marl_el_smax);
  ASSERT_EQ(layout.slots.size(), 2u);
  QueueState q(*net, false);
  for (const auto& s : layout.slots) q.count_ref(NodeId(0), s.path, s.lifetime) = 1;
  Rng rng = make_rng({45});
  const int n = 20000;
  int first = 0;
  for (int k = 0; k < n; ++k) {
    SlotDecision d;
    apply_scheduler_action_smax(layout, std::vector<double>{0.5, 1.0}, q, 1, rng, d);
    ASSERT_EQ(d.flows.size(), 1u);
    if (d.flows[0].path == layout.slots[0].path) ++first;
  }
  EXPECT_NEAR(static_cast<double>(first) / n, 0.5, 0.02);
}

TEST(Smax, SkipAheadFollowsTheSweepLaw) {
  // Both indices at probability 0.2: index 0 wins with 0.2 / (0.2 + 0.8 * 0.2) = 5/9.
  const auto net = test::make_network({"A", "C"}, {{"A", "C", 1}}, {{"A", "C", 1, 0.0}, {"A", "C", 1, 0.0}});
  const auto layout = make_scheduler_layout(*net, EdgeId(0), Strategy::marl_el_smax);
  ASSERT_EQ(layout.slots.size(), 2u);
  QueueState q(*net, false);
  for (const auto& s : layout.slots) q.count_ref(NodeId(0), s.path, s.lifetime) = 1;
  Rng rng = make_rng({46});
  const int n = 40000;
  int first = 0;
  for (int k = 0; k < n; ++k) {
    SlotDecision d;
    apply_scheduler_action_smax(layout, std::vector<double>{0.2, 0.2}, q, 1, rng, d);
    ASSERT_EQ(d.flows.size(), 1u);
    if (d.flows[0].path == layout.slots[0].path) ++first;
  }
  EXPECT_NEAR(static_cast<double>(first) / n, 5.0 / 9.0, 0.01);
}

TEST(Smax, FillsCapacityWhenEveryIndexIsEligible) {
  const auto net = test::triangle(3, 0.0, 6, 2);
  const auto layout = make_scheduler_layout(*net, EdgeId(0), Strategy::marl_el_smax);
  QueueState q(*net, false);
  q.count_ref(NodeId(0), PathId(0), 3) = 4;
  q.count_ref(NodeId(0), PathId(0), 2) = 4;
  Rng rng = make_rng({47});
  SlotDecision d;
  std::vector<double> p(layout.slots.size(), 0.3);
  apply_scheduler_action_smax(layout, p, q, 6, rng, d);
  Count sent = 0;
  for (const auto& f : d.flows) sent += f.count;
  EXPECT_EQ(sent, 6);
  SlotDecision none;
  apply_scheduler_action_smax(layout, std::vector<double>(layout.slots.size(), 0.0), q, 6, rng, none);
  EXPECT_TRUE(none.flows.empty());
}

TEST(ElLelf, UnlimitedCapsReduceToLelf) {
  Rng rng = make_rng({48});
  const auto cfg = test::shipped("seven_node.json");
  for (Lifetime l : cfg.lifetimes) {
    const auto net = build_network(cfg, l, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
      const QueueState q = test::random_queues(*net, rng, 8, 0.5, true);
      for (std::size_t e = 0; e < net->topology().num_edges(); ++e) {
        const auto layout = make_scheduler_layout(*net, EdgeId(e), Strategy::marl_el_lelf);
        SlotDecision d;
        apply_scheduler_action_el_lelf(layout, std::vector<Count>(layout.slots.size(), kUnlimited), q, 10, d);
        EXPECT_EQ(d.flows, lelf_schedule(*net, q, EdgeId(e), 10));
      }
    }
  }
}

TEST(Roster, RouterFirstThenNonEmptyInterfaces) {
  const auto net = build_network(test::shipped("seven_node.json"), 3, 3.0);
  const auto lelf = make_roster(*net, Strategy::marl_el_lelf);
  ASSERT_EQ(lelf.size(), 1u);
  EXPECT_EQ(lelf[0].role, AgentRole::router);
  const auto dsk = make_roster(*net, Strategy::marl_lt_dsk);
  EXPECT_EQ(dsk[0].name, "router");
  for (std::size_t k = 1; k < dsk.size(); ++k) {
    EXPECT_EQ(dsk[k].role, AgentRole::scheduler);
    EXPECT_GT(dsk[k].observation_size, 0u);
    EXPECT_EQ(dsk[k].action_size, 3 * dsk[k].observation_size);
  }
  const auto offsets = slice_offsets(dsk, true);
  ASSERT_EQ(offsets.size(), dsk.size() + 1);
  EXPECT_EQ(offsets.back(), std::accumulate(dsk.begin(), dsk.end(), std::size_t{0},
                                            [](std::size_t s, const AgentSpec& a) { return s + a.action_size; }));
  EXPECT_THROW(make_rule_controller(net, Strategy::marl_el_sk), ContractError);
}

}  // namespace
}  // namespace dcmt
