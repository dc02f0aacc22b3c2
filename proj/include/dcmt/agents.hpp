#ifndef DCMT_AGENTS_HPP
#define DCMT_AGENTS_HPP

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dcmt/environment.hpp"
#include "dcmt/network.hpp"
#include "dcmt/queue_state.hpp"
#include "dcmt/rng.hpp"
#include "dcmt/step_log.hpp"
#include "dcmt/strategy.hpp"

namespace dcmt {

/// Divisors applied to raw counts before they reach a network.
struct Normalizers {
  double queue = 10.0;    // queue backlogs (default: link capacity)
  double arrival = 12.0;  // per-commodity arrivals (default: largest per-commodity rate)
};

/// Splits `total` into integers proportional to `weights` by largest remainder.
/// Ties in the fractional part go to the lower index; all-zero (or non-finite)
/// weights mean a uniform split.
std::vector<Count> largest_remainder(std::span<const double> weights, Count total);

// --- router ------------------------------------------------------------------

[[nodiscard]] std::size_t router_observation_size(const Network& net);
[[nodiscard]] std::size_t router_action_size(const Network& net);

/// [b^c(t) for c ascending] ++ [Q_i(t) for i ascending], each scaled by its normalizer.
std::vector<double> encode_router_obs(const Network& net, std::span<const Count> arrivals, const QueueState& q,
                                      const Normalizers& norm);

/// Per commodity: normalize the scores over P^c and round to counts summing to b^c(t).
Assignment decode_router_action(const Network& net, std::span<const double> raw, std::span<const Count> arrivals);

// --- schedulers --------------------------------------------------------------

/// One scheduler index. `level` is the lifetime (LT strategies) or the effective
/// lifetime (EL strategies); `lifetime` is always the underlying queue lifetime.
struct SchedulerSlot {
  CommodityId commodity;
  PathId path;
  Lifetime level = 0;
  Lifetime lifetime = 0;
};

/// Index space of the scheduler on one interface, in canonical (commodity, path, level) order.
struct SchedulerLayout {
  EdgeId edge;
  NodeId node;  // tail of the edge
  bool effective = false;
  int arity = 1;
  std::vector<SchedulerSlot> slots;

  [[nodiscard]] std::size_t observation_size() const { return slots.size(); }
  [[nodiscard]] std::size_t action_size() const { return slots.size() * static_cast<std::size_t>(arity); }
};

SchedulerLayout make_scheduler_layout(const Network& net, EdgeId e, Strategy s);

std::vector<double> encode_scheduler_obs(const SchedulerLayout& layout, const QueueState& q, const Normalizers& norm);

struct DskAction {
  Count drop = 0;
  Count forward = 0;
  Count keep = 0;
};

struct SkAction {
  Count forward = 0;
  Count keep = 0;
};

inline constexpr Count kUnlimited = std::numeric_limits<Count>::max();

/// Raw triples (g, F, K) -> integer split of the current backlog of each index.
std::vector<DskAction> decode_dsk(const SchedulerLayout& layout, std::span<const double> raw, const QueueState& q);
/// Raw pairs (F, K) -> integer split of the current backlog of each index.
std::vector<SkAction> decode_sk(const SchedulerLayout& layout, std::span<const double> raw, const QueueState& q);
/// Raw fractions -> per-index forward caps round(raw * backlog).
std::vector<Count> decode_forward_caps(const SchedulerLayout& layout, std::span<const double> raw,
                                       const QueueState& q);

/// Drop/send/keep on lifetime indices. Each index is clipped to its backlog
/// (drop first, then forward), then forwards are clipped to `capacity` in index order.
void apply_scheduler_action_dsk(const SchedulerLayout& layout, std::span<const DskAction> action, const QueueState& q,
                                Count capacity, SlotDecision& out);
/// Send/keep on lifetime indices; same clipping as the drop/send/keep variant.
void apply_scheduler_action_sk(const SchedulerLayout& layout, std::span<const SkAction> action, const QueueState& q,
                               Count capacity, SlotDecision& out);
/// Send/keep on effective-lifetime indices.
void apply_scheduler_action_el_sk(const SchedulerLayout& layout, std::span<const SkAction> action,
                                  const QueueState& q, Count capacity, SlotDecision& out);

/// Repeated sweeps over the indices; in each sweep every index with packets left
/// gives up one packet with its forward probability. Stops once capacity is used
/// or no nonempty index has a positive probability.
///
/// Sweeps that select nothing leave the state unchanged, so after one such sweep the
/// next productive sweep is drawn directly (first success from its conditional law).
void apply_scheduler_action_smax(const SchedulerLayout& layout, std::span<const double> probabilities,
                                 const QueueState& q, Count capacity, Rng& rng, SlotDecision& out);

/// Forward up to `caps[k]` packets from each index, visiting effective-lifetime
/// levels from lowest to highest and (commodity, path) in canonical order inside a level.
/// kUnlimited caps reduce this to plain LELF.
void apply_scheduler_action_el_lelf(const SchedulerLayout& layout, std::span<const Count> caps, const QueueState& q,
                                    Count capacity, SlotDecision& out);

// --- size / complexity accounting ------------------------------------------

struct InterfaceAccounting {
  EdgeId edge;
  std::size_t observation_size = 0;
  std::size_t action_size = 0;
  std::string mlp_complexity;  // empty for rule-based schedulers
  std::string algorithm_complexity;
};

struct AccountingReport {
  Strategy strategy{};
  bool schedulers_tabulated = true;  // false for the FIFO baseline
  bool router_learned = false;
  std::size_t router_observation_size = 0;
  std::size_t router_action_size = 0;
  std::string router_mlp_complexity;
  std::string router_algorithm_complexity;
  std::vector<InterfaceAccounting> interfaces;
};

AccountingReport accounting_report(Strategy s, const Network& net, std::size_t m1 = 128, std::size_t m2 = 64);
std::string format_accounting(const AccountingReport& report, const Network& net);

}  // namespace dcmt

#endif  // DCMT_AGENTS_HPP
