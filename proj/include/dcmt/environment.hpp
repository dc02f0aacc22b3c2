#ifndef DCMT_ENVIRONMENT_HPP
#define DCMT_ENVIRONMENT_HPP

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dcmt/network.hpp"
#include "dcmt/queue_state.hpp"
#include "dcmt/rng.hpp"
#include "dcmt/step_log.hpp"

namespace dcmt {

/// Router output: packets admitted per global path id (zero for other commodities' paths).
using Assignment = std::vector<Count>;

struct EnvOptions {
  /// Also discard packets whose effective lifetime reached zero at the slot boundary.
  bool effective_lifetime_expiry = false;
  /// Keep per-interface FIFO packet records (needed by FIFO schedulers only).
  bool track_fifo = false;
};

/// Independent Poisson draws b^c(t) with mean b̄^c.
std::vector<Count> sample_arrivals(std::span<const Commodity> commodities, Rng& rng);

/// Places this slot's arrivals at their sources with full lifetime L^c.
/// Throws ContractError when per-commodity totals disagree with `arrivals` or a
/// path belongs to a different commodity.
void admit(const Network& net, QueueState& q, std::span<const Count> arrivals, const Assignment& assignment,
           StepLog& log);

/// Removes forwarded and dropped packets from their queues and moves forwarded ones
/// to the next node (same lifetime index; aging happens in expire_and_advance).
/// Packets reaching their destination are recorded as deliveries. All availability
/// and capacity checks run before any queue is touched.
void apply_flows(const Network& net, QueueState& q, const SlotDecision& decision, StepLog& log);

/// Shifts every lifetime index down by one, discards lifetime-0 packets and, in
/// effective-lifetime mode, packets with EL <= 0. Advances the clock.
void expire_and_advance(const Network& net, QueueState& q, bool effective_lifetime_expiry, StepLog& log);

/// One discrete-time network instance. Owns its queues; shares the immutable network.
class Environment {
 public:
  using Scheduler = std::function<SlotDecision(const QueueState&)>;

  Environment(std::shared_ptr<const Network> network, EnvOptions options);

  [[nodiscard]] const Network& network() const { return *network_; }
  [[nodiscard]] std::shared_ptr<const Network> network_ptr() const { return network_; }
  [[nodiscard]] const EnvOptions& options() const { return options_; }
  [[nodiscard]] const QueueState& state() const { return queues_; }

  void reset();

  /// admit -> schedule (on queues that include this slot's arrivals) -> apply_flows -> expire_and_advance.
  StepLog step(std::span<const Count> arrivals, const Assignment& assignment, const Scheduler& scheduler);

 private:
  std::shared_ptr<const Network> network_;
  EnvOptions options_;
  QueueState queues_;
};

}  // namespace dcmt

#endif  // DCMT_ENVIRONMENT_HPP
