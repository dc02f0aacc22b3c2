#ifndef DCMT_STEP_LOG_HPP
#define DCMT_STEP_LOG_HPP

#include <cstdint>
#include <vector>

#include "dcmt/ids.hpp"

namespace dcmt {

/// f_ij^{(c,p,l)}: `count` packets of path p sent over `edge` while holding lifetime l.
struct FlowEntry {
  EdgeId edge;
  PathId path;
  Lifetime lifetime = 0;
  Count count = 0;
  bool operator==(const FlowEntry&) const = default;
};

/// g_i^{(c,p,l)}: packets removed from node i by a scheduler decision.
struct DropEntry {
  NodeId node;
  PathId path;
  Lifetime lifetime = 0;
  Count count = 0;
  bool operator==(const DropEntry&) const = default;
};

enum class ExpiryCause : std::uint8_t { lifetime = 0, effective_lifetime = 1 };

/// Packets discarded at a slot boundary. `lifetime` is the value after aging.
struct ExpiryEntry {
  NodeId node;
  PathId path;
  Lifetime lifetime = 0;
  Count count = 0;
  ExpiryCause cause = ExpiryCause::lifetime;
  bool operator==(const ExpiryEntry&) const = default;
};

/// Packets of commodity c consumed at d^c; `lifetime` is the residual lifetime on the final hop (>= 1).
struct DeliveryEntry {
  CommodityId commodity;
  Lifetime lifetime = 0;
  Count count = 0;
  bool operator==(const DeliveryEntry&) const = default;
};

struct AdmissionEntry {
  PathId path;
  Count count = 0;
  bool operator==(const AdmissionEntry&) const = default;
};

/// What the schedulers decided for one slot, across all interfaces.
struct SlotDecision {
  std::vector<FlowEntry> flows;
  std::vector<DropEntry> drops;
};

/// Audit record of one slot. Entries with zero count are never stored.
struct StepLog {
  std::int64_t timestep = 0;
  std::vector<Count> arrivals;  // b^c(t), one per commodity
  std::vector<AdmissionEntry> admissions;
  std::vector<FlowEntry> flows;
  std::vector<DropEntry> drops;
  std::vector<ExpiryEntry> expiries;
  std::vector<DeliveryEntry> deliveries;

  [[nodiscard]] Count total_arrivals() const;
  [[nodiscard]] Count total_deliveries() const;
  [[nodiscard]] Count total_drops() const;
  [[nodiscard]] Count total_expired(ExpiryCause cause) const;

  bool operator==(const StepLog&) const = default;
};

}  // namespace dcmt

#endif  // DCMT_STEP_LOG_HPP
