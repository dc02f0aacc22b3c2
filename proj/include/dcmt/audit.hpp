#ifndef DCMT_AUDIT_HPP
#define DCMT_AUDIT_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcmt/metrics.hpp"
#include "dcmt/network.hpp"
#include "dcmt/step_log.hpp"

namespace dcmt {

struct AuditReport {
  std::size_t episodes = 0;
  std::size_t steps = 0;
  std::size_t rows_checked = 0;
  std::vector<std::string> violations;
  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Replays one episode on its own bookkeeping (keyed maps, not the simulator's queues)
/// and checks admissions, availability, forward direction, capacity, lifetime and
/// effective-lifetime expiry, deliveries and packet conservation at every slot.
/// With `expect_empty` the network must hold no packet after the last slot.
/// Returns the metrics recounted from the replay; appends violations to `report`.
EpisodeMetrics audit_episode(const Network& net, bool effective_expiry, std::span<const StepLog> logs,
                             int arrival_steps, bool expect_empty, AuditReport& report, const std::string& context);

/// Audits every shard of an archive directory and checks that each metrics.csv and
/// steps.csv row equals the text recomputed from the replay.
AuditReport audit_archive(const std::filesystem::path& archive_dir);

}  // namespace dcmt

#endif  // DCMT_AUDIT_HPP
