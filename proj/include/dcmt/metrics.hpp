#ifndef DCMT_METRICS_HPP
#define DCMT_METRICS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcmt/step_log.hpp"
#include "dcmt/strategy.hpp"

namespace dcmt {

/// Deliveries over arrivals; 0/0 is defined as 1.
[[nodiscard]] double reliability(Count deliveries, Count arrivals);

struct EpisodeMetrics {
  std::vector<Count> step_arrivals;    // arrival steps only
  std::vector<Count> step_deliveries;  // instantaneous timely throughput, arrival steps only
  Count arrivals = 0;
  Count deliveries = 0;  // including the drain phase
  Count dropped = 0;
  Count expired_lifetime = 0;
  Count expired_effective = 0;
  int drain_steps = 0;
  double reliability = 1.0;
  bool degenerate = false;  // no arrivals
};

/// `logs` holds the arrival steps first, then any drain steps.
EpisodeMetrics compute_metrics(std::span<const StepLog> logs, int arrival_steps);

/// Identifies one (strategy, grid point, seed) block of rows.
struct RowKey {
  Strategy strategy{};
  Lifetime lifetime = 0;
  double aggregate_rate = 0.0;
  std::uint64_t seed = 0;
};

std::string metrics_header();
std::string format_metrics_row(const RowKey& key, int episode, const EpisodeMetrics& m);
std::string steps_header();
/// One line per arrival step, each terminated by '\n'.
std::string format_step_rows(const RowKey& key, int episode, const EpisodeMetrics& m);

/// A parsed metrics.csv line.
struct MetricsRecord {
  std::string strategy;
  Lifetime lifetime = 0;
  double aggregate_rate = 0.0;
  std::uint64_t seed = 0;
  int episode = 0;
  double reliability = 0.0;
  Count arrivals = 0;
  Count deliveries = 0;
  Count dropped = 0;
  Count expired_lifetime = 0;
  Count expired_effective = 0;
  int drain_steps = 0;
  bool degenerate = false;
  bool operator==(const MetricsRecord&) const = default;
};

/// Parses a metrics CSV (header checked). Throws ConfigError on malformed input.
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);
std::string write_metrics_csv(std::span<const MetricsRecord> rows);

/// Per (strategy, lifetime, aggregate rate) summary over seeds and episodes.
struct SummaryRow {
  Strategy strategy{};
  Lifetime lifetime = 0;
  double aggregate_rate = 0.0;
  int episodes = 0;
  double mean_episode_reliability = 0.0;
  double std_episode_reliability = 0.0;
  double aggregate_reliability = 1.0;
  Count arrivals = 0;
  Count deliveries = 0;
  double mean_timely_throughput = 0.0;  // per arrival step
  int degenerate_episodes = 0;
};

class SummaryAccumulator {
 public:
  void add(const EpisodeMetrics& m);
  [[nodiscard]] SummaryRow finish(Strategy s, Lifetime lifetime, double aggregate_rate) const;

 private:
  std::vector<double> per_episode_;
  Count arrivals_ = 0;
  Count deliveries_ = 0;
  Count step_deliveries_ = 0;
  std::int64_t steps_ = 0;
  int degenerate_ = 0;
};

std::string summary_header();
std::string format_summary_row(const SummaryRow& row);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

}  // namespace dcmt

#endif  // DCMT_METRICS_HPP
