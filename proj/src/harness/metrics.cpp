#include "dcmt/metrics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt {

double reliability(Count deliveries, Count arrivals) {
  return arrivals == 0 ? 1.0 : static_cast<double>(deliveries) / static_cast<double>(arrivals);
}

EpisodeMetrics compute_metrics(std::span<const StepLog> logs, int arrival_steps) {
  EpisodeMetrics m;
  for (std::size_t t = 0; t < logs.size(); ++t) {
    const StepLog& log = logs[t];
    const Count a = log.total_arrivals();
    const Count d = log.total_deliveries();
    if (static_cast<int>(t) < arrival_steps) {
      m.step_arrivals.push_back(a);
      m.step_deliveries.push_back(d);
    } else {
      ++m.drain_steps;
    }
    m.arrivals += a;
    m.deliveries += d;
    m.dropped += log.total_drops();
    m.expired_lifetime += log.total_expired(ExpiryCause::lifetime);
    m.expired_effective += log.total_expired(ExpiryCause::effective_lifetime);
  }
  m.reliability = reliability(m.deliveries, m.arrivals);
  m.degenerate = m.arrivals == 0;
  return m;
}

std::string format_number(double v) { return fmt::format("{}", v); }

std::string metrics_header() {
  return "strategy,lifetime,aggregate_rate,seed,episode,reliability,arrivals,deliveries,dropped,"
         "expired_lifetime,expired_effective,drain_steps,degenerate";
}

std::string format_metrics_row(const RowKey& k, int episode, const EpisodeMetrics& m) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}", to_string(k.strategy), k.lifetime,
                     format_number(k.aggregate_rate), k.seed, episode, format_number(m.reliability), m.arrivals,
                     m.deliveries, m.dropped, m.expired_lifetime, m.expired_effective, m.drain_steps,
                     m.degenerate ? 1 : 0);
}

std::string steps_header() { return "strategy,lifetime,aggregate_rate,seed,episode,step,arrivals,timely_throughput"; }

std::string format_step_rows(const RowKey& k, int episode, const EpisodeMetrics& m) {
  std::string out;
  const std::string prefix =
      fmt::format("{},{},{},{},{}", to_string(k.strategy), k.lifetime, format_number(k.aggregate_rate), k.seed, episode);
  for (std::size_t t = 0; t < m.step_arrivals.size(); ++t)
    out += fmt::format("{},{},{},{}\n", prefix, t, m.step_arrivals[t], m.step_deliveries[t]);
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T number(const std::string& s, std::size_t line, const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(fmt::format("metrics csv line {}: bad {} '{}'", line, column, s));
  return v;
}

}  // namespace

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != metrics_header()) throw ConfigError("metrics csv: unexpected header");
  std::vector<MetricsRecord> rows;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 13) throw ConfigError(fmt::format("metrics csv line {}: expected 13 fields, got {}", n, f.size()));
    MetricsRecord r;
    r.strategy = f[0];
    if (!parse_strategy(r.strategy)) throw ConfigError(fmt::format("metrics csv line {}: unknown strategy", n));
    r.lifetime = number<Lifetime>(f[1], n, "lifetime");
    r.aggregate_rate = number<double>(f[2], n, "aggregate_rate");
    r.seed = number<std::uint64_t>(f[3], n, "seed");
    r.episode = number<int>(f[4], n, "episode");
    r.reliability = number<double>(f[5], n, "reliability");
    r.arrivals = number<Count>(f[6], n, "arrivals");
    r.deliveries = number<Count>(f[7], n, "deliveries");
    r.dropped = number<Count>(f[8], n, "dropped");
    r.expired_lifetime = number<Count>(f[9], n, "expired_lifetime");
    r.expired_effective = number<Count>(f[10], n, "expired_effective");
    r.drain_steps = number<int>(f[11], n, "drain_steps");
    const int deg = number<int>(f[12], n, "degenerate");
    if (deg != 0 && deg != 1) throw ConfigError(fmt::format("metrics csv line {}: degenerate must be 0 or 1", n));
    r.degenerate = deg == 1;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string write_metrics_csv(std::span<const MetricsRecord> rows) {
  std::string out = metrics_header() + "\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.strategy, r.lifetime,
                       format_number(r.aggregate_rate), r.seed, r.episode, format_number(r.reliability), r.arrivals,
                       r.deliveries, r.dropped, r.expired_lifetime, r.expired_effective, r.drain_steps,
                       r.degenerate ? 1 : 0);
  return out;
}

void SummaryAccumulator::add(const EpisodeMetrics& m) {
  per_episode_.push_back(m.reliability);
  arrivals_ += m.arrivals;
  deliveries_ += m.deliveries;
  for (Count d : m.step_deliveries) step_deliveries_ += d;
  steps_ += static_cast<std::int64_t>(m.step_deliveries.size());
  if (m.degenerate) ++degenerate_;
}

SummaryRow SummaryAccumulator::finish(Strategy s, Lifetime lifetime, double aggregate_rate) const {
  SummaryRow r;
  r.strategy = s;
  r.lifetime = lifetime;
  r.aggregate_rate = aggregate_rate;
  r.episodes = static_cast<int>(per_episode_.size());
  if (!per_episode_.empty()) {
    double sum = 0.0;
    for (double v : per_episode_) sum += v;
    r.mean_episode_reliability = sum / static_cast<double>(per_episode_.size());
    double sq = 0.0;
    for (double v : per_episode_) sq += (v - r.mean_episode_reliability) * (v - r.mean_episode_reliability);
    r.std_episode_reliability = std::sqrt(sq / static_cast<double>(per_episode_.size()));
  }
  r.aggregate_reliability = reliability(deliveries_, arrivals_);
  r.arrivals = arrivals_;
  r.deliveries = deliveries_;
  r.mean_timely_throughput = steps_ == 0 ? 0.0 : static_cast<double>(step_deliveries_) / static_cast<double>(steps_);
  r.degenerate_episodes = degenerate_;
  return r;
}

std::string summary_header() {
  return "strategy,lifetime,aggregate_rate,episodes,mean_episode_reliability,std_episode_reliability,"
         "aggregate_reliability,arrivals,deliveries,mean_timely_throughput,degenerate_episodes";
}

std::string format_summary_row(const SummaryRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", to_string(r.strategy), r.lifetime,
                     format_number(r.aggregate_rate), r.episodes, format_number(r.mean_episode_reliability),
                     format_number(r.std_episode_reliability), format_number(r.aggregate_reliability), r.arrivals,
                     r.deliveries, format_number(r.mean_timely_throughput), r.degenerate_episodes);
}

}  // namespace dcmt
