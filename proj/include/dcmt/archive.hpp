#ifndef DCMT_ARCHIVE_HPP
#define DCMT_ARCHIVE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcmt/step_log.hpp"
#include "dcmt/strategy.hpp"

namespace dcmt {

/// One JSONL line: {"episode":e,"t":t,"arrivals":[...],"admissions":[[p,n],...],
/// "flows":[[edge,p,l,n],...],"drops":[[node,p,l,n],...],
/// "expiries":[[node,p,l,n,cause],...],"deliveries":[[c,l,n],...]}.
std::string steplog_line(const StepLog& log, int episode);
/// Throws FileError on malformed records.
StepLog parse_steplog_line(const std::string& line, int& episode);

/// All episodes of one (strategy, grid point, seed).
struct ArchiveShard {
  std::string file;  // relative to the archive directory
  Strategy strategy{};
  Lifetime lifetime = 0;
  double rate = 0.0;  // per commodity
  double aggregate_rate = 0.0;
  std::uint64_t seed = 0;
  int episodes = 0;
};

struct ArchiveManifest {
  nlohmann::json config;  // canonical experiment document
  int arrival_steps = 0;
  bool drain = true;
  std::string metrics_file;  // relative to the run directory
  std::string steps_file;
  std::vector<ArchiveShard> shards;
};

inline constexpr const char* kArchiveManifest = "manifest.json";

void write_manifest(const std::filesystem::path& archive_dir, const ArchiveManifest& m);
ArchiveManifest read_manifest(const std::filesystem::path& archive_dir);

std::string shard_file_name(Strategy s, Lifetime lifetime, double rate, std::uint64_t seed);

}  // namespace dcmt

#endif  // DCMT_ARCHIVE_HPP
