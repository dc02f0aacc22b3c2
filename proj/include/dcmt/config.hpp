#ifndef DCMT_CONFIG_HPP
#define DCMT_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcmt/agents.hpp"
#include "dcmt/maddpg.hpp"
#include "dcmt/network.hpp"
#include "dcmt/strategy.hpp"

namespace dcmt {

inline constexpr int kSchemaVersion = 1;

struct EdgeSpec {
  std::string from;
  std::string to;
  Count capacity = 0;
};

struct CommoditySpec {
  std::string source;
  std::string destination;
};

struct EvaluationConfig {
  int episodes = 500;
  int steps_per_episode = 50;
  /// After the arrival steps, keep stepping with no arrivals until every queue is empty.
  bool drain = true;
};

struct OutputConfig {
  std::string directory = "runs";
  bool archive_steplogs = true;
};

/// One experiment document. Every commodity shares the grid's lifetime and
/// per-commodity mean arrival rate at a given grid point.
struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  std::vector<std::string> nodes;
  Count default_capacity = 10;
  std::vector<EdgeSpec> edges;
  std::vector<CommoditySpec> commodities;
  std::vector<Lifetime> lifetimes;
  std::vector<double> rates;  // per commodity
  std::vector<Strategy> strategies;
  std::vector<std::uint64_t> seeds;
  EvaluationConfig evaluation;
  TrainSchedule training;
  Normalizers normalizers;
  OutputConfig output;
};

/// Throws ConfigError with the offending key on any schema problem (unknown keys included).
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Throws FileError when unreadable, ConfigError when malformed.
ExperimentConfig load_config(const std::filesystem::path& file);
/// Fully populated canonical document; parsing it back yields the same document.
nlohmann::json to_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);
/// Hash of what determines a training run at one grid point (ignores seeds, strategies, evaluation, output).
std::uint64_t training_hash(const ExperimentConfig& cfg, Lifetime lifetime, double rate);

Topology build_topology(const ExperimentConfig& cfg);
std::shared_ptr<const Network> build_network(const ExperimentConfig& cfg, Lifetime lifetime, double rate);

}  // namespace dcmt

#endif  // DCMT_CONFIG_HPP
