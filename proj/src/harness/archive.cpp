#include "dcmt/archive.hpp"

#include <fstream>

#include <fmt/format.h>

#include "dcmt/errors.hpp"
#include "dcmt/metrics.hpp"

namespace dcmt {

using nlohmann::json;

std::string steplog_line(const StepLog& log, int episode) {
  json adm = json::array(), flows = json::array(), drops = json::array(), exp = json::array(), del = json::array();
  for (const auto& a : log.admissions) adm.push_back({a.path.value, a.count});
  for (const auto& f : log.flows) flows.push_back({f.edge.value, f.path.value, f.lifetime, f.count});
  for (const auto& d : log.drops) drops.push_back({d.node.value, d.path.value, d.lifetime, d.count});
  for (const auto& e : log.expiries)
    exp.push_back({e.node.value, e.path.value, e.lifetime, e.count, static_cast<int>(e.cause)});
  for (const auto& d : log.deliveries) del.push_back({d.commodity.value, d.lifetime, d.count});
  json j = {{"episode", episode}, {"t", log.timestep},   {"arrivals", log.arrivals}, {"admissions", adm},
            {"flows", flows},     {"drops", drops},      {"expiries", exp},          {"deliveries", del}};
  return j.dump();
}

StepLog parse_steplog_line(const std::string& line, int& episode) {
  StepLog log;
  try {
    const json j = json::parse(line);
    episode = j.at("episode").get<int>();
    log.timestep = j.at("t").get<std::int64_t>();
    log.arrivals = j.at("arrivals").get<std::vector<Count>>();
    for (const auto& a : j.at("admissions"))
      log.admissions.push_back({PathId(a.at(0).get<std::int32_t>()), a.at(1).get<Count>()});
    for (const auto& f : j.at("flows"))
      log.flows.push_back({EdgeId(f.at(0).get<std::int32_t>()), PathId(f.at(1).get<std::int32_t>()),
                           f.at(2).get<Lifetime>(), f.at(3).get<Count>()});
    for (const auto& d : j.at("drops"))
      log.drops.push_back({NodeId(d.at(0).get<std::int32_t>()), PathId(d.at(1).get<std::int32_t>()),
                           d.at(2).get<Lifetime>(), d.at(3).get<Count>()});
    for (const auto& e : j.at("expiries")) {
      const int cause = e.at(4).get<int>();
      if (cause != 0 && cause != 1) throw FileError("steplog: unknown expiry cause");
      log.expiries.push_back({NodeId(e.at(0).get<std::int32_t>()), PathId(e.at(1).get<std::int32_t>()),
                              e.at(2).get<Lifetime>(), e.at(3).get<Count>(), static_cast<ExpiryCause>(cause)});
    }
    for (const auto& d : j.at("deliveries"))
      log.deliveries.push_back({CommodityId(d.at(0).get<std::int32_t>()), d.at(1).get<Lifetime>(), d.at(2).get<Count>()});
  } catch (const json::exception& e) {
    throw FileError(fmt::format("steplog: malformed record: {}", e.what()));
  }
  return log;
}

void write_manifest(const std::filesystem::path& dir, const ArchiveManifest& m) {
  json shards = json::array();
  for (const auto& s : m.shards)
    shards.push_back({{"file", s.file},
                      {"strategy", std::string(to_string(s.strategy))},
                      {"lifetime", s.lifetime},
                      {"rate", s.rate},
                      {"aggregate_rate", s.aggregate_rate},
                      {"seed", s.seed},
                      {"episodes", s.episodes}});
  const json j = {{"format", "dcmt-steplog-archive"},
                  {"version", 1},
                  {"config", m.config},
                  {"arrival_steps", m.arrival_steps},
                  {"drain", m.drain},
                  {"metrics_file", m.metrics_file},
                  {"steps_file", m.steps_file},
                  {"shards", shards}};
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / kArchiveManifest, std::ios::trunc);
  if (!os) throw FileError(fmt::format("cannot write '{}'", (dir / kArchiveManifest).string()));
  os << j.dump(2) << '\n';
}

ArchiveManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream is(dir / kArchiveManifest);
  if (!is) throw FileError(fmt::format("no archive manifest in '{}'", dir.string()));
  ArchiveManifest m;
  try {
    const json j = json::parse(is);
    if (j.at("format").get<std::string>() != "dcmt-steplog-archive" || j.at("version").get<int>() != 1)
      throw FileError("unsupported archive format");
    m.config = j.at("config");
    m.arrival_steps = j.at("arrival_steps").get<int>();
    m.drain = j.at("drain").get<bool>();
    m.metrics_file = j.at("metrics_file").get<std::string>();
    m.steps_file = j.at("steps_file").get<std::string>();
    for (const auto& s : j.at("shards")) {
      ArchiveShard a;
      a.file = s.at("file").get<std::string>();
      const auto strategy = parse_strategy(s.at("strategy").get<std::string>());
      if (!strategy) throw FileError("archive: unknown strategy in manifest");
      a.strategy = *strategy;
      a.lifetime = s.at("lifetime").get<Lifetime>();
      a.rate = s.at("rate").get<double>();
      a.aggregate_rate = s.at("aggregate_rate").get<double>();
      a.seed = s.at("seed").get<std::uint64_t>();
      a.episodes = s.at("episodes").get<int>();
      m.shards.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw FileError(fmt::format("malformed archive manifest: {}", e.what()));
  }
  return m;
}

std::string shard_file_name(Strategy s, Lifetime lifetime, double rate, std::uint64_t seed) {
  return fmt::format("{}_L{}_r{}_s{}.jsonl", to_string(s), lifetime, format_number(rate), seed);
}

}  // namespace dcmt
