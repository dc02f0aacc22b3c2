#include "dcmt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "dcmt/errors.hpp"
#include "dcmt/nn/checkpoint.hpp"

namespace dcmt {

using nlohmann::json;

namespace {

/// Strict view of one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", where()));
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(fmt::format("{}: missing key '{}'", where(), key));
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = raw(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}.{}: wrong type", path_, key));
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  Section sub(const std::string& key) { return Section(raw(key), path_ + "." + key); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(fmt::format("{}: unknown key '{}'", where(), k));
  }

  [[nodiscard]] std::string child(const std::string& key) const { return path_ + "." + key; }

 private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

TrainSchedule parse_training(Section s) {
  TrainSchedule t;
  t.training_episodes = s.get_or("training_episodes", t.training_episodes);
  t.improvement_episodes = s.get_or("improvement_episodes", t.improvement_episodes);
  t.steps_per_episode = s.get_or("steps_per_episode", t.steps_per_episode);
  t.learning_rate = s.get_or("learning_rate", t.learning_rate);
  t.buffer_threshold_episodes = s.get_or("buffer_threshold_episodes", t.buffer_threshold_episodes);
  t.minibatch = s.get_or("minibatch", t.minibatch);
  t.updates_per_episode = s.get_or("updates_per_episode", t.updates_per_episode);
  t.epsilon_initial = s.get_or("epsilon_initial", t.epsilon_initial);
  t.epsilon_decay = s.get_or("epsilon_decay", t.epsilon_decay);
  t.epsilon_floor = s.get_or("epsilon_floor", t.epsilon_floor);
  t.gamma = s.get_or("gamma", t.gamma);
  t.tau = s.get_or("tau", t.tau);
  t.replay_capacity_episodes = s.get_or("replay_capacity_episodes", t.replay_capacity_episodes);
  t.hidden = s.get_or("hidden", t.hidden);
  const auto loss = s.get_or<std::string>("loss", "rmse");
  require(loss == "rmse" || loss == "mse", "training.loss: expected \"rmse\" or \"mse\"");
  t.rmse_loss = loss == "rmse";
  const auto reward = s.get_or<std::string>("reward", "timely");
  require(reward == "timely" || reward == "timely_minus_expired",
          "training.reward: expected \"timely\" or \"timely_minus_expired\"");
  t.reward = reward == "timely" ? RewardKind::timely : RewardKind::timely_minus_expired;
  t.reward_scale = s.get_or("reward_scale", t.reward_scale);
  s.finish();
  t.validate();
  return t;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Section root(doc, "");
  c.schema_version = root.get<int>("schema_version");
  require(c.schema_version == kSchemaVersion,
          fmt::format("schema_version {} is not supported (expected {})", c.schema_version, kSchemaVersion));
  c.name = root.get_or<std::string>("name", "");

  {
    Section topo = root.sub("topology");
    c.nodes = topo.get<std::vector<std::string>>("nodes");
    c.default_capacity = topo.get_or<Count>("default_capacity", c.default_capacity);
    require(c.default_capacity >= 0, "topology.default_capacity must be >= 0");
    const json& edges = topo.raw("edges");
    require(edges.is_array(), "topology.edges: expected an array");
    for (std::size_t k = 0; k < edges.size(); ++k) {
      Section e(edges[k], fmt::format("topology.edges[{}]", k));
      EdgeSpec spec{e.get<std::string>("from"), e.get<std::string>("to"),
                    e.get_or<Count>("capacity", c.default_capacity)};
      e.finish();
      c.edges.push_back(std::move(spec));
    }
    topo.finish();
  }
  {
    const json& list = root.raw("commodities");
    require(list.is_array() && !list.empty(), "commodities: expected a non-empty array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      Section e(list[k], fmt::format("commodities[{}]", k));
      c.commodities.push_back(CommoditySpec{e.get<std::string>("source"), e.get<std::string>("destination")});
      e.finish();
    }
  }
  {
    Section grid = root.sub("grid");
    c.lifetimes = grid.get<std::vector<Lifetime>>("lifetimes");
    c.rates = grid.get<std::vector<double>>("rates");
    grid.finish();
    require(!c.lifetimes.empty(), "grid.lifetimes must not be empty");
    require(!c.rates.empty(), "grid.rates must not be empty");
    for (Lifetime l : c.lifetimes) require(l >= 1, "grid.lifetimes entries must be >= 1");
    for (double r : c.rates) require(std::isfinite(r) && r >= 0.0, "grid.rates entries must be finite and >= 0");
  }
  {
    for (const auto& name : root.get<std::vector<std::string>>("strategies")) {
      const auto s = parse_strategy(name);
      if (!s) throw UnknownStrategyError(name);
      c.strategies.push_back(*s);
    }
    require(!c.strategies.empty(), "strategies must not be empty");
  }
  c.seeds = root.get<std::vector<std::uint64_t>>("seeds");
  require(!c.seeds.empty(), "seeds must not be empty");

  if (root.has("evaluation")) {
    Section ev = root.sub("evaluation");
    c.evaluation.episodes = ev.get_or("episodes", c.evaluation.episodes);
    c.evaluation.steps_per_episode = ev.get_or("steps_per_episode", c.evaluation.steps_per_episode);
    c.evaluation.drain = ev.get_or("drain", c.evaluation.drain);
    ev.finish();
    require(c.evaluation.episodes >= 1, "evaluation.episodes must be >= 1");
    require(c.evaluation.steps_per_episode >= 1, "evaluation.steps_per_episode must be >= 1");
  }
  if (root.has("training")) c.training = parse_training(root.sub("training"));
  if (root.has("normalizers")) {
    Section n = root.sub("normalizers");
    c.normalizers.queue = n.get_or("queue", c.normalizers.queue);
    c.normalizers.arrival = n.get_or("arrival", c.normalizers.arrival);
    n.finish();
    require(c.normalizers.queue > 0.0 && c.normalizers.arrival > 0.0, "normalizers must be positive");
  }
  if (root.has("output")) {
    Section o = root.sub("output");
    c.output.directory = o.get_or("directory", c.output.directory);
    c.output.archive_steplogs = o.get_or("archive_steplogs", c.output.archive_steplogs);
    o.finish();
  }
  root.finish();

  // Surface topology and commodity problems now rather than at the first grid point.
  build_network(c, c.lifetimes.front(), c.rates.front());
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw FileError(fmt::format("cannot open config '{}'", file.string()));
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", file.string(), e.what()));
  }
  return parse_config(doc);
}

namespace {

json training_json(const TrainSchedule& t) {
  return {{"training_episodes", t.training_episodes},
          {"improvement_episodes", t.improvement_episodes},
          {"steps_per_episode", t.steps_per_episode},
          {"learning_rate", t.learning_rate},
          {"buffer_threshold_episodes", t.buffer_threshold_episodes},
          {"minibatch", t.minibatch},
          {"updates_per_episode", t.updates_per_episode},
          {"epsilon_initial", t.epsilon_initial},
          {"epsilon_decay", t.epsilon_decay},
          {"epsilon_floor", t.epsilon_floor},
          {"gamma", t.gamma},
          {"tau", t.tau},
          {"replay_capacity_episodes", t.replay_capacity_episodes},
          {"hidden", t.hidden},
          {"loss", t.rmse_loss ? "rmse" : "mse"},
          {"reward", t.reward == RewardKind::timely ? "timely" : "timely_minus_expired"},
          {"reward_scale", t.reward_scale}};
}

json topology_json(const ExperimentConfig& c) {
  json edges = json::array();
  for (const auto& e : c.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"capacity", e.capacity}});
  return {{"nodes", c.nodes}, {"default_capacity", c.default_capacity}, {"edges", edges}};
}

json commodities_json(const ExperimentConfig& c) {
  json list = json::array();
  for (const auto& k : c.commodities) list.push_back({{"source", k.source}, {"destination", k.destination}});
  return list;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  std::vector<std::string> strategies;
  for (Strategy s : c.strategies) strategies.emplace_back(to_string(s));
  return {{"schema_version", c.schema_version},
          {"name", c.name},
          {"topology", topology_json(c)},
          {"commodities", commodities_json(c)},
          {"grid", {{"lifetimes", c.lifetimes}, {"rates", c.rates}}},
          {"strategies", strategies},
          {"seeds", c.seeds},
          {"evaluation",
           {{"episodes", c.evaluation.episodes},
            {"steps_per_episode", c.evaluation.steps_per_episode},
            {"drain", c.evaluation.drain}}},
          {"training", training_json(c.training)},
          {"normalizers", {{"queue", c.normalizers.queue}, {"arrival", c.normalizers.arrival}}},
          {"output", {{"directory", c.output.directory}, {"archive_steplogs", c.output.archive_steplogs}}}};
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  return nn::fnv1a(text.data(), text.size());
}

std::uint64_t training_hash(const ExperimentConfig& cfg, Lifetime lifetime, double rate) {
  const json doc = {{"topology", topology_json(cfg)},
                    {"commodities", commodities_json(cfg)},
                    {"training", training_json(cfg.training)},
                    {"normalizers", {{"queue", cfg.normalizers.queue}, {"arrival", cfg.normalizers.arrival}}},
                    {"lifetime", lifetime},
                    {"rate", rate}};
  const std::string text = doc.dump();
  return nn::fnv1a(text.data(), text.size());
}

Topology build_topology(const ExperimentConfig& cfg) {
  std::vector<Edge> edges;
  auto index_of = [&](const std::string& name, const std::string& where) {
    for (std::size_t k = 0; k < cfg.nodes.size(); ++k)
      if (cfg.nodes[k] == name) return NodeId(k);
    throw ConfigError(fmt::format("{}: unknown node '{}'", where, name));
  };
  for (std::size_t k = 0; k < cfg.edges.size(); ++k) {
    const auto where = fmt::format("topology.edges[{}]", k);
    edges.push_back(Edge{index_of(cfg.edges[k].from, where), index_of(cfg.edges[k].to, where), cfg.edges[k].capacity});
  }
  return Topology(cfg.nodes, std::move(edges));
}

std::shared_ptr<const Network> build_network(const ExperimentConfig& cfg, Lifetime lifetime, double rate) {
  Topology topo = build_topology(cfg);
  std::vector<Commodity> commodities;
  for (std::size_t k = 0; k < cfg.commodities.size(); ++k) {
    const auto& spec = cfg.commodities[k];
    const auto s = topo.find_node(spec.source);
    const auto d = topo.find_node(spec.destination);
    if (!s || !d) throw ConfigError(fmt::format("commodities[{}]: unknown endpoint", k));
    commodities.push_back(Commodity{CommodityId(k), *s, *d, lifetime, rate});
  }
  return std::make_shared<const Network>(std::move(topo), std::move(commodities));
}

}  // namespace dcmt
