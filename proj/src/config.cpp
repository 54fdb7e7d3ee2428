#include "fleet/config.hpp"

#include <fstream>
#include <memory>
#include <set>

#include "fleet/errors.hpp"
#include "json.hpp"

namespace fleet {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!j.is_object()) fail_io("config: " + where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!allowed.count(k)) fail_io("config: unknown field " + where + "." + k);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail_io("config: bad value for " + where + "." + key);
  }
}

std::vector<CostTerm> read_costs(const json& j, const std::string& where) {
  if (!j.is_array()) fail_io("config: " + where + " must be an array");
  std::vector<CostTerm> out;
  for (const json& e : j) {
    require_keys(e, {"metric", "weight", "scale"}, where);
    CostTerm t;
    read_field(e, "metric", t.metric, where);
    read_field(e, "weight", t.weight, where);
    read_field(e, "scale", t.scale, where);
    if (t.metric.empty()) fail_io("config: " + where + " entries need a metric");
    if (!(t.scale > 0)) fail_io("config: " + where + " scale must be positive");
    if (!(t.weight >= 0)) fail_io("config: " + where + " weight must be >= 0");
    out.push_back(std::move(t));
  }
  return out;
}

Goals read_goals(const json& j) {
  if (!j.is_array()) fail_io("config: goals must be an array");
  Goals out;
  for (const json& e : j) {
    require_keys(e, {"metric", "at_least", "target"}, "goals");
    Goal g;
    read_field(e, "metric", g.metric, "goals");
    read_field(e, "at_least", g.at_least, "goals");
    read_field(e, "target", g.target, "goals");
    if (g.metric.empty()) fail_io("config: goals entries need a metric");
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

MissionConfig load_mission_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) fail_io("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail_io("config: parse failure in " + path + ": " + e.what());
  }
  require_keys(j,
               {"app", "agents", "tile", "missions", "online", "cluster", "baseline",
                "seed", "seeds", "out", "goals", "learning", "reward", "energy", "crop",
                "camera", "shaping", "weights", "epsilon", "edge", "automated_coverage"},
               "config");

  MissionConfig cfg;
  read_field(j, "app", cfg.app, "config");
  read_field(j, "agents", cfg.agents, "config");
  read_field(j, "tile", cfg.tile, "config");
  read_field(j, "missions", cfg.missions, "config");
  read_field(j, "online", cfg.online, "config");
  read_field(j, "cluster", cfg.use_cluster, "config");
  read_field(j, "baseline", cfg.baseline, "config");
  read_field(j, "seed", cfg.seed, "config");
  read_field(j, "seeds", cfg.seeds, "config");
  read_field(j, "out", cfg.out_dir, "config");
  read_field(j, "automated_coverage", cfg.automated_coverage, "config");

  if (j.contains("goals")) cfg.goals = read_goals(j["goals"]);
  if (j.contains("learning")) {
    const json& l = j["learning"];
    require_keys(l, {"alpha", "gamma", "epsilon0", "epsilon_decay"}, "learning");
    read_field(l, "alpha", cfg.params.alpha, "learning");
    read_field(l, "gamma", cfg.params.gamma, "learning");
    read_field(l, "epsilon0", cfg.params.epsilon0, "learning");
    read_field(l, "epsilon_decay", cfg.params.epsilon_decay, "learning");
  }
  if (j.contains("reward")) {
    const json& r = j["reward"];
    require_keys(r, {"weights", "t_u", "t_v"}, "reward");
    read_field(r, "weights", cfg.reward.weights, "reward");
    read_field(r, "t_u", cfg.reward.t_u, "reward");
    read_field(r, "t_v", cfg.reward.t_v, "reward");
  }
  if (j.contains("energy")) {
    const json& e = j["energy"];
    require_keys(e, {"move_j", "sense_j", "idle_j"}, "energy");
    read_field(e, "move_j", cfg.energy.move_j, "energy");
    read_field(e, "sense_j", cfg.energy.sense_j, "energy");
    read_field(e, "idle_j", cfg.energy.idle_j, "energy");
  }
  if (j.contains("crop")) {
    const json& c = j["crop"];
    require_keys(c, {"width", "height", "smoothness", "noise", "drift"}, "crop");
    read_field(c, "width", cfg.crop.width, "crop");
    read_field(c, "height", cfg.crop.height, "crop");
    read_field(c, "smoothness", cfg.crop.smoothness, "crop");
    read_field(c, "noise", cfg.crop.noise, "crop");
    read_field(c, "drift", cfg.crop.drift, "crop");
  }
  if (j.contains("camera")) {
    const json& c = j["camera"];
    require_keys(c, {"cameras", "targets", "days", "drift", "window"}, "camera");
    read_field(c, "cameras", cfg.camera.cameras, "camera");
    read_field(c, "targets", cfg.camera.targets, "camera");
    read_field(c, "days", cfg.camera.days, "camera");
    read_field(c, "drift", cfg.camera.drift, "camera");
    read_field(c, "window", cfg.camera.window_minutes, "camera");
  }
  if (j.contains("shaping")) {
    const json& s = j["shaping"];
    require_keys(s, {"epochs", "candidates", "seed", "costs"}, "shaping");
    read_field(s, "epochs", cfg.shaping_epochs, "shaping");
    read_field(s, "candidates", cfg.shaping_candidates, "shaping");
    read_field(s, "seed", cfg.shaping_seed, "shaping");
    if (s.contains("costs")) cfg.shaping_costs = read_costs(s["costs"], "shaping.costs");
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    require_keys(w, {"epochs", "candidates", "costs"}, "weights");
    read_field(w, "epochs", cfg.weight_epochs, "weights");
    read_field(w, "candidates", cfg.weight_candidates, "weights");
    if (w.contains("costs")) cfg.weight_costs = read_costs(w["costs"], "weights.costs");
  }
  if (j.contains("epsilon")) {
    const json& e = j["epsilon"];
    require_keys(e, {"mission", "frozen"}, "epsilon");
    read_field(e, "mission", cfg.mission_epsilon, "epsilon");
    read_field(e, "frozen", cfg.frozen_epsilon, "epsilon");
  }
  if (j.contains("edge")) {
    const json& e = j["edge"];
    require_keys(e,
                 {"workers", "fragments", "autoscale", "active_watts", "idle_watts",
                  "sense_work"},
                 "edge");
    read_field(e, "workers", cfg.edge.n_workers, "edge");
    read_field(e, "fragments", cfg.edge.n_fragments, "edge");
    read_field(e, "autoscale", cfg.edge.autoscale, "edge");
    read_field(e, "active_watts", cfg.edge.active_watts, "edge");
    read_field(e, "idle_watts", cfg.edge.idle_watts, "edge");
    read_field(e, "sense_work", cfg.edge.sense_work, "edge");
  }

  validate_mission_config(cfg);
  return cfg;
}

void apply_overrides(MissionConfig& cfg, const ConfigOverrides& o) {
  if (o.app) cfg.app = *o.app;
  if (o.baseline) cfg.baseline = *o.baseline;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.agents) cfg.agents = *o.agents;
  if (o.missions) cfg.missions = *o.missions;
  if (o.seeds) cfg.seeds = *o.seeds;
  if (o.seed) cfg.seed = *o.seed;
  if (o.online) cfg.online = *o.online;
  if (o.use_cluster) cfg.use_cluster = *o.use_cluster;
}

void validate_mission_config(const MissionConfig& cfg) {
  if (cfg.app != "crop" && cfg.app != "camera")
    fail_io("config: app must be crop or camera, got " + cfg.app);
  if (cfg.agents < 1) fail_io("config: agents must be >= 1");
  if (cfg.tile < 1) fail_io("config: tile must be >= 1");
  if (cfg.missions < 1) fail_io("config: missions must be >= 1");
  if (cfg.seeds < 1) fail_io("config: seeds must be >= 1");
  if (!cfg.baseline.empty() && cfg.baseline != "automated" && cfg.baseline != "classic")
    fail_io("config: baseline must be automated or classic, got " + cfg.baseline);
  if (cfg.out_dir.empty()) fail_io("config: out must be nonempty");
  if (cfg.goals.empty()) fail_io("config: goals must be nonempty");
  for (const Goal& g : cfg.goals) {
    if (g.metric.empty()) fail_io("config: goals entries need a metric");
  }
  if (cfg.crop.width < 2 || cfg.crop.height < 2)
    fail_io("config: crop.width and crop.height must be >= 2");
  if (cfg.crop.smoothness < 0) fail_io("config: crop.smoothness must be >= 0");
  if (!(cfg.crop.noise >= 0)) fail_io("config: crop.noise must be >= 0");
  if (!(cfg.crop.drift >= 0 && cfg.crop.drift <= 1))
    fail_io("config: crop.drift must lie in [0, 1]");
  if (cfg.camera.cameras < 1) fail_io("config: camera.cameras must be >= 1");
  if (cfg.camera.targets < 1) fail_io("config: camera.targets must be >= 1");
  if (cfg.camera.days < 1) fail_io("config: camera.days must be >= 1");
  if (!(cfg.camera.drift >= 0 && cfg.camera.drift <= 1))
    fail_io("config: camera.drift must lie in [0, 1]");
  if (cfg.camera.window_minutes < 1) fail_io("config: camera.window must be >= 1");
  if (cfg.shaping_epochs < 1) fail_io("config: shaping.epochs must be >= 1");
  if (cfg.shaping_candidates < 1) fail_io("config: shaping.candidates must be >= 1");
  if (cfg.weight_epochs < 1) fail_io("config: weights.epochs must be >= 1");
  if (cfg.weight_candidates < 1) fail_io("config: weights.candidates must be >= 1");
  if (!(cfg.automated_coverage > 0 && cfg.automated_coverage <= 1))
    fail_io("config: automated_coverage must lie in (0, 1]");
  if (cfg.edge.n_workers < 1) fail_io("config: edge.workers must be >= 1");
  if (cfg.edge.n_fragments < 0) fail_io("config: edge.fragments must be >= 0");
}

FleetSpec build_crop_fleetspec(const MissionConfig& cfg) {
  FleetSpec spec = make_crop_fleetspec(cfg.agents, cfg.goals, cfg.params);
  spec.tile = cfg.tile;
  spec.energy = cfg.energy;
  for (int k = 0; k < cfg.missions; ++k) {
    spec.contexts.runtime.push_back(
        std::make_shared<const ExecutionContext>(gen_field_family(cfg.crop, cfg.seed, k)));
  }
  // Shaping fields are pinned so every seed of an experiment shapes against
  // the same pair.
  spec.contexts.shaping.push_back(
      std::make_shared<const ExecutionContext>(gen_field_family(cfg.crop, 9001, 0)));
  spec.contexts.shaping.push_back(
      std::make_shared<const ExecutionContext>(gen_field_family(cfg.crop, 9002, 0)));
  return spec;
}

}  // namespace fleet
