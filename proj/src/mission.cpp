#include "fleet/mission.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>

#include "fleet/errors.hpp"
#include "fleet/util.hpp"

namespace fleet {

namespace {

int manhattan(StateId a, StateId b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

// One Manhattan-path step, vertical leg first. to != from.
Action step_toward(StateId from, StateId to) {
  if (to.row < from.row) return Action::North;
  if (to.row > from.row) return Action::South;
  if (to.col < from.col) return Action::West;
  return Action::East;
}

void validate_reward_spec(const RewardSpec& r, int m) {
  FLEET_REQUIRE(static_cast<int>(r.weights.size()) == m,
                "reward weights length does not match feature count");
  for (double w : r.weights) {
    FLEET_REQUIRE(std::isfinite(w) && w >= 0.0 && w <= 1.0, "reward weight outside [0, 1]");
  }
  FLEET_REQUIRE(std::isfinite(r.t_u) && r.t_u >= 0.0 && r.t_u <= static_cast<double>(m),
                "t_u outside [0, feature count]");
  FLEET_REQUIRE(r.t_v >= 0, "t_v must be non-negative");
}

struct AgentRt {
  int idx = 0;
  std::vector<int> groups;
  size_t gi = 0;
  std::set<int> gated;
  StateId pos;
  std::optional<StateId> prev_sensed;
  std::set<StateId> visited;
  std::map<int, double> group_u;
  FeatureSpace fs;
  QTable work;
  const ModelEnsemble* ens = nullptr;
  double energy = 0;
  bool started = false;
  bool done = false;
  Rng rng{0};
};

struct Driver {
  const FleetSpec& spec;
  const ExecutionContext& ctx;
  const RewardSpec& rspec;
  const MissionOptions& opts;
  ClusterHook* cluster;
  double eps;

  std::map<int, std::vector<StateId>> group_cells;
  std::vector<AgentRt> agents;
  std::map<StateId, Ssv> sensed;
  std::vector<Transition> rows;
  long long tick = 0;

  std::vector<StateId> remaining(const AgentRt& a, int g) const {
    std::vector<StateId> out;
    for (StateId s : group_cells.at(g)) {
      if (!a.visited.count(s)) out.push_back(s);
    }
    return out;
  }

  // Skips groups that are gated or fully visited; flags the agent done when
  // nothing assigned remains.
  void advance(AgentRt& a) {
    while (a.gi < a.groups.size()) {
      int g = a.groups[a.gi];
      if (a.gated.count(g) || remaining(a, g).empty()) {
        ++a.gi;
        continue;
      }
      return;
    }
    a.done = true;
  }

  void sense(AgentRt& a, StateId from, Action act, bool linked) {
    std::vector<double> raw = spec.map.sense(ctx, a.pos);
    FLEET_REQUIRE(static_cast<int>(raw.size()) == spec.map.m,
                  "map plug returned the wrong feature count");
    std::vector<double> feats = normalize_features(raw, spec.map.norms);
    double r = reward(feats, rspec);
    int g = group_of(a.pos, ctx.width, spec.tile);
    a.fs.groups[g].push_back(Ssv{a.pos, feats});
    a.group_u[g] += r;
    a.visited.insert(a.pos);
    sensed[a.pos] = Ssv{a.pos, feats};

    bool learned = false;
    if (linked) {
      a.work.update(from, act, a.pos, r, spec.params, valid_actions(a.pos, ctx));
      learned = true;
    }
    Gate gate = Gate::Stay;
    if (opts.gate_enabled) gate = ha_gate_counts(a.fs.group_visits(g), a.group_u[g], rspec);
    if (gate == Gate::Leave) a.gated.insert(g);

    rows.push_back(Transition{a.idx, tick, from, act, a.pos, feats, r, g,
                              gate == Gate::Leave, learned});
    a.prev_sensed = a.pos;
    if (cluster) cluster->on_sense(a.idx, tick);
    advance(a);
  }

  void step(AgentRt& a) {
    if (a.done) {
      a.energy += spec.energy.idle_j;
      return;
    }
    if (!a.started) {
      a.started = true;
      a.energy += spec.energy.sense_j;
      sense(a, a.pos, Action::SenseHold, false);
      return;
    }
    advance(a);
    if (a.done) {
      a.energy += spec.energy.idle_j;
      return;
    }

    int g = a.groups[a.gi];
    std::vector<StateId> targets = remaining(a, g);
    // Moves that land on an unvisited state of the current group, in ordinal
    // order. SenseHold never qualifies: the agent's own cell is either
    // already sensed or outside the group.
    std::vector<Action> explore;
    for (Action act : valid_actions(a.pos, ctx)) {
      if (act == Action::SenseHold) continue;
      StateId to = apply_action(a.pos, act);
      if (std::find(targets.begin(), targets.end(), to) != targets.end()) {
        explore.push_back(act);
      }
    }

    if (!explore.empty()) {
      Action sel = opts.mode == SelectionMode::Frozen
                       ? ensemble_select(*a.ens, a.pos, explore, eps, a.rng)
                       : select_action(a.work, a.pos, explore, eps, a.rng);
      StateId from = a.pos;
      a.pos = apply_action(a.pos, sel);
      a.energy += spec.energy.move_j + spec.energy.sense_j;
      bool linked = a.prev_sensed.has_value() && *a.prev_sensed == from;
      sense(a, from, sel, linked);
      return;
    }

    // No adjacent unvisited group state: take one path step toward the
    // nearest one. Cells flown over are not sensed, so this never lands on a
    // target (an adjacent target would have put a move in explore).
    StateId target = targets.front();
    int best = manhattan(a.pos, target);
    for (StateId s : targets) {
      int d = manhattan(a.pos, s);
      if (d < best) {
        best = d;
        target = s;
      }
    }
    a.pos = apply_action(a.pos, step_toward(a.pos, target));
    a.energy += spec.energy.move_j;
  }

  double agent_energy_total() const {
    double e = 0;
    for (const AgentRt& a : agents) e += a.energy;
    return e;
  }

  EvalReport evaluate() const {
    EvalInput in;
    in.context = &ctx;
    in.sensed = &sensed;
    in.mission_steps = tick;
    in.agent_energy = agent_energy_total();
    in.edge_energy = cluster ? cluster->edge_energy() : 0.0;
    EvalReport rep = spec.eval(in);
    rep.metrics["mission_steps"] = static_cast<double>(tick);
    rep.metrics["agent_energy"] = in.agent_energy;
    rep.metrics["edge_energy"] = in.edge_energy;
    rep.metrics["coverage"] =
        ctx.n_states() > 0 ? static_cast<double>(sensed.size()) / ctx.n_states() : 1.0;
    rep.finished = goals_met(spec.goals, rep);
    return rep;
  }
};

}  // namespace

void validate_fleetspec(const FleetSpec& spec) {
  FLEET_REQUIRE(spec.n_agents >= 1, "n_agents must be at least 1");
  FLEET_REQUIRE(spec.tile >= 1, "tile must be at least 1");
  FLEET_REQUIRE(spec.map.m >= 1, "feature count must be at least 1");
  FLEET_REQUIRE(static_cast<int>(spec.map.norms.size()) == spec.map.m,
                "normalization ranges must match the feature count");
  FLEET_REQUIRE(static_cast<bool>(spec.map.sense), "map plug missing");
  FLEET_REQUIRE(static_cast<bool>(spec.eval), "eval plug missing");
  validate_learning_params(spec.params);
  for (const Goal& g : spec.goals) {
    FLEET_REQUIRE(std::isfinite(g.target), "goal target must be finite");
  }
  FLEET_REQUIRE(spec.energy.move_j >= 0 && spec.energy.sense_j >= 0 && spec.energy.idle_j >= 0,
                "energy rates must be non-negative");
}

std::vector<std::vector<int>> partition_states(const ExecutionContext& ctx, int n_agents,
                                               int tile) {
  FLEET_REQUIRE(n_agents >= 1, "n_agents must be at least 1");
  FLEET_REQUIRE(tile >= 1, "tile must be at least 1");
  int total = group_count(ctx.width, ctx.height, tile);
  FLEET_REQUIRE(n_agents <= total, "more agents than state groups");
  int base = total / n_agents;
  int extra = total % n_agents;
  std::vector<std::vector<int>> parts(n_agents);
  int g = 0;
  for (int i = 0; i < n_agents; ++i) {
    int len = base + (i < extra ? 1 : 0);
    for (int k = 0; k < len; ++k) parts[i].push_back(g++);
  }
  return parts;
}

ModelEnsemble make_single_ensemble(const QTable& table) {
  ModelEnsemble e;
  e.models.push_back(std::make_shared<QTable>(table));
  e.weights.push_back(1.0);
  return e;
}

MissionResult run_mission(const FleetSpec& spec, const ExecutionContext& ctx,
                          const std::vector<ModelEnsemble>& models, const RewardSpec& rspec,
                          ClusterHook* cluster, uint64_t seed, const MissionOptions& opts) {
  validate_fleetspec(spec);
  validate_context(ctx);
  validate_reward_spec(rspec, spec.map.m);
  FLEET_REQUIRE(static_cast<int>(models.size()) == spec.n_agents,
                "models must cover all agents");
  for (const ModelEnsemble& e : models) validate_ensemble(e);
  if (opts.mode == SelectionMode::Live) {
    for (const ModelEnsemble& e : models) {
      FLEET_REQUIRE(e.models.size() == 1, "live selection requires single-model ensembles");
    }
  }
  FLEET_REQUIRE(opts.epsilon <= 1.0, "epsilon above 1");

  double eps = opts.epsilon >= 0.0 ? opts.epsilon : spec.params.epsilon0;
  Driver d{spec, ctx, rspec, opts, cluster, eps, {}, {}, {}, {}, 0};

  std::vector<std::vector<int>> parts = partition_states(ctx, spec.n_agents, spec.tile);
  for (const std::vector<int>& part : parts) {
    for (int g : part) d.group_cells[g] = group_states(g, ctx.width, ctx.height, spec.tile);
  }

  Rng root(seed);
  d.agents.resize(spec.n_agents);
  for (int i = 0; i < spec.n_agents; ++i) {
    AgentRt& a = d.agents[i];
    a.idx = i;
    a.groups = parts[i];
    a.rng = root.fork(static_cast<uint64_t>(i) + 1);
    a.work = *models[i].models[0];
    a.ens = &models[i];
    a.pos = d.group_cells.at(a.groups.front()).front();
  }

  // Pathing shortens the distance to an unvisited target every tick, so this
  // bound is never reached; it guards the termination invariant.
  const long long max_ticks =
      static_cast<long long>(ctx.n_states()) * (ctx.width + ctx.height + 2) * 2 + 64;
  while (true) {
    bool all_done = true;
    for (const AgentRt& a : d.agents) {
      if (!a.done) {
        all_done = false;
        break;
      }
    }
    if (all_done) break;
    ++d.tick;
    FLEET_REQUIRE(d.tick <= max_ticks, "mission failed to terminate");
    for (AgentRt& a : d.agents) d.step(a);
    if (cluster) cluster->on_tick(d.tick);
    if (opts.stop_on_goals && d.evaluate().finished) break;
  }
  if (cluster) cluster->on_mission_end(d.tick);

  MissionResult res;
  res.report = d.evaluate();
  res.trace.transitions = std::move(d.rows);
  res.trace.report = res.report;
  res.steps = d.tick;
  for (AgentRt& a : d.agents) {
    res.tables.push_back(std::move(a.work));
    res.agent_energy.push_back(a.energy);
  }
  return res;
}

std::vector<StateId> boustrophedon_band(const ExecutionContext& ctx, int n_agents, int agent) {
  FLEET_REQUIRE(n_agents >= 1 && n_agents <= ctx.height,
                "agents must not exceed the row count");
  FLEET_REQUIRE(agent >= 0 && agent < n_agents, "agent index out of range");
  int base = ctx.height / n_agents;
  int extra = ctx.height % n_agents;
  int start = agent * base + std::min(agent, extra);
  int len = base + (agent < extra ? 1 : 0);
  std::vector<StateId> out;
  for (int j = 0; j < len; ++j) {
    int r = start + j;
    if (j % 2 == 0) {
      for (int c = 0; c < ctx.width; ++c) out.push_back(StateId{r, c});
    } else {
      for (int c = ctx.width - 1; c >= 0; --c) out.push_back(StateId{r, c});
    }
  }
  return out;
}

EvalReport baseline_automated(const FleetSpec& spec, const ExecutionContext& ctx,
                              double coverage_goal) {
  validate_fleetspec(spec);
  validate_context(ctx);
  FLEET_REQUIRE(coverage_goal > 0.0 && coverage_goal <= 1.0,
                "coverage goal must lie in (0, 1]");

  std::vector<std::vector<StateId>> plans;
  for (int i = 0; i < spec.n_agents; ++i) plans.push_back(boustrophedon_band(ctx, spec.n_agents, i));
  std::vector<size_t> at(spec.n_agents, 0);
  std::map<StateId, Ssv> sensed;
  double energy = 0;
  long long tick = 0;

  while (static_cast<double>(sensed.size()) < coverage_goal * ctx.n_states()) {
    ++tick;
    bool moved = false;
    for (int i = 0; i < spec.n_agents; ++i) {
      if (at[i] >= plans[i].size()) {
        energy += spec.energy.idle_j;
        continue;
      }
      StateId s = plans[i][at[i]];
      energy += at[i] == 0 ? spec.energy.sense_j : spec.energy.move_j + spec.energy.sense_j;
      ++at[i];
      std::vector<double> raw = spec.map.sense(ctx, s);
      FLEET_REQUIRE(static_cast<int>(raw.size()) == spec.map.m,
                    "map plug returned the wrong feature count");
      sensed[s] = Ssv{s, normalize_features(raw, spec.map.norms)};
      moved = true;
    }
    FLEET_REQUIRE(moved, "coverage goal unreachable after a full sweep");
  }

  EvalInput in;
  in.context = &ctx;
  in.sensed = &sensed;
  in.mission_steps = tick;
  in.agent_energy = energy;
  in.edge_energy = 0;
  EvalReport rep = spec.eval(in);
  double coverage = static_cast<double>(sensed.size()) / ctx.n_states();
  rep.metrics["mission_steps"] = static_cast<double>(tick);
  rep.metrics["agent_energy"] = energy;
  rep.metrics["edge_energy"] = 0.0;
  rep.metrics["coverage"] = coverage;
  rep.metrics["visited"] = static_cast<double>(sensed.size());
  rep.finished = coverage >= coverage_goal;
  return rep;
}

MissionResult baseline_classic_rl(const FleetSpec& spec, const ExecutionContext& ctx,
                                  const std::vector<QTable>& tables, uint64_t seed) {
  FLEET_REQUIRE(static_cast<int>(tables.size()) == spec.n_agents,
                "tables must cover all agents");
  FLEET_REQUIRE(!spec.goals.empty(), "classic baseline needs at least one goal");
  RewardSpec uniform;
  uniform.weights.assign(spec.map.m, 1.0 / spec.map.m);
  uniform.t_u = spec.map.m;  // never consulted: the gate is disabled
  uniform.t_v = 1 << 30;
  std::vector<ModelEnsemble> models;
  models.reserve(tables.size());
  for (const QTable& t : tables) models.push_back(make_single_ensemble(t));
  MissionOptions o;
  o.mode = SelectionMode::Live;
  o.gate_enabled = false;
  o.stop_on_goals = true;
  return run_mission(spec, ctx, models, uniform, nullptr, seed, o);
}

QTable replay_trace(QTable start, const std::vector<Transition>& rows,
                    const LearningParams& params, const ExecutionContext& ctx,
                    const std::function<bool(const Transition&)>& keep) {
  for (const Transition& t : rows) {
    if (keep && !keep(t)) continue;
    if (!t.learned) continue;
    start.update(t.s, t.a, t.s_next, t.reward, params, valid_actions(t.s_next, ctx));
  }
  return start;
}

void save_trace_csv(const MissionTrace& trace, int m, const std::string& path) {
  std::string out = "agent,tick,s_r,s_c,action";
  for (int i = 0; i < m; ++i) {
    out += ",ssv";
    out += std::to_string(i);
  }
  out += ",reward,group,gate\n";
  for (const Transition& t : trace.transitions) {
    FLEET_REQUIRE(static_cast<int>(t.ssv.size()) == m, "transition feature width mismatch");
    out += std::to_string(t.agent);
    out += ',';
    out += std::to_string(t.tick);
    out += ',';
    out += std::to_string(t.s_next.row);
    out += ',';
    out += std::to_string(t.s_next.col);
    out += ',';
    out += std::to_string(static_cast<int>(t.a));
    for (double v : t.ssv) {
      out += ',';
      out += fmt_double(v);
    }
    out += ',';
    out += fmt_double(t.reward);
    out += ',';
    out += std::to_string(t.group);
    out += ',';
    out += t.gate_leave ? "leave" : "stay";
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace fleet
