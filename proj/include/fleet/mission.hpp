#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fleet/core.hpp"
#include "fleet/models.hpp"
#include "fleet/rng.hpp"

namespace fleet {

// Application sensing plug: raw per-state features plus the normalization
// ranges that map them onto [0,1]^m.
struct MapPlug {
  int m = 0;
  std::vector<std::pair<double, double>> norms;
  std::function<std::vector<double>(const ExecutionContext&, StateId)> sense;
};

// Everything an application Eval gets to look at. sensed holds one SSV per
// visited state, merged across agents (partitions are disjoint, so no state
// appears twice).
struct EvalInput {
  const ExecutionContext* context = nullptr;
  const std::map<StateId, Ssv>* sensed = nullptr;
  long long mission_steps = 0;
  double agent_energy = 0;
  double edge_energy = 0;
};

// Builds metrics and the optional artifact. The driver owns the
// mission_steps, agent_energy, edge_energy and coverage entries and
// overwrites them after the plug returns; finished is set from the goals.
using EvalPlug = std::function<EvalReport(const EvalInput&)>;

// Per-action energy costs in joules. Placeholders calibrated for relative
// comparisons only.
struct EnergyRates {
  double move_j = 55.0;
  double sense_j = 10.0;
  double idle_j = 5.0;
};

struct ContextSet {
  std::vector<std::shared_ptr<const ExecutionContext>> shaping;
  std::vector<std::shared_ptr<const ExecutionContext>> retrain;
  std::vector<std::shared_ptr<const ExecutionContext>> runtime;
};

// The complete application description the driver can run.
struct FleetSpec {
  int n_agents = 1;
  int tile = 3;
  ContextSet contexts;
  MapPlug map;
  EvalPlug eval;
  LearningParams params;
  Goals goals;
  EnergyRates energy;
};

void validate_fleetspec(const FleetSpec& spec);

// How actions are chosen during the mission. Live reads the same table the
// Bellman updates write (training, baselines). Frozen reads an immutable
// ensemble while updates go to a separate working copy, so a one-hot
// ensemble reproduces the single-model trace exactly.
enum class SelectionMode : uint8_t { Live = 0, Frozen = 1 };

// One sense event. s -> s_next is a single grid action when learned is
// true; rows with learned=false (mission start, arrival after a relocation
// leg) carry no Bellman update.
struct Transition {
  int agent = 0;
  long long tick = 0;
  StateId s;
  Action a = Action::SenseHold;
  StateId s_next;
  std::vector<double> ssv;
  double reward = 0;
  int group = 0;
  bool gate_leave = false;
  bool learned = false;
};

struct MissionTrace {
  std::vector<Transition> transitions;
  EvalReport report;
};

// Observer interface for the edge cluster. The driver never hands it a
// random stream, so attaching one cannot change agent trajectories.
struct ClusterHook {
  virtual ~ClusterHook() = default;
  virtual void on_sense(int agent, long long tick) = 0;
  virtual void on_tick(long long tick) = 0;
  virtual void on_mission_end(long long tick) = 0;
  virtual double edge_energy() const = 0;
};

struct MissionOptions {
  SelectionMode mode = SelectionMode::Live;
  bool gate_enabled = true;
  // Evaluate after every tick and stop once all goals hold (classic-RL
  // termination rule).
  bool stop_on_goals = false;
  // Exploration rate for this mission; negative means params.epsilon0.
  double epsilon = -1.0;
};

struct MissionResult {
  EvalReport report;
  MissionTrace trace;
  std::vector<QTable> tables;  // per-agent working tables after the mission
  std::vector<double> agent_energy;
  long long steps = 0;
};

// Splits the state groups into contiguous row-major bands, one per agent,
// sizes differing by at most one. n_agents must not exceed the group count.
std::vector<std::vector<int>> partition_states(const ExecutionContext& ctx, int n_agents,
                                               int tile);

ModelEnsemble make_single_ensemble(const QTable& table);

// Runs one mission: agents step round-robin per tick, sense unvisited states
// of their current group, gate via the HA thresholds, and relocate along
// Manhattan paths between groups. Deterministic given seed. models must hold
// one ensemble per agent; Live mode requires single-model ensembles.
MissionResult run_mission(const FleetSpec& spec, const ExecutionContext& ctx,
                          const std::vector<ModelEnsemble>& models, const RewardSpec& rspec,
                          ClusterHook* cluster, uint64_t seed,
                          const MissionOptions& opts = {});

// The planned sweep order for one agent of the coverage baseline: its
// contiguous row band in boustrophedon order.
std::vector<StateId> boustrophedon_band(const ExecutionContext& ctx, int n_agents, int agent);

// Coverage baseline: no learning, no gating; agents sweep row bands until
// global coverage reaches the goal.
EvalReport baseline_automated(const FleetSpec& spec, const ExecutionContext& ctx,
                              double coverage_goal);

// Classic Q-learning baseline: same driver with the HA gate disabled,
// uniform reward weights 1/m, and per-tick goal termination. tables seed the
// per-agent working models.
MissionResult baseline_classic_rl(const FleetSpec& spec, const ExecutionContext& ctx,
                                  const std::vector<QTable>& tables, uint64_t seed);

// Reapplies the learned transitions in order onto start. keep filters rows
// (default: all). Replaying an agent's rows onto its starting table
// reproduces its final working table bit-exactly.
QTable replay_trace(QTable start, const std::vector<Transition>& rows,
                    const LearningParams& params, const ExecutionContext& ctx,
                    const std::function<bool(const Transition&)>& keep = {});

// CSV: agent,tick,s_r,s_c,action,ssv0..ssv{m-1},reward,group,gate with
// s_r,s_c the sensed state, action ordinal, gate leave|stay.
void save_trace_csv(const MissionTrace& trace, int m, const std::string& path);

}  // namespace fleet
