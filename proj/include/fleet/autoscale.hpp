#pragma once

#include <map>
#include <string>
#include <vector>

#include "fleet/cluster.hpp"
#include "fleet/mission.hpp"

namespace fleet {

struct ScalePolicy {
  double low = 0.25;    // drain below this utilization...
  int low_ticks = 5;    // ...for this many consecutive ticks
  double high = 0.85;   // wake above this utilization
  int wake_latency = 3; // ticks before a woken node accepts placements
  int rerep_ticks = 2;  // re-replication latency per fragment
  int replication = 2;  // steady-state replicas per fragment
};

enum class ScaleAction : uint8_t { None = 0, Wake = 1, Drain = 2 };

struct ScaleDecision {
  ScaleAction action = ScaleAction::None;
  int node = -1;
  bool operator==(const ScaleDecision&) const = default;
};

// Pure policy evaluation: wake the lowest-id Off node when utilization
// crosses the high watermark or pending work cannot place; drain the
// least-loaded non-hub On node after low_streak ticks under the low
// watermark (hubs qualify only when no live tasks remain); never below one
// powered-on node.
ScaleDecision scale_decision(const ClusterState& c, const ScalePolicy& pol, int low_streak);

struct EnergyLedger {
  std::map<int, double> watt_ticks;
  double total = 0;
};

// One tick of accrual: active watts for nodes running tasks (Draining always
// counts active), idle watts for powered-on idle nodes, nothing when Off.
void account_energy(const ClusterState& c, EnergyLedger& led);

inline constexpr const char* kEnergyHeader =
    "tick,node_id,power_state,running_tasks,watt_ticks_cum";
std::string energy_csv_row(const ClusterState& c, const Node& n, const EnergyLedger& led);

enum class ScaleEventKind : uint8_t {
  WakeStarted = 0,
  NodeOn = 1,
  DrainStarted = 2,
  DrainAborted = 3,
  NodeOff = 4,
  RerepStarted = 5,
  RerepDone = 6
};

struct ScaleEvent {
  long long tick = 0;
  ScaleEventKind kind = ScaleEventKind::WakeStarted;
  int node = -1;
  int fragment = -1;
  bool operator==(const ScaleEvent&) const = default;
};

// Stateful duty-cycler driven once per cluster tick: advances wake timers
// and in-flight re-replications, repairs under-replicated fragments toward
// the target factor, completes or aborts drains, then takes at most one
// scale action. A Draining node powers off only once it has no running
// tasks and every fragment it holds is powered-on elsewhere.
class Autoscaler {
 public:
  explicit Autoscaler(ScalePolicy pol = {});
  std::vector<ScaleEvent> step(ClusterState& c);
  int low_streak() const { return streak_; }

 private:
  struct Rereplication {
    int fragment = -1;
    int src = -1;
    int dst = -1;
    int remaining = 0;
  };

  ScalePolicy pol_;
  int streak_ = 0;
  std::map<int, int> waking_;
  std::vector<Rereplication> inflight_;
};

// Simulated edge cluster behind the mission driver's hook: one hub plus
// n_workers nodes, sensor ingest batched per tick onto the hub, optional
// duty-cycling, energy and scheduler traces accumulated as CSV rows.
struct EdgeClusterConfig {
  int n_workers = 3;
  double cpu = 4;
  double mem = 8;
  double hub_cpu = 4;
  double hub_mem = 8;
  double active_watts = 50;
  double idle_watts = 20;
  ScalePolicy policy;
  bool autoscale = true;
  double sense_work = 0.2;  // work units per sense event
  int n_fragments = 0;      // laid out round-robin over workers, two copies
};

class EdgeCluster : public ClusterHook {
 public:
  explicit EdgeCluster(const EdgeClusterConfig& cfg = {});

  void on_sense(int agent, long long tick) override;
  void on_tick(long long tick) override;
  void on_mission_end(long long tick) override;
  double edge_energy() const override;

  // Between-mission retraining; work units follow the replayed row count.
  int submit_retrain(const std::vector<int>& subset, double usefulness, double work,
                     const std::set<int>& fragments);
  // Ticks until no task is pending or running (or the budget runs out);
  // returns the ticks consumed.
  int run_until_idle(int max_ticks);

  ClusterState& state() { return c_; }
  const ClusterState& state() const { return c_; }
  const EnergyLedger& ledger() const { return ledger_; }
  const std::vector<TickEvent>& events() const { return events_; }
  const std::vector<ScaleEvent>& scale_events() const { return scale_events_; }
  const std::vector<std::string>& sched_rows() const { return sched_rows_; }
  const std::vector<std::string>& energy_rows() const { return energy_rows_; }

 private:
  void step_once();

  EdgeClusterConfig cfg_;
  ClusterState c_;
  Autoscaler scaler_;
  EnergyLedger ledger_;
  int next_task_ = 0;
  double pending_sense_ = 0;
  std::vector<TickEvent> events_;
  std::vector<ScaleEvent> scale_events_;
  std::vector<std::string> sched_rows_;
  std::vector<std::string> energy_rows_;
};

}  // namespace fleet
