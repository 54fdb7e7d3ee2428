#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace fleet {

enum class PowerState : uint8_t { On = 0, Off = 1, Draining = 2 };
enum class TaskState : uint8_t { Pending = 0, Running = 1, Done = 2, Dropped = 3 };

// One simulated edge node. Fragments persist on disk across power cycles;
// only powered-on copies count as available replicas.
struct Node {
  int node_id = 0;
  double cpu_capacity = 4;
  double mem_capacity = 8;
  PowerState power = PowerState::On;
  std::set<int> fragments;
  bool is_hub = false;
  double active_watts = 50;
  double idle_watts = 20;
};

// A retraining pod (or a sensor-ingest container when sensor is set). work
// counts abstract units; an allocated core advances one unit per tick.
struct RetrainTask {
  int task_id = 0;
  std::vector<int> subset;
  double usefulness = 0;
  bool sensor = false;
  std::set<int> fragments;
  double work = 1;
  long long arrival = 0;
  TaskState state = TaskState::Pending;
  int node = -1;
  double cpu = 0;
  double mem = 0;
  long long wait = 0;
  long long lifetime = 0;
  double done_work = 0;
};

// Usefulness to scheduling priority: ten retrain levels spaced 1e8 apart,
// clamped at nine; the top level is reserved for sensor containers.
int64_t priority(double usefulness);
inline constexpr int64_t kSensorPriority = 1000000000;
int64_t task_priority(const RetrainTask& t);

struct ClusterState {
  std::vector<Node> nodes;
  std::vector<RetrainTask> tasks;
  long long tick = 0;

  Node* find(int node_id);
  const Node* find(int node_id) const;
  // Capacity totals over powered-on, non-draining nodes.
  double cpu_total() const;
  double mem_total() const;
};

// Structural checks plus the availability invariant: every fragment known to
// any node has a powered-on holder.
void validate_cluster(const ClusterState& c);

// Fraction of schedulable capacity taken by running tasks (0 when idle and
// capacity-free).
double utilization(const ClusterState& c);

// Recomputes cpu/mem caps: retrain tasks split the cluster totals in
// proportion to their priority levels; zero-priority tasks get nothing.
// Caps of running tasks are then clamped so no node is oversubscribed
// (higher priority first). Sensor tasks take one core off their node ahead
// of the split.
void apportion(ClusterState& c);

// Data-locality placement: powered-on On nodes holding at least one required
// fragment, plus powered-on On hubs; maximize fragment overlap, tie-break by
// free cpu then lowest node id. Sensor tasks go to hubs only. Returns the
// node id, or -1 when no candidate exists (the task stays Pending).
int place(const RetrainTask& t, const ClusterState& c);

enum class EventKind : uint8_t { Placed = 0, Done = 1, Dropped = 2 };
struct TickEvent {
  long long tick = 0;
  EventKind kind = EventKind::Placed;
  int task_id = 0;
  int node = -1;
  bool operator==(const TickEvent&) const = default;
};

// One simulated step: ages live tasks, places pending work in priority
// order, re-apportions, advances running tasks by their cpu caps, records
// completions, bumps wait counters of whatever is still pending. Pure in the
// state: equal states step to equal states and event lists.
std::vector<TickEvent> cluster_tick(ClusterState& c);

// Marks pending zero-priority retrain tasks Dropped (mission-end cleanup).
std::vector<TickEvent> drop_unschedulable(ClusterState& c);

// Scheduler trace rows, one per live-or-just-finished task per tick.
inline constexpr const char* kSchedHeader =
    "tick,task_id,subset,priority,node,state,cpu_cap,wait,lifetime";
std::string sched_csv_row(const ClusterState& c, const RetrainTask& t);
void save_sched_trace(const std::vector<std::string>& rows, const std::string& path);

}  // namespace fleet
