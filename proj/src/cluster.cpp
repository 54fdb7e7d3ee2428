#include "fleet/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fleet/errors.hpp"
#include "fleet/util.hpp"

namespace fleet {

int64_t priority(double usefulness) {
  if (!(usefulness >= 0.0 && usefulness <= 1.0))
    throw contract_error("priority: usefulness must lie in [0,1]");
  // Half-up rounding onto ten levels, clamped to nine: level ten belongs to
  // sensor containers.
  auto level = static_cast<int64_t>(std::floor(10.0 * usefulness + 0.5));
  return std::min<int64_t>(level, 9) * 100000000;
}

int64_t task_priority(const RetrainTask& t) {
  return t.sensor ? kSensorPriority : priority(t.usefulness);
}

Node* ClusterState::find(int node_id) {
  for (Node& n : nodes)
    if (n.node_id == node_id) return &n;
  return nullptr;
}

const Node* ClusterState::find(int node_id) const {
  for (const Node& n : nodes)
    if (n.node_id == node_id) return &n;
  return nullptr;
}

double ClusterState::cpu_total() const {
  double sum = 0;
  for (const Node& n : nodes)
    if (n.power == PowerState::On) sum += n.cpu_capacity;
  return sum;
}

double ClusterState::mem_total() const {
  double sum = 0;
  for (const Node& n : nodes)
    if (n.power == PowerState::On) sum += n.mem_capacity;
  return sum;
}

void validate_cluster(const ClusterState& c) {
  std::set<int> ids;
  for (const Node& n : c.nodes) {
    if (!ids.insert(n.node_id).second)
      throw contract_error("cluster: duplicate node id " + std::to_string(n.node_id));
    if (!(n.cpu_capacity > 0) || !(n.mem_capacity > 0))
      throw contract_error("cluster: node capacities must be positive");
    if (n.active_watts < 0 || n.idle_watts < 0)
      throw contract_error("cluster: watt rates must be >= 0");
  }
  for (const Node& n : c.nodes) {
    for (int f : n.fragments) {
      bool available = false;
      for (const Node& m : c.nodes)
        if (m.power != PowerState::Off && m.fragments.count(f)) available = true;
      if (!available)
        throw contract_error("cluster: fragment " + std::to_string(f) +
                             " has no powered-on holder");
    }
  }
  for (const RetrainTask& t : c.tasks) {
    if (!(t.usefulness >= 0 && t.usefulness <= 1))
      throw contract_error("cluster: task usefulness must lie in [0,1]");
    if (!(t.work > 0)) throw contract_error("cluster: task work must be positive");
    if (t.state == TaskState::Running && !c.find(t.node))
      throw contract_error("cluster: running task on unknown node");
  }
}

double utilization(const ClusterState& c) {
  double cap = c.cpu_total();
  double used = 0;
  bool live = false;
  for (const RetrainTask& t : c.tasks) {
    if (t.state == TaskState::Running) used += t.cpu;
    live = live || t.state == TaskState::Running || t.state == TaskState::Pending;
  }
  if (cap <= 0) return live ? 1.0 : 0.0;
  return used / cap;
}

void apportion(ClusterState& c) {
  // Node capacity remaining after higher-priority claims, sensors first.
  std::map<int, double> cpu_left, mem_left;
  for (const Node& n : c.nodes) {
    cpu_left[n.node_id] = n.cpu_capacity;
    mem_left[n.node_id] = n.mem_capacity;
  }

  std::vector<RetrainTask*> live;
  for (RetrainTask& t : c.tasks)
    if (t.state == TaskState::Pending || t.state == TaskState::Running) live.push_back(&t);
  std::sort(live.begin(), live.end(), [](const RetrainTask* a, const RetrainTask* b) {
    int64_t pa = task_priority(*a), pb = task_priority(*b);
    if (pa != pb) return pa > pb;
    return a->task_id < b->task_id;
  });

  double level_sum = 0;
  for (const RetrainTask* t : live)
    if (!t->sensor) level_sum += static_cast<double>(task_priority(*t) / 100000000);

  const double cpu_t = c.cpu_total();
  const double mem_t = c.mem_total();
  for (RetrainTask* t : live) {
    double raw_cpu, raw_mem;
    if (t->sensor) {
      raw_cpu = 1.0;
      raw_mem = 1.0;
    } else {
      double level = static_cast<double>(task_priority(*t) / 100000000);
      raw_cpu = level_sum > 0 ? cpu_t * level / level_sum : 0.0;
      raw_mem = level_sum > 0 ? mem_t * level / level_sum : 0.0;
    }
    if (t->state == TaskState::Running) {
      t->cpu = std::min(raw_cpu, std::max(0.0, cpu_left[t->node]));
      t->mem = std::min(raw_mem, std::max(0.0, mem_left[t->node]));
      cpu_left[t->node] -= t->cpu;
      mem_left[t->node] -= t->mem;
    } else {
      // Entitlement only; pending work holds no node resources.
      t->cpu = raw_cpu;
      t->mem = raw_mem;
    }
  }
}

int place(const RetrainTask& t, const ClusterState& c) {
  // Free cpu under the current allocation, for the tie-break.
  std::map<int, double> free_cpu;
  for (const Node& n : c.nodes) free_cpu[n.node_id] = n.cpu_capacity;
  for (const RetrainTask& r : c.tasks)
    if (r.state == TaskState::Running) free_cpu[r.node] -= r.cpu;

  int best = -1;
  size_t best_overlap = 0;
  double best_free = 0;
  for (const Node& n : c.nodes) {
    if (n.power != PowerState::On) continue;
    size_t overlap = 0;
    for (int f : t.fragments) overlap += n.fragments.count(f);
    bool candidate = t.sensor ? n.is_hub : (n.is_hub || overlap > 0);
    if (!candidate) continue;
    double fc = free_cpu[n.node_id];
    bool better = best == -1 || overlap > best_overlap ||
                  (overlap == best_overlap &&
                   (fc > best_free || (fc == best_free && n.node_id < best)));
    if (better) {
      best = n.node_id;
      best_overlap = overlap;
      best_free = fc;
    }
  }
  return best;
}

std::vector<TickEvent> cluster_tick(ClusterState& c) {
  ++c.tick;
  std::vector<TickEvent> events;

  for (RetrainTask& t : c.tasks)
    if (t.state == TaskState::Pending || t.state == TaskState::Running) ++t.lifetime;

  // Highest priority places first; ties by arrival then id.
  std::vector<RetrainTask*> pending;
  for (RetrainTask& t : c.tasks)
    if (t.state == TaskState::Pending) pending.push_back(&t);
  std::sort(pending.begin(), pending.end(), [](const RetrainTask* a, const RetrainTask* b) {
    int64_t pa = task_priority(*a), pb = task_priority(*b);
    if (pa != pb) return pa > pb;
    if (a->arrival != b->arrival) return a->arrival < b->arrival;
    return a->task_id < b->task_id;
  });
  for (RetrainTask* t : pending) {
    if (task_priority(*t) == 0) continue;  // never scheduled
    int node = place(*t, c);
    if (node < 0) continue;
    t->state = TaskState::Running;
    t->node = node;
    events.push_back({c.tick, EventKind::Placed, t->task_id, node});
  }

  apportion(c);

  for (RetrainTask& t : c.tasks) {
    if (t.state != TaskState::Running) continue;
    t.done_work += t.cpu;
    if (t.done_work >= t.work - 1e-9) {
      t.state = TaskState::Done;
      t.cpu = 0;
      t.mem = 0;
      events.push_back({c.tick, EventKind::Done, t.task_id, t.node});
    }
  }

  for (RetrainTask& t : c.tasks)
    if (t.state == TaskState::Pending) ++t.wait;

  return events;
}

std::vector<TickEvent> drop_unschedulable(ClusterState& c) {
  std::vector<TickEvent> events;
  for (RetrainTask& t : c.tasks) {
    if (t.state == TaskState::Pending && task_priority(t) == 0) {
      t.state = TaskState::Dropped;
      events.push_back({c.tick, EventKind::Dropped, t.task_id, -1});
    }
  }
  return events;
}

namespace {

std::string subset_label(const RetrainTask& t) {
  if (t.sensor) return "sensor";
  if (t.subset.empty()) return "base";
  std::string s;
  for (size_t i = 0; i < t.subset.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(t.subset[i]);
  }
  return s;
}

const char* state_label(TaskState s) {
  switch (s) {
    case TaskState::Pending: return "pending";
    case TaskState::Running: return "running";
    case TaskState::Done: return "done";
    default: return "dropped";
  }
}

}  // namespace

std::string sched_csv_row(const ClusterState& c, const RetrainTask& t) {
  std::string row = std::to_string(c.tick);
  row += ',';
  row += std::to_string(t.task_id);
  row += ',';
  row += subset_label(t);
  row += ',';
  row += std::to_string(task_priority(t));
  row += ',';
  row += std::to_string(t.node);
  row += ',';
  row += state_label(t.state);
  row += ',';
  row += fmt_double(t.cpu);
  row += ',';
  row += std::to_string(t.wait);
  row += ',';
  row += std::to_string(t.lifetime);
  return row;
}

void save_sched_trace(const std::vector<std::string>& rows, const std::string& path) {
  std::string out = kSchedHeader;
  out += '\n';
  for (const std::string& r : rows) {
    out += r;
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace fleet
