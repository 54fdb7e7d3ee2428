#include "fleet/autoscale.hpp"

#include <algorithm>
#include <set>

#include "fleet/errors.hpp"
#include "fleet/util.hpp"

namespace fleet {

namespace {

int count_on(const ClusterState& c) {
  int n = 0;
  for (const Node& node : c.nodes)
    if (node.power == PowerState::On) ++n;
  return n;
}

int running_tasks_on(const ClusterState& c, int node_id) {
  int n = 0;
  for (const RetrainTask& t : c.tasks)
    if (t.state == TaskState::Running && t.node == node_id) ++n;
  return n;
}

bool live_tasks(const ClusterState& c) {
  for (const RetrainTask& t : c.tasks)
    if (t.state == TaskState::Pending || t.state == TaskState::Running) return true;
  return false;
}

}  // namespace

ScaleDecision scale_decision(const ClusterState& c, const ScalePolicy& pol, int low_streak) {
  if (!(pol.low >= 0 && pol.low < pol.high && pol.high <= 1))
    throw contract_error("scale_decision: watermarks must satisfy 0 <= low < high <= 1");

  double util = utilization(c);
  bool unplaceable = false;
  for (const RetrainTask& t : c.tasks)
    if (t.state == TaskState::Pending && task_priority(t) > 0 && place(t, c) < 0)
      unplaceable = true;

  if (util > pol.high || unplaceable) {
    int pick = -1;
    for (const Node& n : c.nodes)
      if (n.power == PowerState::Off && (pick == -1 || n.node_id < pick)) pick = n.node_id;
    if (pick != -1) return {ScaleAction::Wake, pick};
    return {ScaleAction::None, -1};
  }

  if (util < pol.low && low_streak >= pol.low_ticks && count_on(c) >= 2) {
    bool live = live_tasks(c);
    int pick = -1;
    int pick_load = 0;
    for (const Node& n : c.nodes) {
      if (n.power != PowerState::On) continue;
      if (n.is_hub && live) continue;  // the hub stays up while work exists
      int load = running_tasks_on(c, n.node_id);
      if (pick == -1 || load < pick_load || (load == pick_load && n.node_id < pick)) {
        pick = n.node_id;
        pick_load = load;
      }
    }
    if (pick != -1) return {ScaleAction::Drain, pick};
  }
  return {ScaleAction::None, -1};
}

void account_energy(const ClusterState& c, EnergyLedger& led) {
  for (const Node& n : c.nodes) {
    double w = 0;
    if (n.power != PowerState::Off) {
      bool active = n.power == PowerState::Draining || running_tasks_on(c, n.node_id) > 0;
      w = active ? n.active_watts : n.idle_watts;
    }
    led.watt_ticks[n.node_id] += w;
    led.total += w;
  }
}

namespace {

const char* power_label(PowerState p) {
  switch (p) {
    case PowerState::On: return "on";
    case PowerState::Off: return "off";
    default: return "draining";
  }
}

}  // namespace

std::string energy_csv_row(const ClusterState& c, const Node& n, const EnergyLedger& led) {
  std::string row = std::to_string(c.tick);
  row += ',';
  row += std::to_string(n.node_id);
  row += ',';
  row += power_label(n.power);
  row += ',';
  row += std::to_string(running_tasks_on(c, n.node_id));
  row += ',';
  auto it = led.watt_ticks.find(n.node_id);
  row += fmt_double(it == led.watt_ticks.end() ? 0.0 : it->second);
  return row;
}

Autoscaler::Autoscaler(ScalePolicy pol) : pol_(pol) {
  if (pol_.wake_latency < 0 || pol_.rerep_ticks < 1 || pol_.replication < 1 ||
      pol_.low_ticks < 1)
    throw contract_error("autoscaler: policy counts must be positive");
}

std::vector<ScaleEvent> Autoscaler::step(ClusterState& c) {
  std::vector<ScaleEvent> ev;

  // Wake timers.
  for (auto it = waking_.begin(); it != waking_.end();) {
    if (--it->second <= 0) {
      if (Node* n = c.find(it->first); n && n->power == PowerState::Off)
        n->power = PowerState::On;
      ev.push_back({c.tick, ScaleEventKind::NodeOn, it->first, -1});
      it = waking_.erase(it);
    } else {
      ++it;
    }
  }

  // In-flight re-replications; a lost destination just retargets next pass.
  for (auto it = inflight_.begin(); it != inflight_.end();) {
    Node* dst = c.find(it->dst);
    if (!dst || dst->power != PowerState::On) {
      it = inflight_.erase(it);
      continue;
    }
    if (--it->remaining <= 0) {
      dst->fragments.insert(it->fragment);
      ev.push_back({c.tick, ScaleEventKind::RerepDone, it->dst, it->fragment});
      it = inflight_.erase(it);
    } else {
      ++it;
    }
  }

  // Repair toward the replication target.
  std::set<int> all_fragments;
  for (const Node& n : c.nodes) all_fragments.insert(n.fragments.begin(), n.fragments.end());
  for (int f : all_fragments) {
    int on_holders = 0;
    for (const Node& n : c.nodes)
      if (n.power == PowerState::On && n.fragments.count(f)) ++on_holders;
    bool flying = false;
    for (const Rereplication& r : inflight_) flying = flying || r.fragment == f;
    if (on_holders >= pol_.replication || flying) continue;
    int src = -1, dst = -1;
    for (const Node& n : c.nodes) {
      if (n.power != PowerState::Off && n.fragments.count(f) && (src == -1 || n.node_id < src))
        src = n.node_id;
      if (n.power == PowerState::On && !n.fragments.count(f) && (dst == -1 || n.node_id < dst))
        dst = n.node_id;
    }
    if (src != -1 && dst != -1) {
      inflight_.push_back({f, src, dst, pol_.rerep_ticks});
      ev.push_back({c.tick, ScaleEventKind::RerepStarted, dst, f});
    }
  }

  // Drain completion: off only when idle and nothing it holds is unique.
  for (Node& n : c.nodes) {
    if (n.power != PowerState::Draining) continue;
    if (running_tasks_on(c, n.node_id) > 0) continue;
    bool blocked = false, impossible = false;
    for (int f : n.fragments) {
      bool elsewhere = false;
      for (const Node& m : c.nodes)
        if (m.node_id != n.node_id && m.power == PowerState::On && m.fragments.count(f))
          elsewhere = true;
      if (elsewhere) continue;
      bool flying = false;
      for (const Rereplication& r : inflight_) flying = flying || r.fragment == f;
      bool schedulable = false;
      for (const Node& m : c.nodes)
        if (m.node_id != n.node_id && m.power == PowerState::On && !m.fragments.count(f))
          schedulable = true;
      if (flying || schedulable)
        blocked = true;
      else
        impossible = true;
    }
    if (impossible) {
      n.power = PowerState::On;
      ev.push_back({c.tick, ScaleEventKind::DrainAborted, n.node_id, -1});
    } else if (!blocked) {
      n.power = PowerState::Off;
      ev.push_back({c.tick, ScaleEventKind::NodeOff, n.node_id, -1});
    }
  }

  // Watermark bookkeeping, then at most one action. Wakes settle first.
  double util = utilization(c);
  if (util < pol_.low)
    ++streak_;
  else
    streak_ = 0;
  if (waking_.empty()) {
    ScaleDecision d = scale_decision(c, pol_, streak_);
    if (d.action == ScaleAction::Wake) {
      waking_[d.node] = pol_.wake_latency;
      ev.push_back({c.tick, ScaleEventKind::WakeStarted, d.node, -1});
      streak_ = 0;
    } else if (d.action == ScaleAction::Drain) {
      if (Node* n = c.find(d.node)) n->power = PowerState::Draining;
      ev.push_back({c.tick, ScaleEventKind::DrainStarted, d.node, -1});
      streak_ = 0;
    }
  }
  return ev;
}

EdgeCluster::EdgeCluster(const EdgeClusterConfig& cfg)
    : cfg_(cfg), scaler_(cfg.policy) {
  if (cfg.n_workers < 0) throw contract_error("edge cluster: n_workers must be >= 0");
  if (!(cfg.cpu > 0) || !(cfg.mem > 0) || !(cfg.hub_cpu > 0) || !(cfg.hub_mem > 0))
    throw contract_error("edge cluster: capacities must be positive");
  if (cfg.sense_work < 0) throw contract_error("edge cluster: sense_work must be >= 0");
  if (cfg.n_fragments < 0) throw contract_error("edge cluster: n_fragments must be >= 0");

  Node hub;
  hub.node_id = 0;
  hub.cpu_capacity = cfg.hub_cpu;
  hub.mem_capacity = cfg.hub_mem;
  hub.is_hub = true;
  hub.active_watts = cfg.active_watts;
  hub.idle_watts = cfg.idle_watts;
  c_.nodes.push_back(hub);
  for (int i = 0; i < cfg.n_workers; ++i) {
    Node w;
    w.node_id = i + 1;
    w.cpu_capacity = cfg.cpu;
    w.mem_capacity = cfg.mem;
    w.active_watts = cfg.active_watts;
    w.idle_watts = cfg.idle_watts;
    c_.nodes.push_back(w);
  }
  for (int f = 0; f < cfg.n_fragments; ++f) {
    if (cfg.n_workers == 0) {
      c_.nodes[0].fragments.insert(f);
    } else {
      c_.find(1 + f % cfg.n_workers)->fragments.insert(f);
      c_.find(1 + (f + 1) % cfg.n_workers)->fragments.insert(f);
    }
  }
  validate_cluster(c_);
}

void EdgeCluster::on_sense(int, long long) { pending_sense_ += cfg_.sense_work; }

void EdgeCluster::on_tick(long long) {
  if (pending_sense_ > 0) {
    RetrainTask t;
    t.task_id = next_task_++;
    t.sensor = true;
    t.usefulness = 1.0;
    t.work = pending_sense_;
    t.arrival = c_.tick;
    c_.tasks.push_back(t);
    pending_sense_ = 0;
  }
  step_once();
}

void EdgeCluster::on_mission_end(long long) {
  std::vector<TickEvent> dropped = drop_unschedulable(c_);
  for (const TickEvent& e : dropped) {
    for (const RetrainTask& t : c_.tasks)
      if (t.task_id == e.task_id) sched_rows_.push_back(sched_csv_row(c_, t));
  }
  events_.insert(events_.end(), dropped.begin(), dropped.end());
}

double EdgeCluster::edge_energy() const { return ledger_.total; }

int EdgeCluster::submit_retrain(const std::vector<int>& subset, double usefulness,
                                double work, const std::set<int>& fragments) {
  if (!(work > 0)) throw contract_error("submit_retrain: work must be positive");
  RetrainTask t;
  t.task_id = next_task_++;
  t.subset = subset;
  t.usefulness = usefulness;
  t.fragments = fragments;
  t.work = work;
  t.arrival = c_.tick;
  (void)task_priority(t);  // validates usefulness range
  c_.tasks.push_back(t);
  return t.task_id;
}

int EdgeCluster::run_until_idle(int max_ticks) {
  if (max_ticks < 0) throw contract_error("run_until_idle: max_ticks must be >= 0");
  int used = 0;
  while (used < max_ticks && live_tasks(c_)) {
    // Zero-priority pending work would spin forever; it only drops at
    // mission end, so ignore it when deciding idleness.
    bool schedulable = false;
    for (const RetrainTask& t : c_.tasks) {
      if (t.state == TaskState::Running) schedulable = true;
      if (t.state == TaskState::Pending && task_priority(t) > 0) schedulable = true;
    }
    if (!schedulable) break;
    step_once();
    ++used;
  }
  return used;
}

void EdgeCluster::step_once() {
  std::vector<TickEvent> ev = cluster_tick(c_);
  if (cfg_.autoscale) {
    std::vector<ScaleEvent> sev = scaler_.step(c_);
    scale_events_.insert(scale_events_.end(), sev.begin(), sev.end());
  }
  account_energy(c_, ledger_);

  std::set<int> finished;
  for (const TickEvent& e : ev)
    if (e.kind == EventKind::Done) finished.insert(e.task_id);
  for (const RetrainTask& t : c_.tasks) {
    bool show = t.state == TaskState::Pending || t.state == TaskState::Running ||
                finished.count(t.task_id);
    if (show) sched_rows_.push_back(sched_csv_row(c_, t));
  }
  for (const Node& n : c_.nodes) energy_rows_.push_back(energy_csv_row(c_, n, ledger_));
  events_.insert(events_.end(), ev.begin(), ev.end());
}

}  // namespace fleet
