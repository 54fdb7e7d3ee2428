#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>

#include "fleet/cluster.hpp"
#include "fleet/errors.hpp"
#include "fleet/rng.hpp"

using namespace fleet;

namespace {

Node make_node(int id, double cpu, bool hub = false) {
  Node n;
  n.node_id = id;
  n.cpu_capacity = cpu;
  n.mem_capacity = cpu * 2;
  n.is_hub = hub;
  return n;
}

RetrainTask make_task(int id, double u, double work) {
  RetrainTask t;
  t.task_id = id;
  t.usefulness = u;
  t.work = work;
  return t;
}

}  // namespace

TEST_CASE("priority levels") {
  CHECK(priority(0.0) == 0);
  CHECK(priority(0.73) == 700000000);
  CHECK(priority(1.0) == 900000000);  // clamped off the sensor level
  CHECK(priority(0.05) == 100000000);  // half rounds up
  CHECK(priority(0.04) == 0);
  CHECK(priority(0.85) == 900000000);
  CHECK(priority(0.9) == 900000000);

  // Monotone, ten distinct levels.
  int64_t prev = -1;
  std::set<int64_t> seen;
  for (int i = 0; i <= 1000; ++i) {
    int64_t p = priority(i / 1000.0);
    CHECK(p >= prev);
    CHECK(p % 100000000 == 0);
    seen.insert(p);
    prev = p;
  }
  CHECK(seen.size() == 10);

  CHECK_THROWS_AS(priority(-0.1), contract_error);
  CHECK_THROWS_AS(priority(1.1), contract_error);
  CHECK_THROWS_AS(priority(std::numeric_limits<double>::quiet_NaN()), contract_error);

  RetrainTask s = make_task(0, 0.2, 1);
  s.sensor = true;
  CHECK(task_priority(s) == 1000000000);
  s.sensor = false;
  CHECK(task_priority(s) == 200000000);
}

TEST_CASE("apportion splits capacity by priority level") {
  SUBCASE("nine to one") {
    ClusterState c;
    c.nodes = {make_node(0, 10)};
    RetrainTask a = make_task(0, 0.9, 100);
    RetrainTask b = make_task(1, 0.1, 100);
    a.state = b.state = TaskState::Running;
    a.node = b.node = 0;
    c.tasks = {a, b};
    apportion(c);
    CHECK(c.tasks[0].cpu == 9.0);
    CHECK(c.tasks[1].cpu == 1.0);
    CHECK(c.tasks[0].mem == 18.0);
    CHECK(c.tasks[1].mem == 2.0);
  }

  SUBCASE("sole claimant takes everything") {
    ClusterState c;
    c.nodes = {make_node(0, 10)};
    RetrainTask a = make_task(0, 0.5, 100);
    a.state = TaskState::Running;
    a.node = 0;
    c.tasks = {a};
    apportion(c);
    CHECK(c.tasks[0].cpu == 10.0);
  }

  SUBCASE("zero priority receives nothing") {
    ClusterState c;
    c.nodes = {make_node(0, 10)};
    RetrainTask a = make_task(0, 0.0, 100);
    RetrainTask b = make_task(1, 0.9, 100);
    a.state = b.state = TaskState::Running;
    a.node = b.node = 0;
    c.tasks = {a, b};
    apportion(c);
    CHECK(c.tasks[0].cpu == 0.0);
    CHECK(c.tasks[1].cpu == 10.0);
    c.tasks[1].usefulness = 0.0;
    apportion(c);
    CHECK(c.tasks[1].cpu == 0.0);  // whole pool at level zero
  }

  SUBCASE("node capacity clamps the global share") {
    ClusterState c;
    c.nodes = {make_node(0, 4), make_node(1, 8)};
    RetrainTask a = make_task(0, 0.9, 100);
    RetrainTask b = make_task(1, 0.1, 100);
    a.state = b.state = TaskState::Running;
    a.node = b.node = 0;  // both crowd the small node
    c.tasks = {a, b};
    apportion(c);
    CHECK(c.tasks[0].cpu == 4.0);  // min(10.8, 4)
    CHECK(c.tasks[1].cpu == 0.0);  // nothing left
  }

  SUBCASE("sensor ingest reserves its core first") {
    ClusterState c;
    c.nodes = {make_node(0, 4, true)};
    RetrainTask s = make_task(0, 1.0, 1);
    s.sensor = true;
    RetrainTask a = make_task(1, 1.0, 100);
    s.state = a.state = TaskState::Running;
    s.node = a.node = 0;
    c.tasks = {s, a};
    apportion(c);
    CHECK(c.tasks[0].cpu == 1.0);
    CHECK(c.tasks[1].cpu == 3.0);
  }

  SUBCASE("allocations never oversubscribe") {
    Rng rng(217);
    for (int rep = 0; rep < 30; ++rep) {
      ClusterState c;
      int n_nodes = 1 + static_cast<int>(rng.uniform_int(4));
      for (int i = 0; i < n_nodes; ++i)
        c.nodes.push_back(make_node(i, 1 + static_cast<double>(rng.uniform_int(8))));
      int n_tasks = 1 + static_cast<int>(rng.uniform_int(10));
      for (int i = 0; i < n_tasks; ++i) {
        RetrainTask t = make_task(i, rng.uniform(), 10);
        t.state = TaskState::Running;
        t.node = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_nodes)));
        c.tasks.push_back(t);
      }
      apportion(c);
      std::map<int, double> used;
      double global = 0;
      for (const RetrainTask& t : c.tasks) {
        used[t.node] += t.cpu;
        global += t.cpu;
      }
      for (const Node& n : c.nodes) CHECK(used[n.node_id] <= n.cpu_capacity + 1e-9);
      CHECK(global <= c.cpu_total() + 1e-9);
    }
  }
}

TEST_CASE("placement follows data locality") {
  ClusterState c;
  c.nodes = {make_node(0, 4, true), make_node(1, 4), make_node(2, 4), make_node(3, 8)};
  c.nodes[1].fragments = {7};
  c.nodes[2].fragments = {8};
  c.nodes[3].fragments = {7, 8};

  SUBCASE("sole holder wins") {
    RetrainTask t = make_task(0, 0.5, 1);
    t.fragments = {7};
    c.nodes[3].fragments = {};  // only node 1 holds 7 now
    CHECK(place(t, c) == 1);
  }

  SUBCASE("no required data goes to the hub") {
    RetrainTask t = make_task(0, 0.5, 1);
    CHECK(place(t, c) == 0);
  }

  SUBCASE("maximum overlap beats free cpu") {
    RetrainTask t = make_task(0, 0.5, 1);
    t.fragments = {7, 8};
    CHECK(place(t, c) == 3);
  }

  SUBCASE("overlap tie breaks on free cpu then id") {
    RetrainTask t = make_task(0, 0.5, 1);
    t.fragments = {7, 8};
    c.nodes[3].fragments = {};  // nodes 1 and 2 each hold one fragment
    CHECK(place(t, c) == 1);    // equal free cpu, lower id
    RetrainTask busy = make_task(9, 0.9, 100);
    busy.state = TaskState::Running;
    busy.node = 1;
    busy.cpu = 2;
    c.tasks = {busy};
    CHECK(place(t, c) == 2);  // node 2 now has more free cpu
  }

  SUBCASE("powered-down and draining nodes are skipped") {
    RetrainTask t = make_task(0, 0.5, 1);
    t.fragments = {7};
    c.nodes[3].power = PowerState::Off;
    c.nodes[1].power = PowerState::Draining;
    CHECK(place(t, c) == 0);  // hub fallback
    c.nodes[0].power = PowerState::Off;
    CHECK(place(t, c) == -1);
  }

  SUBCASE("sensor tasks are hub-only") {
    RetrainTask t = make_task(0, 1.0, 1);
    t.sensor = true;
    t.fragments = {7};
    CHECK(place(t, c) == 0);
    c.nodes[0].power = PowerState::Off;
    CHECK(place(t, c) == -1);
  }
}

TEST_CASE("cluster_tick execution") {
  SUBCASE("exact fit completes in one tick") {
    ClusterState c;
    c.nodes = {make_node(0, 10, true)};
    c.tasks = {make_task(0, 0.5, 10)};
    std::vector<TickEvent> ev = cluster_tick(c);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0] == TickEvent{1, EventKind::Placed, 0, 0});
    CHECK(ev[1] == TickEvent{1, EventKind::Done, 0, 0});
    CHECK(c.tasks[0].state == TaskState::Done);
    CHECK(c.tasks[0].lifetime == 1);
    CHECK(c.tasks[0].wait == 0);
  }

  SUBCASE("higher priority finishes first under contention") {
    ClusterState c;
    c.nodes = {make_node(0, 10, true)};
    c.tasks = {make_task(0, 0.9, 18), make_task(1, 0.1, 18)};
    long long done_hi = 0, done_lo = 0;
    for (int i = 0; i < 10 && (done_hi == 0 || done_lo == 0); ++i) {
      for (const TickEvent& e : cluster_tick(c)) {
        if (e.kind != EventKind::Done) continue;
        (e.task_id == 0 ? done_hi : done_lo) = e.tick;
      }
    }
    CHECK(done_hi == 2);
    CHECK(done_lo == 4);
    CHECK(c.tasks[0].lifetime == 2);
    CHECK(c.tasks[1].lifetime == 4);
  }

  SUBCASE("no powered-on node starves everything") {
    ClusterState c;
    c.nodes = {make_node(0, 10, true)};
    c.nodes[0].power = PowerState::Off;
    c.tasks = {make_task(0, 0.9, 1), make_task(1, 0.5, 1)};
    for (int i = 0; i < 3; ++i) {
      std::vector<TickEvent> ev = cluster_tick(c);
      CHECK(ev.empty());
    }
    for (const RetrainTask& t : c.tasks) {
      CHECK(t.state == TaskState::Pending);
      CHECK(t.wait == 3);
      CHECK(t.lifetime == 3);
    }
  }

  SUBCASE("zero priority never runs and drops at mission end") {
    ClusterState c;
    c.nodes = {make_node(0, 10, true)};
    c.tasks = {make_task(0, 0.04, 1)};
    for (int i = 0; i < 5; ++i) cluster_tick(c);
    CHECK(c.tasks[0].state == TaskState::Pending);
    std::vector<TickEvent> ev = drop_unschedulable(c);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == EventKind::Dropped);
    CHECK(c.tasks[0].state == TaskState::Dropped);
  }

  SUBCASE("tick is a pure function of state") {
    ClusterState a;
    a.nodes = {make_node(0, 4, true), make_node(1, 6)};
    a.nodes[1].fragments = {3};
    for (int i = 0; i < 6; ++i) {
      RetrainTask t = make_task(i, (i % 5) / 5.0 + 0.1, 3 + i);
      if (i % 2) t.fragments = {3};
      a.tasks.push_back(t);
    }
    ClusterState b = a;
    for (int i = 0; i < 8; ++i) {
      std::vector<TickEvent> ea = cluster_tick(a);
      std::vector<TickEvent> eb = cluster_tick(b);
      CHECK(ea == eb);
    }
    for (size_t i = 0; i < a.tasks.size(); ++i)
      CHECK(sched_csv_row(a, a.tasks[i]) == sched_csv_row(b, b.tasks[i]));
  }

  SUBCASE("mean wait falls as priority rises under saturation") {
    ClusterState c;
    c.nodes = {make_node(0, 2, true)};
    Rng rng(5051);
    for (int i = 0; i < 40; ++i) {
      int level = 1 + static_cast<int>(rng.uniform_int(9));  // 1..9
      c.tasks.push_back(make_task(i, level / 10.0, 4));
    }
    for (int i = 0; i < 4000; ++i) {
      cluster_tick(c);
      bool live = false;
      for (const RetrainTask& t : c.tasks)
        live = live || t.state != TaskState::Done;
      if (!live) break;
    }
    std::map<int64_t, std::pair<double, int>> by_level;
    for (const RetrainTask& t : c.tasks) {
      REQUIRE(t.state == TaskState::Done);
      auto& [sum, count] = by_level[task_priority(t)];
      sum += static_cast<double>(t.wait);
      ++count;
    }
    REQUIRE(by_level.size() > 3);
    double prev_mean = std::numeric_limits<double>::infinity();
    for (const auto& [level, agg] : by_level) {
      double mean = agg.first / agg.second;
      CHECK(mean <= prev_mean + 1e-9);
      prev_mean = mean;
    }
  }
}

TEST_CASE("scheduler trace csv") {
  CHECK(std::string(kSchedHeader) ==
        "tick,task_id,subset,priority,node,state,cpu_cap,wait,lifetime");

  ClusterState c;
  c.tick = 3;
  RetrainTask t = make_task(7, 0.73, 10);
  t.subset = {0, 1};
  t.state = TaskState::Running;
  t.node = 2;
  t.cpu = 2.5;
  t.wait = 1;
  t.lifetime = 2;
  CHECK(sched_csv_row(c, t) == "3,7,0+1,700000000,2,running,2.5,1,2");

  RetrainTask s = make_task(8, 1.0, 1);
  s.sensor = true;
  CHECK(sched_csv_row(c, s) == "3,8,sensor,1000000000,-1,pending,0,0,0");

  RetrainTask base = make_task(9, 0.2, 1);
  CHECK(sched_csv_row(c, base) == "3,9,base,200000000,-1,pending,0,0,0");

  const char* path = "tmp_sched_trace.csv";
  save_sched_trace({sched_csv_row(c, t), sched_csv_row(c, s)}, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == kSchedHeader);
  std::getline(in, line);
  CHECK(line == "3,7,0+1,700000000,2,running,2.5,1,2");
  in.close();
  std::remove(path);
}

TEST_CASE("cluster validation") {
  ClusterState ok;
  ok.nodes = {make_node(0, 4, true), make_node(1, 4)};
  ok.nodes[1].fragments = {1};
  CHECK_NOTHROW(validate_cluster(ok));

  ClusterState dup = ok;
  dup.nodes.push_back(make_node(1, 2));
  CHECK_THROWS_AS(validate_cluster(dup), contract_error);

  ClusterState zero = ok;
  zero.nodes[0].cpu_capacity = 0;
  CHECK_THROWS_AS(validate_cluster(zero), contract_error);

  ClusterState dark = ok;
  dark.nodes[1].power = PowerState::Off;  // fragment 1 goes dark
  CHECK_THROWS_AS(validate_cluster(dark), contract_error);
  dark.nodes[0].fragments = {1};
  CHECK_NOTHROW(validate_cluster(dark));

  ClusterState bad_task = ok;
  bad_task.tasks = {make_task(0, 0.5, 0)};
  CHECK_THROWS_AS(validate_cluster(bad_task), contract_error);
}
