#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "fleet/camera.hpp"
#include "fleet/errors.hpp"
#include "fleet/shaping.hpp"

using namespace fleet;

namespace {

double mean_abs_delta(const CorrelationModel& a, const CorrelationModel& b) {
  double s = 0;
  int n = 0;
  for (int i = 0; i < a.n_cameras; ++i) {
    for (int j = 0; j < a.n_cameras; ++j) {
      if (i == j) continue;
      s += std::abs(a.spatial[i][j] - b.spatial[i][j]);
      ++n;
    }
  }
  return s / n;
}

// Reference closure over every frame of the day: re-applies the gate rule as
// a global fixpoint sweep instead of a worklist, so the two can only agree
// if the pruning semantics match.
struct OracleOut {
  std::set<std::pair<int, long long>> searched, matched;
};

OracleOut oracle_query(int target, int cam0, long long t0, const CorrelationModel& m,
                       const DayData& day) {
  std::set<std::pair<int, long long>> truth;
  for (const TargetTrack& tr : day.tracks) {
    if (tr.target_id != target) continue;
    for (const CameraVisit& v : tr.visits) truth.insert({v.camera, v.timestamp});
  }
  auto mass = [&](int from, int to, int offset) {
    auto it = m.temporal.find({from, to});
    if (it == m.temporal.end()) return 0.0;
    auto jt = it->second.find(offset);
    return jt == it->second.end() ? 0.0 : jt->second;
  };
  std::set<std::pair<int, long long>> sightings = {{cam0, t0}};
  OracleOut out;
  bool grew = true;
  while (grew) {
    grew = false;
    for (int j = 0; j < m.n_cameras; ++j) {
      for (long long mnt = day.t_begin; mnt < day.t_end; ++mnt) {
        if (out.searched.count({j, mnt})) continue;
        bool hit = j == cam0 && mnt == t0;
        for (const auto& [ci, ti] : sightings) {
          if (hit) break;
          if (j != ci && m.spatial[ci][j] < m.spatial_threshold) continue;
          long long o = mnt - ti;
          if (o >= 0 && o < m.window_minutes && mass(ci, j, static_cast<int>(o)) >= m.temporal_threshold)
            hit = true;
          if (o <= 0 && -o < m.window_minutes && mass(j, ci, static_cast<int>(-o)) >= m.temporal_threshold)
            hit = true;
        }
        if (!hit) continue;
        out.searched.insert({j, mnt});
        if (truth.count({j, mnt})) {
          out.matched.insert({j, mnt});
          sightings.insert({j, mnt});
        }
        grew = true;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("trajectory generation") {
  SUBCASE("deterministic, valid, one visit per minute") {
    TrajectoryDataset ds = gen_trajectories(12, 5, 3, 0.2, 42);
    CHECK_NOTHROW(validate_trajectories(ds));
    CHECK(ds.day_minutes == 240);
    CHECK(ds.grid_w * ds.grid_h >= 12);
    REQUIRE(ds.targets.size() == 5);
    for (const TargetTrack& t : ds.targets) {
      REQUIRE(t.visits.size() == 3 * 240);
      for (size_t i = 0; i < t.visits.size(); ++i)
        CHECK(t.visits[i].timestamp == static_cast<long long>(i));
    }

    TrajectoryDataset again = gen_trajectories(12, 5, 3, 0.2, 42);
    for (size_t t = 0; t < ds.targets.size(); ++t)
      for (size_t i = 0; i < ds.targets[t].visits.size(); ++i) {
        CHECK(ds.targets[t].visits[i].camera == again.targets[t].visits[i].camera);
        CHECK(ds.targets[t].visits[i].timestamp == again.targets[t].visits[i].timestamp);
      }

    TrajectoryDataset other = gen_trajectories(12, 5, 3, 0.2, 43);
    bool differs = false;
    for (size_t t = 0; t < ds.targets.size() && !differs; ++t)
      for (size_t i = 0; i < ds.targets[t].visits.size(); ++i)
        if (ds.targets[t].visits[i].camera != other.targets[t].visits[i].camera) {
          differs = true;
          break;
        }
    CHECK(differs);
  }

  SUBCASE("one camera pins every visit") {
    TrajectoryDataset ds = gen_trajectories(1, 3, 2, 0.3, 11);
    for (const TargetTrack& t : ds.targets)
      for (const CameraVisit& v : t.visits) CHECK(v.camera == 0);
  }

  SUBCASE("zero drift repeats the movement pattern across days") {
    TrajectoryDataset still = gen_trajectories(16, 40, 2, 0.0, 99);
    double d_still = mean_abs_delta(build_correlations(day_slice(still, 0), 8),
                                    build_correlations(day_slice(still, 1), 8));
    TrajectoryDataset moved = gen_trajectories(16, 40, 2, 0.5, 99);
    double d_moved = mean_abs_delta(build_correlations(day_slice(moved, 0), 8),
                                    build_correlations(day_slice(moved, 1), 8));
    CHECK(d_still < 0.06);            // sampling noise only
    CHECK(d_moved > 1.5 * d_still);   // rotated corridors reshape the matrix
  }

  SUBCASE("contracts") {
    CHECK_THROWS_AS(gen_trajectories(0, 3, 1, 0.0, 1), contract_error);
    CHECK_THROWS_AS(gen_trajectories(4, 0, 1, 0.0, 1), contract_error);
    CHECK_THROWS_AS(gen_trajectories(4, 3, 0, 0.0, 1), contract_error);
    CHECK_THROWS_AS(gen_trajectories(4, 3, 1, -0.1, 1), contract_error);
    CHECK_THROWS_AS(gen_trajectories(4, 3, 1, 1.1, 1), contract_error);
  }
}

TEST_CASE("day_slice bounds") {
  TrajectoryDataset ds = gen_trajectories(9, 4, 3, 0.1, 8);
  DayData day = day_slice(ds, 1);
  CHECK(day.t_begin == 240);
  CHECK(day.t_end == 480);
  CHECK(day.n_cameras == 9);
  REQUIRE(day.tracks.size() == 4);
  for (const TargetTrack& t : day.tracks) {
    CHECK(t.visits.size() == 240);
    for (const CameraVisit& v : t.visits) {
      CHECK(v.timestamp >= 240);
      CHECK(v.timestamp < 480);
    }
  }
  CHECK_THROWS_AS(day_slice(ds, 3), contract_error);
  CHECK_THROWS_AS(day_slice(ds, -1), contract_error);
}

TEST_CASE("csv ingest") {
  const char* path = "tmp_trajectories.csv";
  {
    std::ofstream out(path);
    out << "target_id,timestamp,lon,lat\n";
    out << "7,1000,-8.0,41.0\n";
    out << "7,1060,-8.0,41.0\n";
    out << "7,1060,-7.0,42.0\n";  // duplicate minute, dropped
    out << "3,1120,-7.0,42.0\n";
    out << "3,1000,-7.5,41.5\n";  // out of order, sorted in
  }
  TrajectoryDataset ds = load_trajectories_csv(path, 4, 100);
  std::remove(path);

  CHECK(ds.n_cameras == 4);
  CHECK(ds.grid_w == 2);
  CHECK(ds.days == 2);  // rebased timestamps reach 120 with 100-minute days
  REQUIRE(ds.targets.size() == 2);
  CHECK(ds.targets[0].target_id == 3);
  REQUIRE(ds.targets[0].visits.size() == 2);
  CHECK(ds.targets[0].visits[0].camera == 3);  // (-7.5, 41.5) snaps to the far cell
  CHECK(ds.targets[0].visits[0].timestamp == 0);
  CHECK(ds.targets[0].visits[1].camera == 3);
  CHECK(ds.targets[0].visits[1].timestamp == 120);
  CHECK(ds.targets[1].target_id == 7);
  REQUIRE(ds.targets[1].visits.size() == 2);
  CHECK(ds.targets[1].visits[0].camera == 0);  // lon/lat minima snap to cell 0
  CHECK(ds.targets[1].visits[1].camera == 0);  // first row at minute 60 wins
  CHECK(ds.targets[1].visits[1].timestamp == 60);
  CHECK_NOTHROW(validate_trajectories(ds));

  CHECK_THROWS_AS(load_trajectories_csv("no_such_file.csv", 4, 100), io_error);
  {
    std::ofstream out(path);
    out << "target_id,timestamp,lon,lat\n";
  }
  CHECK_THROWS_AS(load_trajectories_csv(path, 4, 100), io_error);
  {
    std::ofstream out(path);
    out << "1,oops,2\n";
  }
  CHECK_THROWS_AS(load_trajectories_csv(path, 4, 100), io_error);
  std::remove(path);
  CHECK_THROWS_AS(load_trajectories_csv(path, 0, 100), contract_error);
}

TEST_CASE("correlation building") {
  SUBCASE("a lockstep corridor saturates its pair") {
    DayData day;
    day.t_begin = 0;
    day.t_end = 16;
    day.n_cameras = 3;
    TargetTrack t;
    t.target_id = 0;
    for (long long m = 0; m < 16; m += 2) {
      t.visits.push_back({0, m});
      t.visits.push_back({1, m + 1});
    }
    day.tracks = {t};
    CorrelationModel model = build_correlations(day, 4);
    CHECK(model.spatial[0][1] == 1.0);  // zero goes to one in every window
    CHECK(model.spatial[1][0] == 0.0);  // never the other way
    CHECK(model.spatial[0][2] == 0.0);  // camera 2 never co-occurs
    CHECK(model.spatial[0][0] == 1.0);
    CHECK(model.spatial[2][2] == 1.0);
    REQUIRE(model.temporal.count({0, 1}) == 1);
    CHECK(model.temporal.at({0, 1}).at(1) == 1.0);  // always a one-minute hop
    CHECK(model.temporal.count({1, 0}) == 0);
  }

  SUBCASE("offset histograms normalize over observed hops") {
    DayData day;
    day.t_begin = 0;
    day.t_end = 16;
    day.n_cameras = 2;
    TargetTrack steady;
    steady.target_id = 0;
    for (long long m = 0; m < 16; m += 2) {
      steady.visits.push_back({0, m});
      steady.visits.push_back({1, m + 1});
    }
    TargetTrack slow;  // one 0 -> 1 hop taking three minutes
    slow.target_id = 1;
    slow.visits = {{0, 0}, {1, 3}};
    day.tracks = {steady, slow};
    CorrelationModel model = build_correlations(day, 4);
    CHECK(model.spatial[0][1] == 1.0);  // every presence at 0 still reaches 1
    CHECK(model.temporal.at({0, 1}).at(1) == doctest::Approx(8.0 / 9.0));
    CHECK(model.temporal.at({0, 1}).at(3) == doctest::Approx(1.0 / 9.0));
  }

  SUBCASE("entries stay normalized on generated data") {
    TrajectoryDataset ds = gen_trajectories(9, 6, 1, 0.0, 7);
    CorrelationModel model = build_correlations(day_slice(ds, 0), 10);
    CHECK_NOTHROW(validate_correlations(model));
    for (const auto& [pair, hist] : model.temporal) {
      double total = 0;
      for (const auto& [o, mass] : hist) {
        CHECK(o >= 0);
        CHECK(o < 10);
        total += mass;
      }
      CHECK(total == doctest::Approx(1.0));
    }
  }

  SUBCASE("contracts") {
    DayData empty;
    empty.n_cameras = 2;
    empty.t_begin = 0;
    empty.t_end = 10;
    CHECK_THROWS_AS(build_correlations(empty, 4), contract_error);
    TrajectoryDataset ds = gen_trajectories(4, 2, 1, 0.0, 3);
    CHECK_THROWS_AS(build_correlations(day_slice(ds, 0), 0), contract_error);
  }
}

TEST_CASE("track_query pruning semantics") {
  TrajectoryDataset ds = gen_trajectories(9, 6, 1, 0.0, 7);
  DayData day = day_slice(ds, 0);
  CorrelationModel base = build_correlations(day, 10);

  SUBCASE("zero thresholds search everything") {
    CorrelationModel m = base;
    m.spatial_threshold = 0;
    m.temporal_threshold = 0;
    for (const TargetTrack& t : day.tracks) {
      QueryResult q = track_query(t.target_id, t.visits[0].camera, t.visits[0].timestamp, m, day);
      CHECK(q.recall == 1.0);
      CHECK(q.frames_searched == 9 * 240);
      CHECK(q.returned.size() == 240);  // every minute of the target's day
    }
  }

  SUBCASE("an impossible spatial gate stays on the sighting camera") {
    CorrelationModel m = base;
    m.spatial_threshold = 1.01;
    m.temporal_threshold = 0;
    const TargetTrack& t = day.tracks[0];
    int cam = t.visits[0].camera;
    QueryResult q = track_query(t.target_id, cam, t.visits[0].timestamp, m, day);
    CHECK(q.frames_searched <= 240);
    for (const auto& [c, mnt] : q.returned) CHECK(c == cam);

    QueryResult exhaustive = track_query(t.target_id, cam, t.visits[0].timestamp, base, day);
    CHECK(q.recall <= exhaustive.recall);
  }

  SUBCASE("closing both gates searches just the sighting frame") {
    CorrelationModel m = base;
    m.spatial_threshold = 1.01;
    m.temporal_threshold = 1.01;
    const TargetTrack& t = day.tracks[0];
    QueryResult q = track_query(t.target_id, t.visits[0].camera, t.visits[0].timestamp, m, day);
    CHECK(q.frames_searched == 1);
    CHECK(q.recall == doctest::Approx(1.0 / 240.0));
    CHECK(q.precision == 1.0);
  }

  SUBCASE("raising either threshold never finds more or searches more") {
    const TargetTrack& t = day.tracks[2];
    int cam = t.visits[0].camera;
    long long ts = t.visits[0].timestamp;

    double prev_recall = 2.0;
    long long prev_frames = 1LL << 40;
    for (double s : {0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 1.0}) {
      CorrelationModel m = base;
      m.spatial_threshold = s;
      m.temporal_threshold = 0.02;
      QueryResult q = track_query(t.target_id, cam, ts, m, day);
      CHECK(q.recall <= prev_recall);
      CHECK(q.frames_searched <= prev_frames);
      prev_recall = q.recall;
      prev_frames = q.frames_searched;
    }

    prev_recall = 2.0;
    prev_frames = 1LL << 40;
    for (double s : {0.0, 0.01, 0.02, 0.05, 0.1, 0.3, 1.0}) {
      CorrelationModel m = base;
      m.spatial_threshold = 0.1;
      m.temporal_threshold = s;
      QueryResult q = track_query(t.target_id, cam, ts, m, day);
      CHECK(q.recall <= prev_recall);
      CHECK(q.frames_searched <= prev_frames);
      prev_recall = q.recall;
      prev_frames = q.frames_searched;
    }
  }

  SUBCASE("contracts") {
    CHECK_THROWS_AS(track_query(0, -1, 0, base, day), contract_error);
    CHECK_THROWS_AS(track_query(0, 9, 0, base, day), contract_error);
    CHECK_THROWS_AS(track_query(77, 0, 0, base, day), contract_error);
    DayData wrong = day;
    wrong.n_cameras = 4;
    CHECK_THROWS_AS(track_query(0, 0, 0, base, wrong), contract_error);
  }
}

TEST_CASE("three-camera toy matches the brute-force oracle") {
  TrajectoryDataset ds = gen_trajectories(3, 4, 1, 0.0, 5);
  DayData day = day_slice(ds, 0);
  CorrelationModel base = build_correlations(day, 6);

  const double grids[4][2] = {{0.0, 0.02}, {0.1, 0.0}, {0.2, 0.03}, {0.35, 0.05}};
  for (const auto& g : grids) {
    CorrelationModel m = base;
    m.spatial_threshold = g[0];
    m.temporal_threshold = g[1];
    for (const TargetTrack& t : day.tracks) {
      int cam = t.visits[0].camera;
      long long ts = t.visits[0].timestamp;
      QueryResult q = track_query(t.target_id, cam, ts, m, day);
      OracleOut o = oracle_query(t.target_id, cam, ts, m, day);

      CHECK(q.frames_searched == static_cast<long long>(o.searched.size()));
      REQUIRE(q.returned.size() == o.matched.size());
      size_t i = 0;
      for (const auto& frame : o.matched) CHECK(q.returned[i++] == frame);
      double recall = static_cast<double>(o.matched.size()) / 240.0;
      CHECK(q.recall == doctest::Approx(recall));
      if (!o.searched.empty()) {
        double prec = static_cast<double>(o.matched.size()) /
                      static_cast<double>(o.searched.size());
        CHECK(q.precision == doctest::Approx(prec));
      }
    }
  }
}

TEST_CASE("camera_eval") {
  SUBCASE("exhaustive queries score perfect throughput") {
    QueryResult a, b;
    a.recall = b.recall = 1.0;
    a.precision = 0.2;
    b.precision = 0.4;
    a.frames_searched = b.frames_searched = 100;
    EvalReport rep = camera_eval({a, b}, {}, 100);
    CHECK(rep.metrics.at("accuracy") == 1.0);
    CHECK(rep.metrics.at("precision") == doctest::Approx(0.3));
    CHECK(rep.metrics.at("frames_searched") == 100.0);
    CHECK(rep.metrics.at("throughput") == doctest::Approx(1.0));
  }

  SUBCASE("means and goal gating") {
    QueryResult a, b;
    a.recall = 1.0;
    b.recall = 0.5;
    a.frames_searched = 100;
    b.frames_searched = 50;
    EvalReport rep = camera_eval({a, b}, {{"accuracy", true, 0.7}}, 100);
    CHECK(rep.metrics.at("accuracy") == doctest::Approx(0.75));
    CHECK(rep.metrics.at("frames_searched") == doctest::Approx(75.0));
    CHECK(rep.metrics.at("throughput") == doctest::Approx(200.0 / 150.0));
    CHECK(rep.finished);
    rep = camera_eval({a, b}, {{"accuracy", true, 0.8}}, 100);
    CHECK_FALSE(rep.finished);
  }

  SUBCASE("contracts") {
    CHECK_THROWS_AS(camera_eval({}, {}, 100), contract_error);
    QueryResult a;
    CHECK_THROWS_AS(camera_eval({a}, {}, 0), contract_error);
  }
}

TEST_CASE("threshold tuning rides the shaping machinery") {
  TrajectoryDataset ds = gen_trajectories(9, 6, 1, 0.0, 7);
  DayData day = day_slice(ds, 0);
  CorrelationModel base = build_correlations(day, 10);
  const long long total = 9LL * 240;
  Goals goals = {{"accuracy", true, 0.95}};

  auto run_day = [&](double ts, double tt) {
    CorrelationModel m = base;
    m.spatial_threshold = ts;
    m.temporal_threshold = tt;
    return camera_eval(run_day_queries(day, m), goals, total);
  };

  ShapingConfig cfg;
  cfg.costs = {{"frames_searched", 1.0, static_cast<double>(total)}};

  SUBCASE("grid override evaluates exactly the given candidates") {
    ShapingConfig grid = cfg;
    grid.grid_override = {Candidate{{0.0, 0.0}, 0, 1}, Candidate{{0.05, 0.02}, 0, 1},
                          Candidate{{1.0, 1.0}, 0, 1}};
    ShapingResult r = tune_thresholds(run_day, goals, grid, 1);
    REQUIRE(r.history.size() == 3);
    for (int e = 0; e < 3; ++e) {
      const Candidate& c = grid.grid_override[static_cast<size_t>(e)];
      EvalReport rep = run_day(c.w[0], c.w[1]);
      CHECK(r.history[e].loss == shaping_loss(goals, rep, grid.costs));
      CHECK(r.history[e].met == goals_met(goals, rep));
    }
    CHECK(r.goals_met);
    CHECK(r.best.w == std::vector<double>{0.05, 0.02});  // met, and cheaper than exhaustive
    CHECK(r.best_loss == r.history[1].loss);
    CHECK(r.history[1].loss < r.history[0].loss);

    ShapingResult again = tune_thresholds(run_day, goals, grid, 999);
    CHECK(again.best.w == r.best.w);  // the override ignores the seed
  }

  SUBCASE("the acquisition loop finds a pruning pair that keeps the goal") {
    ShapingConfig bo = cfg;
    bo.epochs = 10;
    bo.n_candidates = 48;
    ShapingResult r = tune_thresholds(run_day, goals, bo, 1313);
    REQUIRE(r.history.size() == 10);
    CHECK(r.goals_met);
    CHECK(r.best_loss < 0.6);     // exhaustive costs 1.0, pruning must win
    CHECK(r.best.w[0] < 0.35);    // inside the permissive spatial band
    double best_met = std::numeric_limits<double>::infinity();
    for (const ShapingEpoch& e : r.history)
      if (e.met) best_met = std::min(best_met, e.loss);
    CHECK(r.best_loss == best_met);

    ShapingResult again = tune_thresholds(run_day, goals, bo, 1313);
    CHECK(again.best.w == r.best.w);
    CHECK(again.best_loss == r.best_loss);
    REQUIRE(again.history.size() == r.history.size());
    for (size_t i = 0; i < r.history.size(); ++i)
      CHECK(again.history[i].loss == r.history[i].loss);
  }

  SUBCASE("an impossible goal returns the least-bad pair, flagged") {
    Goals impossible = {{"accuracy", true, 2.0}};
    auto run_bad = [&](double ts, double tt) {
      CorrelationModel m = base;
      m.spatial_threshold = ts;
      m.temporal_threshold = tt;
      return camera_eval(run_day_queries(day, m), impossible, total);
    };
    ShapingConfig bo = cfg;
    bo.epochs = 5;
    bo.n_candidates = 16;
    ShapingResult r = tune_thresholds(run_bad, impossible, bo, 4);
    CHECK_FALSE(r.goals_met);
    double best = std::numeric_limits<double>::infinity();
    for (const ShapingEpoch& e : r.history) best = std::min(best, e.loss);
    CHECK(r.best_loss == best);
  }

  SUBCASE("contracts") {
    CHECK_THROWS_AS(tune_thresholds({}, goals, cfg, 1), contract_error);
    CHECK_THROWS_AS(tune_thresholds(run_day, {}, cfg, 1), contract_error);
    ShapingConfig zero = cfg;
    zero.epochs = 0;
    CHECK_THROWS_AS(tune_thresholds(run_day, goals, zero, 1), contract_error);
    ShapingConfig bad = cfg;
    bad.grid_override = {Candidate{{0.5}, 0, 1}};
    CHECK_THROWS_AS(tune_thresholds(run_day, goals, bad, 1), contract_error);
    bad.grid_override = {Candidate{{0.5, 1.5}, 0, 1}};
    CHECK_THROWS_AS(tune_thresholds(run_day, goals, bad, 1), contract_error);
  }
}
