#include "fleet/camera.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fleet/errors.hpp"
#include "fleet/gp.hpp"
#include "fleet/rng.hpp"

namespace fleet {

namespace {

constexpr long long kMinutesPerDay = 240;
constexpr long long kBurnInMinutes = 120;
constexpr double kHeadingSpread = 2.0943951023931953;  // third of a turn
constexpr double kPi = 3.14159265358979323846;
constexpr double kCorridorBias = 3.0;  // heading concentration of the walk

int grid_width(int n_cameras) {
  int w = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_cameras))));
  return std::max(w, 1);
}

}  // namespace

TrajectoryDataset gen_trajectories(int n_cameras, int n_targets, int days, double drift,
                                   uint64_t seed) {
  FLEET_REQUIRE(n_cameras >= 1, "gen_trajectories: n_cameras must be >= 1");
  FLEET_REQUIRE(n_targets >= 1, "gen_trajectories: n_targets must be >= 1");
  FLEET_REQUIRE(days >= 1, "gen_trajectories: days must be >= 1");
  FLEET_REQUIRE(drift >= 0 && drift <= 1, "gen_trajectories: drift must lie in [0, 1]");

  TrajectoryDataset ds;
  ds.n_cameras = n_cameras;
  ds.grid_w = grid_width(n_cameras);
  ds.grid_h = (n_cameras + ds.grid_w - 1) / ds.grid_w;
  ds.days = days;
  ds.day_minutes = kMinutesPerDay;
  ds.drift = drift;

  Rng root(seed);
  // One shared flow direction per dataset. Individual headings jitter around
  // it, so the corridor structure is directional and drift (which rotates the
  // flow day by day) actually reshapes the pairwise statistics.
  const double flow = 2 * kPi * root.fork(0).uniform();
  // Screen-grid compass: east, north (up is a smaller row), west, south.
  const int dr[4] = {0, -1, 0, 1};
  const int dc[4] = {1, 0, -1, 0};
  const double angle[4] = {0.0, kPi / 2, kPi, 3 * kPi / 2};

  for (int i = 0; i < n_targets; ++i) {
    Rng rng = root.fork(static_cast<uint64_t>(i) + 1);
    TargetTrack track;
    track.target_id = i;
    int cam = static_cast<int>(rng.uniform_int(static_cast<size_t>(n_cameras)));
    double heading0 = flow + (rng.uniform() - 0.5) * kHeadingSpread;
    auto walk = [&](double heading) {
      int r = cam / ds.grid_w, c = cam % ds.grid_w;
      double w[4], total = 0;
      for (int k = 0; k < 4; ++k) {
        int nr = r + dr[k], nc = c + dc[k];
        int ncam = nr * ds.grid_w + nc;
        bool valid = nr >= 0 && nr < ds.grid_h && nc >= 0 && nc < ds.grid_w &&
                     ncam < n_cameras;
        w[k] = valid ? std::exp(kCorridorBias * std::cos(angle[k] - heading)) : 0.0;
        total += w[k];
      }
      if (total <= 0) return;  // nowhere to go on a 1x1 grid
      double u = rng.uniform() * total;
      int pick = -1;
      for (int k = 0; k < 4; ++k) {
        if (w[k] <= 0) continue;
        pick = k;  // rounding residue falls back to the last valid move
        u -= w[k];
        if (u < 0) break;
      }
      cam = (r + dr[pick]) * ds.grid_w + (c + dc[pick]);
    };
    // Unrecorded settling walk: day 0 opens on the target's established route
    // rather than its spawn transient, so days differ only by heading drift.
    for (long long m = 0; m < kBurnInMinutes; ++m) walk(heading0);
    for (int d = 0; d < days; ++d) {
      double heading = heading0 + d * drift * kPi;
      for (long long m = 0; m < kMinutesPerDay; ++m) {
        track.visits.push_back({cam, d * kMinutesPerDay + m});
        walk(heading);
      }
    }
    ds.targets.push_back(std::move(track));
  }
  validate_trajectories(ds);
  return ds;
}

TrajectoryDataset load_trajectories_csv(const std::string& path, int n_cameras,
                                        long long day_minutes) {
  FLEET_REQUIRE(n_cameras >= 1, "load_trajectories_csv: n_cameras must be >= 1");
  FLEET_REQUIRE(day_minutes >= 1, "load_trajectories_csv: day_minutes must be >= 1");
  std::ifstream in(path);
  if (!in.good()) fail_io("load_trajectories_csv: cannot open " + path);

  struct Row {
    int target;
    long long ts;
    double lon, lat;
  };
  std::vector<Row> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && line.rfind("target_id", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    Row row{};
    try {
      std::getline(ls, field, ',');
      row.target = std::stoi(field);
      std::getline(ls, field, ',');
      row.ts = std::stoll(field);
      std::getline(ls, field, ',');
      row.lon = std::stod(field);
      if (!std::getline(ls, field, ',')) throw std::invalid_argument("lat");
      row.lat = std::stod(field);
    } catch (const std::exception&) {
      fail_io("load_trajectories_csv: malformed row '" + line + "'");
    }
    rows.push_back(row);
  }
  if (rows.empty()) fail_io("load_trajectories_csv: no rows in " + path);

  double lon_lo = rows[0].lon, lon_hi = rows[0].lon;
  double lat_lo = rows[0].lat, lat_hi = rows[0].lat;
  long long ts_lo = rows[0].ts;
  for (const Row& r : rows) {
    lon_lo = std::min(lon_lo, r.lon);
    lon_hi = std::max(lon_hi, r.lon);
    lat_lo = std::min(lat_lo, r.lat);
    lat_hi = std::max(lat_hi, r.lat);
    ts_lo = std::min(ts_lo, r.ts);
  }

  TrajectoryDataset ds;
  ds.n_cameras = n_cameras;
  ds.grid_w = grid_width(n_cameras);
  ds.grid_h = (n_cameras + ds.grid_w - 1) / ds.grid_w;
  ds.day_minutes = day_minutes;
  ds.drift = 0;

  std::map<int, std::vector<CameraVisit>> by_target;
  long long ts_max = 0;
  for (const Row& r : rows) {
    auto snap = [](double v, double lo, double hi, int cells) {
      if (!(hi > lo)) return 0;
      int k = static_cast<int>(std::floor((v - lo) / (hi - lo) * cells));
      return std::clamp(k, 0, cells - 1);
    };
    int col = snap(r.lon, lon_lo, lon_hi, ds.grid_w);
    int row_idx = snap(r.lat, lat_lo, lat_hi, ds.grid_h);
    int cam = std::min(row_idx * ds.grid_w + col, n_cameras - 1);
    by_target[r.target].push_back({cam, r.ts - ts_lo});
    ts_max = std::max(ts_max, r.ts - ts_lo);
  }
  for (auto& [id, visits] : by_target) {
    std::stable_sort(visits.begin(), visits.end(),
                     [](const CameraVisit& a, const CameraVisit& b) {
                       return a.timestamp < b.timestamp;
                     });
    TargetTrack track;
    track.target_id = id;
    for (const CameraVisit& v : visits)
      if (track.visits.empty() || v.timestamp > track.visits.back().timestamp)
        track.visits.push_back(v);
    ds.targets.push_back(std::move(track));
  }
  ds.days = static_cast<int>(ts_max / day_minutes) + 1;
  validate_trajectories(ds);
  return ds;
}

void validate_trajectories(const TrajectoryDataset& ds) {
  FLEET_REQUIRE(ds.n_cameras >= 1, "trajectories: n_cameras must be >= 1");
  FLEET_REQUIRE(ds.days >= 1 && ds.day_minutes >= 1, "trajectories: empty day span");
  FLEET_REQUIRE(ds.grid_w >= 1 && ds.grid_h >= 1 &&
                    ds.grid_w * ds.grid_h >= ds.n_cameras,
                "trajectories: grid does not cover the cameras");
  for (const TargetTrack& t : ds.targets) {
    long long prev = -1;
    for (const CameraVisit& v : t.visits) {
      FLEET_REQUIRE(v.camera >= 0 && v.camera < ds.n_cameras,
                    "trajectories: visit references an unknown camera");
      FLEET_REQUIRE(v.timestamp > prev, "trajectories: timestamps must strictly increase");
      prev = v.timestamp;
    }
  }
}

DayData day_slice(const TrajectoryDataset& ds, int day) {
  FLEET_REQUIRE(day >= 0 && day < ds.days, "day_slice: day out of range");
  DayData out;
  out.t_begin = day * ds.day_minutes;
  out.t_end = (day + 1) * ds.day_minutes;
  out.n_cameras = ds.n_cameras;
  for (const TargetTrack& t : ds.targets) {
    TargetTrack cut;
    cut.target_id = t.target_id;
    for (const CameraVisit& v : t.visits)
      if (v.timestamp >= out.t_begin && v.timestamp < out.t_end) cut.visits.push_back(v);
    if (!cut.visits.empty()) out.tracks.push_back(std::move(cut));
  }
  return out;
}

CorrelationModel build_correlations(const DayData& day, int window_minutes) {
  FLEET_REQUIRE(window_minutes >= 1, "build_correlations: window must be >= 1");
  FLEET_REQUIRE(day.n_cameras >= 1, "build_correlations: day data names no cameras");
  bool any = false;
  for (const TargetTrack& t : day.tracks) any = any || !t.visits.empty();
  FLEET_REQUIRE(any, "build_correlations: day data is empty");

  const int n = day.n_cameras;
  CorrelationModel m;
  m.n_cameras = n;
  m.window_minutes = window_minutes;
  m.spatial.assign(n, std::vector<double>(n, 0.0));

  std::vector<double> occurrences(n, 0.0);
  std::vector<std::vector<double>> co(n, std::vector<double>(n, 0.0));
  std::map<std::pair<int, int>, std::map<int, double>> offsets;

  const long long stride = std::max<long long>(1, window_minutes / 2);
  for (long long start = day.t_begin; start < day.t_end; start += stride) {
    const long long stop = start + window_minutes;
    for (const TargetTrack& t : day.tracks) {
      // First sighting per camera inside the window, in arrival order.
      std::map<int, long long> first;
      for (const CameraVisit& v : t.visits) {
        if (v.timestamp < start || v.timestamp >= stop) continue;
        if (!first.count(v.camera)) first[v.camera] = v.timestamp;
      }
      if (first.empty()) continue;
      std::vector<std::pair<long long, int>> order;
      for (const auto& [cam, ts] : first) order.emplace_back(ts, cam);
      std::sort(order.begin(), order.end());
      for (const auto& [ts, cam] : order) occurrences[cam] += 1;
      for (size_t i = 0; i < order.size(); ++i) {
        for (size_t j = i + 1; j < order.size(); ++j) {
          int from = order[i].second, to = order[j].second;
          co[from][to] += 1;
          offsets[{from, to}][static_cast<int>(order[j].first - order[i].first)] += 1;
        }
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      m.spatial[i][j] = occurrences[i] > 0 ? co[i][j] / occurrences[i] : 0.0;
    m.spatial[i][i] = 1.0;
  }
  for (auto& [pair, hist] : offsets) {
    double total = 0;
    for (const auto& [o, count] : hist) total += count;
    if (total <= 0) continue;
    std::map<int, double> norm;
    for (const auto& [o, count] : hist) norm[o] = count / total;
    m.temporal[pair] = std::move(norm);
  }
  validate_correlations(m);
  return m;
}

void validate_correlations(const CorrelationModel& m) {
  FLEET_REQUIRE(m.n_cameras >= 1, "correlations: no cameras");
  FLEET_REQUIRE(m.window_minutes >= 1, "correlations: window must be >= 1");
  FLEET_REQUIRE(static_cast<int>(m.spatial.size()) == m.n_cameras,
                "correlations: matrix is not square");
  for (int i = 0; i < m.n_cameras; ++i) {
    FLEET_REQUIRE(static_cast<int>(m.spatial[i].size()) == m.n_cameras,
                  "correlations: matrix is not square");
    for (double v : m.spatial[i])
      FLEET_REQUIRE(v >= 0 && v <= 1, "correlations: entries must lie in [0, 1]");
    FLEET_REQUIRE(m.spatial[i][i] == 1.0, "correlations: diagonal must be 1");
  }
}

namespace {

double pair_mass(const CorrelationModel& m, int from, int to, int offset) {
  auto it = m.temporal.find({from, to});
  if (it == m.temporal.end()) return 0.0;
  auto jt = it->second.find(offset);
  return jt == it->second.end() ? 0.0 : jt->second;
}

}  // namespace

QueryResult track_query(int target, int camera, long long t, const CorrelationModel& model,
                        const DayData& day) {
  validate_correlations(model);
  FLEET_REQUIRE(camera >= 0 && camera < model.n_cameras, "track_query: unknown camera");
  FLEET_REQUIRE(day.n_cameras == model.n_cameras,
                "track_query: model and day disagree on the camera count");

  std::set<std::pair<int, long long>> truth;
  bool known = false;
  for (const TargetTrack& tr : day.tracks) {
    if (tr.target_id != target) continue;
    known = true;
    for (const CameraVisit& v : tr.visits) truth.insert({v.camera, v.timestamp});
  }
  FLEET_REQUIRE(known, "track_query: target has no sightings in the day");

  const int n = model.n_cameras;
  const int w = model.window_minutes;
  std::set<std::pair<int, long long>> searched, matched;
  std::vector<std::pair<int, long long>> pending;
  std::set<std::pair<int, long long>> processed;

  auto scan = [&](int cam, long long minute) {
    if (minute < day.t_begin || minute >= day.t_end) return;
    auto frame = std::make_pair(cam, minute);
    if (!searched.insert(frame).second) return;
    if (truth.count(frame)) {
      matched.insert(frame);
      if (processed.insert(frame).second) pending.push_back(frame);
    }
  };

  scan(camera, t);
  if (processed.insert({camera, t}).second) pending.push_back({camera, t});
  while (!pending.empty()) {
    auto [ci, ti] = pending.back();
    pending.pop_back();
    for (int j = 0; j < n; ++j) {
      if (j != ci && model.spatial[ci][j] < model.spatial_threshold) continue;
      for (int o = 0; o < w; ++o) {
        if (pair_mass(model, ci, j, o) >= model.temporal_threshold) scan(j, ti + o);
        if (pair_mass(model, j, ci, o) >= model.temporal_threshold) scan(j, ti - o);
      }
    }
  }

  QueryResult res;
  res.returned.assign(matched.begin(), matched.end());
  res.frames_searched = static_cast<long long>(searched.size());
  res.precision = searched.empty()
                      ? 0.0
                      : static_cast<double>(matched.size()) / static_cast<double>(searched.size());
  res.recall = truth.empty()
                   ? 1.0
                   : static_cast<double>(matched.size()) / static_cast<double>(truth.size());
  return res;
}

std::vector<QueryResult> run_day_queries(const DayData& day, const CorrelationModel& model) {
  std::vector<QueryResult> out;
  for (const TargetTrack& t : day.tracks) {
    if (t.visits.empty()) continue;
    out.push_back(
        track_query(t.target_id, t.visits.front().camera, t.visits.front().timestamp, model, day));
  }
  FLEET_REQUIRE(!out.empty(), "run_day_queries: day has no sightings");
  return out;
}

EvalReport camera_eval(const std::vector<QueryResult>& results, const Goals& goals,
                       long long total_frames) {
  FLEET_REQUIRE(!results.empty(), "camera_eval: at least one query is required");
  FLEET_REQUIRE(total_frames >= 1, "camera_eval: total_frames must be >= 1");
  double recall = 0, precision = 0, searched = 0;
  for (const QueryResult& r : results) {
    recall += r.recall;
    precision += r.precision;
    searched += static_cast<double>(r.frames_searched);
  }
  const double q = static_cast<double>(results.size());
  EvalReport rep;
  rep.metrics["accuracy"] = recall / q;
  rep.metrics["precision"] = precision / q;
  rep.metrics["frames_searched"] = searched / q;
  rep.metrics["throughput"] =
      searched > 0 ? q * static_cast<double>(total_frames) / searched : 0.0;
  rep.finished = goals_met(goals, rep);
  return rep;
}

ShapingResult tune_thresholds(const std::function<EvalReport(double, double)>& run_day,
                              const Goals& goals, const ShapingConfig& cfg, uint64_t seed) {
  FLEET_REQUIRE(static_cast<bool>(run_day), "tune_thresholds: run_day must be callable");
  FLEET_REQUIRE(!goals.empty(), "tune_thresholds: goals must be nonempty");
  const bool grid = !cfg.grid_override.empty();
  if (!grid) {
    FLEET_REQUIRE(cfg.epochs >= 1, "tune_thresholds: epochs must be >= 1");
    FLEET_REQUIRE(cfg.n_candidates >= 1, "tune_thresholds: n_candidates must be >= 1");
  }
  for (const Candidate& c : cfg.grid_override) {
    FLEET_REQUIRE(c.w.size() == 2, "tune_thresholds: candidates carry two thresholds");
    for (double v : c.w)
      FLEET_REQUIRE(v >= 0 && v <= 1, "tune_thresholds: thresholds must lie in [0, 1]");
  }

  const int epochs = grid ? static_cast<int>(cfg.grid_override.size()) : cfg.epochs;
  Surrogate gp(2, cfg.gp);
  Rng prop_rng = Rng(seed).fork(0);

  ShapingResult out;
  double best_obs = std::numeric_limits<double>::infinity();
  double best_met = std::numeric_limits<double>::infinity();
  double best_any = std::numeric_limits<double>::infinity();
  Candidate cand_met, cand_any;

  for (int e = 0; e < epochs; ++e) {
    Candidate c;
    if (grid) {
      c = cfg.grid_override[static_cast<size_t>(e)];
    } else if (e == 0) {
      c.w = {0.5, 0.5};
    } else {
      std::vector<double> xn = propose_next(gp, best_obs, cfg.n_candidates, prop_rng);
      c.w = xn;
    }
    EvalReport rep = run_day(c.w[0], c.w[1]);
    double loss = shaping_loss(goals, rep, cfg.costs);
    bool met = goals_met(goals, rep);
    out.history.push_back({e, loss, met});
    if (met && loss < best_met) {
      best_met = loss;
      cand_met = c;
    }
    if (loss < best_any) {
      best_any = loss;
      cand_any = c;
    }
    best_obs = std::min(best_obs, loss);
    gp.add(c.w, loss);
    gp.fit();
  }

  out.goals_met = best_met < std::numeric_limits<double>::infinity();
  out.best = out.goals_met ? cand_met : cand_any;
  out.best_loss = out.goals_met ? best_met : best_any;
  return out;
}

}  // namespace fleet
