#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fleet/core.hpp"
#include "fleet/shaping.hpp"

namespace fleet {

// Synthetic cross-camera tracking world: targets walk a near-square grid of
// cameras along per-target corridors, one visit per simulated minute. The
// correlation model built from a day of visits is the app's state model;
// its two pruning thresholds are the tunable history model.

struct CameraVisit {
  int camera = 0;
  long long timestamp = 0;  // minutes since dataset start
};

struct TargetTrack {
  int target_id = 0;
  std::vector<CameraVisit> visits;  // strictly increasing timestamps
};

struct TrajectoryDataset {
  int n_cameras = 0;
  int grid_w = 0;
  int grid_h = 0;
  int days = 0;
  long long day_minutes = 0;
  double drift = 0;
  std::vector<TargetTrack> targets;
};

// One day's worth of visits, bounds half-open in minutes.
struct DayData {
  std::vector<TargetTrack> tracks;
  long long t_begin = 0;
  long long t_end = 0;
  int n_cameras = 0;
};

// Corridor-biased random walks, deterministic per seed. Each target owns a
// preferred heading; every day the heading rotates by drift * pi, so drift 0
// repeats the day-one movement distribution and drift near 1 reverses it.
TrajectoryDataset gen_trajectories(int n_cameras, int n_targets, int days, double drift,
                                   uint64_t seed);

// Porto-style ingest: target_id,timestamp,lon,lat rows, positions snapped to
// the near-square camera grid, timestamps rebased to minutes from the
// earliest row. Duplicate-timestamp rows per target collapse to the first.
TrajectoryDataset load_trajectories_csv(const std::string& path, int n_cameras,
                                        long long day_minutes);

void validate_trajectories(const TrajectoryDataset& ds);

DayData day_slice(const TrajectoryDataset& ds, int day);

struct CorrelationModel {
  int n_cameras = 0;
  int window_minutes = 0;
  // spatial[i][j]: share of (target, window) pairs present at i that reached
  // j later in the same window. Unit diagonal by convention.
  std::vector<std::vector<double>> spatial;
  // Per ordered pair, normalized mass of the observed arrival offsets.
  std::map<std::pair<int, int>, std::map<int, double>> temporal;
  double spatial_threshold = 0;
  double temporal_threshold = 0;
};

// Sliding windows at half-window stride over the day.
CorrelationModel build_correlations(const DayData& day, int window_minutes);

void validate_correlations(const CorrelationModel& m);

struct QueryResult {
  std::vector<std::pair<int, long long>> returned;  // matched (camera, minute)
  long long frames_searched = 0;
  double precision = 0;
  double recall = 0;
};

// Recursive pruned search from one sighting. Cameras pass the spatial gate
// (the sighting's own camera always does), minutes pass where the pair's
// offset mass clears the temporal gate, forward via the (from, to) histogram
// and backward via (to, from); matches recurse. Thresholds at zero widen
// every gate, which on continuous tracks closes over the whole day.
QueryResult track_query(int target, int camera, long long t, const CorrelationModel& model,
                        const DayData& day);

// One query per target in the day, seeded at its first sighting.
std::vector<QueryResult> run_day_queries(const DayData& day, const CorrelationModel& model);

// Mean recall is the accuracy metric; precision, mean frames searched, and
// the throughput proxy (conceptual day frames / frames actually searched)
// ride along.
EvalReport camera_eval(const std::vector<QueryResult>& results, const Goals& goals,
                       long long total_frames);

// Threshold search reusing the reward-shaping machinery: same surrogate,
// acquisition, loss, and result shape, with the candidate reduced to the
// two thresholds (w = {spatial, temporal}). grid_override still short
// circuits the acquisition loop.
ShapingResult tune_thresholds(const std::function<EvalReport(double, double)>& run_day,
                              const Goals& goals, const ShapingConfig& cfg, uint64_t seed);

}  // namespace fleet
