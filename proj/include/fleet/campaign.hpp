#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleet/autoscale.hpp"
#include "fleet/camera.hpp"
#include "fleet/online.hpp"

namespace fleet {

// Between-mission learning knobs. cluster is optional: when present it
// observes missions through the driver hook and hosts the retraining queue
// between them. bo_epochs counts total weight evaluations per agent, so it
// should exceed the variant count or the search never leaves its seeds.
struct CampaignConfig {
  AggregationMode aggregation = AggregationMode::Powerset;
  WeightConfig weights;
  MissionOptions mission;  // epsilon and gating; mode is managed per round
  // Exploration while flying trained ensembles. Deployment exploits: the
  // weight search scores candidates greedily, so flying them greedily keeps
  // the flown policy the one that was scored.
  double frozen_epsilon = 0.0;
  EdgeCluster* cluster = nullptr;
  int idle_budget = 200000;  // tick cap for draining retrain work
};

// One mission plus the learning pass that followed it.
struct CampaignRound {
  EvalReport report;
  MissionTrace trace;
  long long steps = 0;
  double agent_energy = 0;         // summed over the swarm
  double edge_energy = 0;          // cluster ledger growth during the round
  std::vector<double> usefulness;  // per variant after this mission
};

struct CampaignResult {
  std::vector<CampaignRound> rounds;
  AggregationSet aggs;
  std::vector<std::vector<double>> final_weights;  // per agent, simplex
};

// Runs n_missions against spec.contexts.runtime (mission k flies context
// k mod |runtime|). Mission 0 flies the shared base model live. With
// online=true each mission's trace is split per agent, the aggregation
// variants are replayed from the rolling base, every agent re-optimizes its
// ensemble weights on the context just flown, usefulness is averaged across
// agents, and retrain tasks carrying it drain through the cluster; the next
// mission flies the new ensembles frozen and the base rolls forward to the
// most useful variant. online=false re-flies the base configuration every
// time. Deterministic given seed; n_missions=1 reduces to run_mission.
CampaignResult run_campaign(const FleetSpec& spec, const RewardSpec& rspec, int n_missions,
                            bool online, uint64_t seed, const CampaignConfig& cfg = {});

// CSV mission,accuracy,steps,energy; energy = agents + cluster growth.
void save_campaign_csv(const CampaignResult& res, const std::string& path);

// JSON [{mission, models:[{subset, usefulness}]}], one row per mission.
void save_usefulness_history(const CampaignResult& res, const std::string& path);

// Per-day staleness study on one drifting trajectory dataset. Three tracks
// share the day's query workload: a model built and threshold-tuned on the
// same day, the previous day's tuned model carried forward (daily
// retraining), and the day-0 model frozen for the whole horizon.
struct CameraDayRow {
  int day = 0;
  double tuned_recall = 0;
  double retrained_recall = 0;
  double frozen_recall = 0;
  double tuned_frames = 0;
  double retrained_frames = 0;
  double frozen_frames = 0;
};

struct CameraCampaignResult {
  std::vector<CameraDayRow> days;
  // Day-0 tuned thresholds, frozen track's pair {spatial, temporal}.
  std::vector<double> frozen_thresholds;
};

CameraCampaignResult run_camera_campaign(const TrajectoryDataset& ds, int window_minutes,
                                         const Goals& goals, const ShapingConfig& scfg,
                                         uint64_t seed);

// CSV day,tuned_recall,retrained_recall,frozen_recall,tuned_frames,
// retrained_frames,frozen_frames.
void save_camera_campaign_csv(const CameraCampaignResult& res, const std::string& path);

}  // namespace fleet
