#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fleet/autoscale.hpp"
#include "fleet/crop.hpp"
#include "fleet/mission.hpp"
#include "fleet/shaping.hpp"

namespace fleet {

// Camera-app generator knobs (the crop side reuses CropParams directly).
struct CameraParams {
  int cameras = 16;
  int targets = 36;
  int days = 14;
  double drift = 0.1;
  int window_minutes = 10;
};

// Everything one experiment needs, loadable from a single JSON file. Flag
// overrides land on top of the loaded struct, so a config file plus a flag
// set always merges to the same experiment.
struct MissionConfig {
  std::string app = "crop";  // crop | camera
  int agents = 4;
  int tile = 4;
  int missions = 1;
  bool online = true;
  bool use_cluster = false;
  std::string baseline;  // "", "automated", "classic"
  uint64_t seed = 1;
  int seeds = 1;
  std::string out_dir = "out";

  Goals goals = {{"accuracy", true, 0.7}};
  LearningParams params;
  // Fallback reward when no shaping result is on disk. The numbers come from
  // a shaping run over the default field family at the default goal.
  RewardSpec reward{{0.77, 0.82, 0.92}, 0.11, 16};
  EnergyRates energy;

  CropParams crop{24, 24, 4, 0.02, 0.0};
  CameraParams camera;

  int shaping_epochs = 40;
  int shaping_candidates = 128;
  std::vector<CostTerm> shaping_costs = {{"coverage", 0.5, 1.0}};
  uint64_t shaping_seed = 424242;

  int weight_epochs = 24;
  int weight_candidates = 64;
  std::vector<CostTerm> weight_costs = {{"coverage", 1.0, 1.0}};
  double mission_epsilon = -1.0;  // negative: learning-params default
  double frozen_epsilon = 0.0;

  EdgeClusterConfig edge;
  // Coverage target handed to the automated baseline, which sweeps rows
  // until it is reached (it has no notion of accuracy goals).
  double automated_coverage = 0.5;
};

// Unset fields keep the config value; set fields win.
struct ConfigOverrides {
  std::optional<std::string> app;
  std::optional<std::string> baseline;
  std::optional<std::string> out_dir;
  std::optional<int> agents;
  std::optional<int> missions;
  std::optional<int> seeds;
  std::optional<uint64_t> seed;
  std::optional<bool> online;
  std::optional<bool> use_cluster;
};

// Parses and schema-checks one JSON config. Unknown keys, type mismatches,
// and out-of-range values raise io_error naming the offending field.
MissionConfig load_mission_config(const std::string& path);

void apply_overrides(MissionConfig& cfg, const ConfigOverrides& o);

// Field-level sanity; io_error on violation. Called by load_mission_config
// and again by commands after overrides.
void validate_mission_config(const MissionConfig& cfg);

// Crop-app FleetSpec: generated runtime field family (one context per
// mission, drifting with the mission index) plus two fixed shaping fields
// shared across seeds.
FleetSpec build_crop_fleetspec(const MissionConfig& cfg);

}  // namespace fleet
