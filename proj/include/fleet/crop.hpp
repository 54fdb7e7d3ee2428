#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fleet/core.hpp"
#include "fleet/mission.hpp"

namespace fleet {

// Synthetic crop-scouting world generator and FleetSpec wiring. Contexts
// carry three channels per cell: a greenness analog tracking the latent
// yield, a leaf-area analog correlated with it, and pure sensor noise.
// ground_truth holds the latent yield in [0,1].
struct CropParams {
  int width = 24;
  int height = 24;
  int smoothness = 2;   // box-blur passes over the value noise
  double noise = 0.02;  // channel-0 sensor noise amplitude
  double drift = 0.0;   // per-mission latent blend step for field families
};

// One field, deterministic per seed.
ExecutionContext gen_field(int width, int height, int smoothness, uint64_t seed,
                           double noise = 0.02);

// Mission k of a slowly drifting family: the latent yield blends from one
// value-noise base toward another by min(k*drift, 1), and the per-mission
// sensor noise is re-rolled. k=0 with drift 0 reproduces gen_field.
ExecutionContext gen_field_family(const CropParams& p, uint64_t seed, int mission_index);

// Pooled lag-1 Pearson autocorrelation over horizontal and vertical
// neighbor pairs. 0 for constant fields.
double lag1_autocorr(const std::vector<double>& field, int width, int height);

// Inverse-distance-weighted (power 2) fill of the whole grid from the
// visited estimates; visited states keep their values exactly.
std::vector<double> extrapolate(const std::map<StateId, double>& visited, int width,
                                int height);

// Eval core shared by missions and baselines: builds the extrapolated yield
// map and scores accuracy = 1 - MAE / truth range.
EvalReport crop_eval(const EvalInput& in);

// FleetSpec for the crop app: 3-feature identity-normalized Map over the
// cell channels, crop_eval, caller-supplied swarm size and goals.
FleetSpec make_crop_fleetspec(int n_agents, Goals goals, const LearningParams& params = {});

}  // namespace fleet
