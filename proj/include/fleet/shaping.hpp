#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleet/gp.hpp"
#include "fleet/mission.hpp"
#include "fleet/models.hpp"

namespace fleet {

// One additive cost term: weight * metrics[metric] / scale. Scale carries the
// normalizer (state count for steps, energy budget for energy).
struct CostTerm {
  std::string metric;
  double weight = 0;
  double scale = 1;
};

// Goal hinge penalties plus weighted normalized costs. A satisfied goal
// contributes exactly 0; shortfalls and overshoots are relative to the
// target. Throws when a referenced metric is missing.
double shaping_loss(const Goals& goals, const EvalReport& report,
                    const std::vector<CostTerm>& costs);

// The tuple reward shaping searches over. t_v is an integer in
// {1..t_v_max}; t_u lives in [0, m].
struct Candidate {
  std::vector<double> w;
  double t_u = 0;
  int t_v = 1;

  bool operator==(const Candidate&) const = default;
};

RewardSpec candidate_to_spec(const Candidate& c);

// Bijection between candidates and the GP's unit cube, dimension m+2. The
// t_v coordinate quantizes on decode; encoding a decoded candidate is stable.
std::vector<double> encode_candidate(const Candidate& c, int m, int t_v_max);
Candidate decode_candidate(const std::vector<double>& x, int m, int t_v_max);

struct ShapingConfig {
  int epochs = 40;
  int n_candidates = 256;
  std::vector<CostTerm> costs;
  GpParams gp;
  // Test hook: evaluate exactly these candidates in order instead of running
  // the acquisition loop.
  std::vector<Candidate> grid_override;
};

struct ShapingEpoch {
  int epoch = 0;
  double loss = 0;
  bool met = false;
};

struct ShapingResult {
  Candidate best;
  double best_loss = 0;
  bool goals_met = false;
  std::vector<ShapingEpoch> history;
};

// Bayesian-optimization search for the reward weights and gate thresholds:
// each epoch replays one mission per shaping context with the candidate's
// RewardSpec (fresh zero tables, live selection) and scores the summed loss.
// The best candidate among those meeting every goal on every context wins;
// if none ever does, the min-loss candidate is returned flagged unmet.
ShapingResult build_reward(const FleetSpec& spec, const ShapingConfig& cfg, uint64_t seed);

// JSON round-trip: {weights, t_u, t_v, best_loss, goals_met,
// history:[{epoch, loss}]}.
void save_shaping_result(const ShapingResult& r, const std::string& path);
ShapingResult load_shaping_result(const std::string& path);

// Single-agent epsilon-greedy retraining episodes over the retrain contexts;
// epsilon decays per episode. The result is kept only if it beats the base
// table on a paired greedy evaluation, otherwise base is returned unchanged.
QTable retrain_sa(const QTable& base, const FleetSpec& spec,
                  const std::vector<std::shared_ptr<const ExecutionContext>>& contexts,
                  const RewardSpec& rspec, int episodes, const std::vector<CostTerm>& costs,
                  uint64_t seed);

}  // namespace fleet
