#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fleet/mission.hpp"
#include "fleet/shaping.hpp"

namespace fleet {

enum class AggregationMode : uint8_t { Powerset = 0, PerAgent = 1 };

// Agent-index subsets, each naming whose mission data trains one model
// variant. Index 0 is always the empty subset: the untouched base model.
struct AggregationSet {
  std::vector<std::vector<int>> subsets;
};

// Powerset mode returns all 2^n subsets in binary counting order and is
// capped at n <= 8 (the container fan-out rule); per-agent mode returns the
// empty subset plus one singleton per agent.
AggregationSet enumerate_aggregations(int n_agents, AggregationMode mode);

// Splits an interleaved mission trace into per-agent row lists, order
// preserved.
std::vector<std::vector<Transition>> split_trace(const MissionTrace& trace, int n_agents);

// Variant k = base further trained by replaying the learned rows of every
// agent in subset k, agents in ascending index order. The empty subset
// yields the base bit-identical; replay touches only the (s,a) keys present
// in the pooled rows.
std::vector<QTable> retrain_variants(const QTable& base,
                                     const std::vector<std::vector<Transition>>& traces,
                                     const AggregationSet& aggs, const LearningParams& params,
                                     const ExecutionContext& ctx);

// Scales a non-negative vector onto the probability simplex. The all-zero
// vector maps to the uniform point so every proposal stays feasible.
std::vector<double> project_to_simplex(const std::vector<double>& raw);

struct WeightConfig {
  int bo_epochs = 12;
  int n_candidates = 64;
  std::vector<CostTerm> costs;
  GpParams gp;
};

// Per-agent ensemble weight search over the simplex: candidates are scored
// by single-agent frozen-ensemble missions on the eval contexts (greedy
// selection), loss as in reward shaping. The uniform point and each one-hot
// run first as seed evaluations, then Bayesian optimization proposes the
// rest. Returns the goal-meeting candidate of minimal loss, falling back to
// the overall minimum when no candidate meets the goals.
std::vector<double> optimize_weights(
    int agent, const std::vector<std::shared_ptr<const QTable>>& sa_s,
    const std::vector<std::shared_ptr<const ExecutionContext>>& eval_contexts,
    const FleetSpec& spec, const RewardSpec& rspec, const WeightConfig& cfg, uint64_t seed);

// Per-model usefulness: U_k is the unweighted mean of x_i[k] over agents,
// so the report itself lies on the simplex.
struct UsefulnessReport {
  std::vector<double> usefulness;
  std::vector<std::vector<double>> provenance;
};

UsefulnessReport aggregate_usefulness(const std::vector<std::vector<double>>& weights);

// JSON {models:[{subset:[...], usefulness}]}; aggs supplies the subset ids,
// one per usefulness entry.
void save_usefulness(const UsefulnessReport& rep, const AggregationSet& aggs,
                     const std::string& path);

}  // namespace fleet
