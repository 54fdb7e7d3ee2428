#include "fleet/online.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "fleet/errors.hpp"
#include "json.hpp"

namespace fleet {

AggregationSet enumerate_aggregations(int n_agents, AggregationMode mode) {
  if (n_agents < 1) throw contract_error("enumerate_aggregations: n_agents must be >= 1");
  AggregationSet out;
  if (mode == AggregationMode::Powerset) {
    if (n_agents > 8)
      throw contract_error(
          "enumerate_aggregations: powerset is capped at 8 agents; use PerAgent or pass "
          "a custom subset list");
    for (uint32_t mask = 0; mask < (1u << n_agents); ++mask) {
      std::vector<int> s;
      for (int i = 0; i < n_agents; ++i)
        if (mask >> i & 1u) s.push_back(i);
      out.subsets.push_back(std::move(s));
    }
  } else {
    out.subsets.emplace_back();
    for (int i = 0; i < n_agents; ++i) out.subsets.push_back({i});
  }
  return out;
}

std::vector<std::vector<Transition>> split_trace(const MissionTrace& trace, int n_agents) {
  if (n_agents < 1) throw contract_error("split_trace: n_agents must be >= 1");
  std::vector<std::vector<Transition>> out(static_cast<size_t>(n_agents));
  for (const Transition& t : trace.transitions) {
    if (t.agent < 0 || t.agent >= n_agents)
      throw contract_error("split_trace: row for unknown agent " + std::to_string(t.agent));
    out[static_cast<size_t>(t.agent)].push_back(t);
  }
  return out;
}

namespace {

void check_aggregations(const AggregationSet& aggs, size_t n_traces) {
  if (aggs.subsets.empty() || !aggs.subsets[0].empty())
    throw contract_error("aggregations: the empty subset must sit at index 0");
  std::set<std::vector<int>> seen;
  for (const std::vector<int>& s : aggs.subsets) {
    if (!std::is_sorted(s.begin(), s.end()) ||
        std::adjacent_find(s.begin(), s.end()) != s.end())
      throw contract_error("aggregations: subsets must be ascending and duplicate-free");
    if (!seen.insert(s).second) throw contract_error("aggregations: duplicate subset");
    for (int a : s)
      if (a < 0 || static_cast<size_t>(a) >= n_traces)
        throw contract_error("retrain_variants: no trace for agent " + std::to_string(a));
  }
}

}  // namespace

std::vector<QTable> retrain_variants(const QTable& base,
                                     const std::vector<std::vector<Transition>>& traces,
                                     const AggregationSet& aggs, const LearningParams& params,
                                     const ExecutionContext& ctx) {
  validate_learning_params(params);
  check_aggregations(aggs, traces.size());
  std::vector<QTable> out;
  out.reserve(aggs.subsets.size());
  for (const std::vector<int>& subset : aggs.subsets) {
    QTable v = base;
    for (int a : subset)
      v = replay_trace(std::move(v), traces[static_cast<size_t>(a)], params, ctx);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> project_to_simplex(const std::vector<double>& raw) {
  if (raw.empty()) throw contract_error("project_to_simplex: empty vector");
  double sum = 0;
  for (double v : raw) {
    if (!(v >= 0) || !std::isfinite(v))
      throw contract_error("project_to_simplex: entries must be finite and >= 0");
    sum += v;
  }
  std::vector<double> out(raw.size());
  if (sum == 0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(raw.size()));
  } else {
    for (size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / sum;
  }
  return out;
}

std::vector<double> optimize_weights(
    int agent, const std::vector<std::shared_ptr<const QTable>>& sa_s,
    const std::vector<std::shared_ptr<const ExecutionContext>>& eval_contexts,
    const FleetSpec& spec, const RewardSpec& rspec, const WeightConfig& cfg, uint64_t seed) {
  if (agent < 0) throw contract_error("optimize_weights: agent index must be >= 0");
  if (sa_s.empty()) throw contract_error("optimize_weights: at least one model required");
  for (const auto& t : sa_s)
    if (!t) throw contract_error("optimize_weights: null model");
  if (eval_contexts.empty())
    throw contract_error("optimize_weights: at least one eval context required");
  if (cfg.bo_epochs < 1) throw contract_error("optimize_weights: bo_epochs must be >= 1");
  if (cfg.n_candidates < 1) throw contract_error("optimize_weights: n_candidates must be >= 1");

  const size_t k = sa_s.size();
  if (k == 1) return {1.0};

  FleetSpec s1 = spec;
  s1.n_agents = 1;

  Rng root = Rng(seed).fork(static_cast<uint64_t>(agent) + 1);
  Rng prop = root.fork(0);
  Surrogate gp(k, cfg.gp);
  auto sampler = [k](Rng& r) {
    std::vector<double> raw(k);
    for (double& v : raw) v = r.uniform();
    return project_to_simplex(raw);
  };

  // Greedy frozen-ensemble evaluation; the policy is fully determined by x,
  // so the mission seed cannot change the outcome.
  auto score = [&](const std::vector<double>& x, int epoch) {
    ModelEnsemble ens;
    ens.models = sa_s;
    ens.weights = x;
    double total = 0;
    bool met = true;
    for (size_t j = 0; j < eval_contexts.size(); ++j) {
      MissionOptions opts;
      opts.mode = SelectionMode::Frozen;
      opts.epsilon = 0.0;
      MissionResult res =
          run_mission(s1, *eval_contexts[j], {ens}, rspec, nullptr,
                      root.fork(static_cast<uint64_t>(epoch) + 1, j + 1).seed(), opts);
      total += shaping_loss(spec.goals, res.report, cfg.costs);
      met = met && goals_met(spec.goals, res.report);
    }
    return std::pair<double, bool>{total, met};
  };

  std::vector<double> best_x;
  bool best_is_met = false;
  double best_met = std::numeric_limits<double>::infinity();
  double best_any = std::numeric_limits<double>::infinity();
  double best_obs = std::numeric_limits<double>::infinity();

  for (int e = 0; e < cfg.bo_epochs; ++e) {
    std::vector<double> x;
    if (e == 0) {
      x.assign(k, 1.0 / static_cast<double>(k));
    } else if (static_cast<size_t>(e) <= k) {
      x.assign(k, 0.0);
      x[static_cast<size_t>(e) - 1] = 1.0;
    } else {
      gp.fit();
      x = propose_next(gp, best_obs, cfg.n_candidates, prop, sampler);
    }
    auto [loss, met] = score(x, e);
    if (met && loss < best_met) {
      best_met = loss;
      best_x = x;
      best_is_met = true;
    }
    if (!best_is_met && loss < best_any) {
      best_any = loss;
      best_x = x;
    }
    best_obs = std::min(best_obs, loss);
    gp.add(x, loss);
  }
  return best_x;
}

UsefulnessReport aggregate_usefulness(const std::vector<std::vector<double>>& weights) {
  if (weights.empty()) throw contract_error("aggregate_usefulness: no weight vectors");
  const size_t k = weights[0].size();
  if (k == 0) throw contract_error("aggregate_usefulness: empty weight vector");
  for (const std::vector<double>& x : weights) {
    if (x.size() != k) throw contract_error("aggregate_usefulness: weight length mismatch");
    double sum = 0;
    for (double v : x) {
      if (!(v >= 0) || !std::isfinite(v))
        throw contract_error("aggregate_usefulness: weights must be finite and >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw contract_error("aggregate_usefulness: weights must sum to 1");
  }
  UsefulnessReport rep;
  rep.provenance = weights;
  rep.usefulness.assign(k, 0.0);
  for (const std::vector<double>& x : weights)
    for (size_t i = 0; i < k; ++i) rep.usefulness[i] += x[i];
  for (double& u : rep.usefulness) u /= static_cast<double>(weights.size());
  return rep;
}

void save_usefulness(const UsefulnessReport& rep, const AggregationSet& aggs,
                     const std::string& path) {
  if (rep.usefulness.size() != aggs.subsets.size())
    throw contract_error("save_usefulness: one subset per usefulness entry required");
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (size_t i = 0; i < rep.usefulness.size(); ++i) {
    models.push_back({{"subset", aggs.subsets[i]}, {"usefulness", rep.usefulness[i]}});
  }
  nlohmann::ordered_json j;
  j["models"] = std::move(models);
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for write: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace fleet
