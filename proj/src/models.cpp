#include "fleet/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fleet/errors.hpp"
#include "fleet/kernels.hpp"
#include "fleet/util.hpp"

namespace fleet {

using nlohmann::json;

void validate_learning_params(const LearningParams& p) {
  FLEET_REQUIRE(p.alpha > 0.0 && p.alpha <= 1.0, "alpha must lie in (0, 1]");
  FLEET_REQUIRE(p.gamma >= 0.0 && p.gamma < 1.0, "gamma must lie in [0, 1)");
  FLEET_REQUIRE(p.epsilon0 >= 0.0 && p.epsilon0 <= 1.0, "epsilon0 must lie in [0, 1]");
  FLEET_REQUIRE(p.epsilon_decay > 0.0 && p.epsilon_decay <= 1.0,
                "epsilon_decay must lie in (0, 1]");
}

double reward(const std::vector<double>& ssv, const RewardSpec& spec) {
  FLEET_REQUIRE(ssv.size() == spec.weights.size(), "reward: SSV/weight length mismatch");
  for (double w : spec.weights)
    FLEET_REQUIRE(w >= 0.0 && w <= 1.0, "reward weights must lie in [0, 1]");
  return kernels::dot(ssv.data(), spec.weights.data(), ssv.size());
}

double QTable::get(StateId s, Action a) const {
  auto it = q_.find({s, a});
  return it == q_.end() ? 0.0 : it->second;
}

void QTable::set(StateId s, Action a, double q) { q_[{s, a}] = q; }

void QTable::update(StateId s, Action a, StateId s_next, double r, const LearningParams& p,
                    const std::vector<Action>& valid_next) {
  validate_learning_params(p);
  FLEET_REQUIRE(std::isfinite(r), "q_update: reward must be finite");
  FLEET_REQUIRE(!valid_next.empty(), "q_update: empty next action set");
  double best_next = max_q(*this, s_next, valid_next);
  double q = get(s, a);
  set(s, a, (1.0 - p.alpha) * q + p.alpha * (r + p.gamma * best_next));
}

double max_q(const QTable& t, StateId s, const std::vector<Action>& valid) {
  FLEET_REQUIRE(!valid.empty(), "max_q: empty action set");
  double best = t.get(s, valid[0]);
  for (size_t i = 1; i < valid.size(); ++i) best = std::max(best, t.get(s, valid[i]));
  return best;
}

void save_qtable(const QTable& t, const std::string& path) {
  json arr = json::array();
  for (const auto& [key, q] : t.entries()) {
    json e;
    e["state"] = {key.first.row, key.first.col};
    e["action"] = static_cast<int>(key.second);
    e["q"] = q;
    arr.push_back(std::move(e));
  }
  write_text_file(path, arr.dump());
}

QTable load_qtable(const std::string& path) {
  json arr;
  try {
    arr = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail_io("q-table file '" + path + "': " + e.what());
  }
  QTable t;
  try {
    for (const auto& e : arr) {
      StateId s{e.at("state").at(0).get<int>(), e.at("state").at(1).get<int>()};
      int a = e.at("action").get<int>();
      if (a < 0 || a >= kActionCount) fail_io("q-table file '" + path + "': bad action ordinal");
      t.set(s, static_cast<Action>(a), e.at("q").get<double>());
    }
  } catch (const json::exception& e) {
    fail_io("q-table file '" + path + "': " + e.what());
  }
  return t;
}

namespace {

// Shared epsilon-greedy core so single-model and ensemble selection consume
// identical RNG draws and break ties identically.
template <typename ScoreFn>
Action select_greedy(const std::vector<Action>& valid, double epsilon, Rng& rng, ScoreFn&& score) {
  FLEET_REQUIRE(!valid.empty(), "select_action: empty action set");
  FLEET_REQUIRE(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  FLEET_REQUIRE(std::is_sorted(valid.begin(), valid.end()),
                "select_action: action set must be sorted by ordinal");
  double u = rng.uniform();
  if (u < epsilon) return valid[rng.uniform_int(valid.size())];
  Action best = valid[0];
  double best_q = score(valid[0]);
  for (size_t i = 1; i < valid.size(); ++i) {
    double q = score(valid[i]);
    if (q > best_q) {  // strict: ties keep the smaller ordinal
      best_q = q;
      best = valid[i];
    }
  }
  return best;
}

}  // namespace

Action select_action(const QTable& table, StateId s, const std::vector<Action>& valid,
                     double epsilon, Rng& rng) {
  return select_greedy(valid, epsilon, rng, [&](Action a) { return table.get(s, a); });
}

Gate ha_gate(const std::vector<Ssv>& group_fs, const std::vector<double>& group_rewards,
             const RewardSpec& spec) {
  double utility = std::accumulate(group_rewards.begin(), group_rewards.end(), 0.0);
  return ha_gate_counts(group_fs.size(), utility, spec);
}

Gate ha_gate_counts(size_t group_visits, double group_utility, const RewardSpec& spec) {
  FLEET_REQUIRE(spec.t_u >= 0.0, "ha_gate: t_u must be non-negative");
  FLEET_REQUIRE(spec.t_v >= 0, "ha_gate: t_v must be non-negative");
  if (group_utility > spec.t_u) return Gate::Leave;
  if (group_visits > static_cast<size_t>(spec.t_v)) return Gate::Leave;
  return Gate::Stay;
}

void validate_ensemble(const ModelEnsemble& ens) {
  FLEET_REQUIRE(!ens.models.empty(), "ensemble: no models");
  FLEET_REQUIRE(ens.models.size() == ens.weights.size(), "ensemble: model/weight count mismatch");
  double sum = 0.0;
  for (double w : ens.weights) {
    FLEET_REQUIRE(w >= 0.0, "ensemble: negative weight");
    sum += w;
  }
  FLEET_REQUIRE(std::fabs(sum - 1.0) <= 1e-9, "ensemble: weights must sum to 1");
  for (const auto& m : ens.models) FLEET_REQUIRE(m != nullptr, "ensemble: null model");
}

double ensemble_q(const ModelEnsemble& ens, StateId s, Action a) {
  double v = 0.0;
  for (size_t k = 0; k < ens.models.size(); ++k) v += ens.weights[k] * ens.models[k]->get(s, a);
  return v;
}

Action ensemble_select(const ModelEnsemble& ens, StateId s, const std::vector<Action>& valid,
                       double epsilon, Rng& rng) {
  validate_ensemble(ens);
  return select_greedy(valid, epsilon, rng, [&](Action a) { return ensemble_q(ens, s, a); });
}

}  // namespace fleet
