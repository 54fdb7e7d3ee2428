#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fleet/core.hpp"
#include "fleet/rng.hpp"

namespace fleet {

struct LearningParams {
  double alpha = 0.1;          // learning rate, (0, 1]
  double gamma = 0.9;          // discount, [0, 1)
  double epsilon0 = 0.2;       // initial exploration rate
  double epsilon_decay = 0.9;  // multiplicative decay per mission/episode
};

void validate_learning_params(const LearningParams& p);

// Reward weights plus the HA leave thresholds that shaping tunes. t_u lives
// in [0, feature_count]; t_v counts group visits (0 forces a leave after the
// first visit, since the gate comparisons are strict).
struct RewardSpec {
  std::vector<double> weights;
  double t_u = 0;
  int t_v = 1;
};

// R = sum_n f_n * w_n over the normalized SSV. Weights must lie in [0, 1].
double reward(const std::vector<double>& ssv, const RewardSpec& spec);

// Tabular state-to-action model. Unseen pairs read 0. Single-writer per
// agent during a mission; retraining works on copies.
class QTable {
 public:
  using Key = std::pair<StateId, Action>;

  double get(StateId s, Action a) const;
  void set(StateId s, Action a, double q);
  size_t size() const { return q_.size(); }
  bool operator==(const QTable& other) const { return q_ == other.q_; }

  // Bellman update: Q <- (1-a)Q + a(r + g * max over valid_next).
  // valid_next must be the valid action set at s_next.
  void update(StateId s, Action a, StateId s_next, double r, const LearningParams& p,
              const std::vector<Action>& valid_next);

  const std::map<Key, double>& entries() const { return q_; }

 private:
  std::map<Key, double> q_;
};

double max_q(const QTable& t, StateId s, const std::vector<Action>& valid);

// JSON array of {state:[r,c], action, q}, sorted by (row, col, action).
void save_qtable(const QTable& t, const std::string& path);
QTable load_qtable(const std::string& path);

// Epsilon-greedy over the valid action set (sorted by ordinal). Exploitation
// breaks ties toward the smallest ordinal. Consumes one uniform draw for the
// explore test and a second one when exploring.
Action select_action(const QTable& table, StateId s, const std::vector<Action>& valid,
                     double epsilon, Rng& rng);

enum class Gate : uint8_t { Stay = 0, Leave = 1 };

// HA gate for one state group: U = sum of collected rewards, V = number of
// group states visited. Leave strictly when U > t_u or V > t_v.
Gate ha_gate(const std::vector<Ssv>& group_fs, const std::vector<double>& group_rewards,
             const RewardSpec& spec);
Gate ha_gate_counts(size_t group_visits, double group_utility, const RewardSpec& spec);

// Usefulness-weighted model ensemble. Weights form a simplex (1e-9).
struct ModelEnsemble {
  std::vector<std::shared_ptr<const QTable>> models;
  std::vector<double> weights;
};

void validate_ensemble(const ModelEnsemble& ens);
double ensemble_q(const ModelEnsemble& ens, StateId s, Action a);

// Identical draw pattern and tie-break rule as select_action; with one-hot
// weights the two agree on every input.
Action ensemble_select(const ModelEnsemble& ens, StateId s, const std::vector<Action>& valid,
                       double epsilon, Rng& rng);

}  // namespace fleet
