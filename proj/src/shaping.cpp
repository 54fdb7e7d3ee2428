#include "fleet/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fleet/errors.hpp"
#include "fleet/util.hpp"
#include "json.hpp"

namespace fleet {

double shaping_loss(const Goals& goals, const EvalReport& report,
                    const std::vector<CostTerm>& costs) {
  double loss = 0;
  for (const Goal& g : goals) {
    auto it = report.metrics.find(g.metric);
    if (it == report.metrics.end())
      throw contract_error("shaping_loss: report lacks goal metric " + g.metric);
    // Hinge on the violated side only; normalized by the target so goals on
    // different scales are comparable.
    double gap = g.at_least ? g.target - it->second : it->second - g.target;
    if (gap > 0) {
      if (!(g.target > 0))
        throw contract_error("shaping_loss: violated goal needs a positive target: " + g.metric);
      loss += gap / g.target;
    }
  }
  for (const CostTerm& t : costs) {
    if (!(t.scale > 0) || !std::isfinite(t.scale))
      throw contract_error("shaping_loss: cost scale must be positive: " + t.metric);
    if (!(t.weight >= 0) || !std::isfinite(t.weight))
      throw contract_error("shaping_loss: cost weight must be >= 0: " + t.metric);
    auto it = report.metrics.find(t.metric);
    if (it == report.metrics.end())
      throw contract_error("shaping_loss: report lacks cost metric " + t.metric);
    loss += t.weight * it->second / t.scale;
  }
  return loss;
}

RewardSpec candidate_to_spec(const Candidate& c) {
  RewardSpec rs;
  rs.weights = c.w;
  rs.t_u = c.t_u;
  rs.t_v = c.t_v;
  return rs;
}

namespace {

void check_candidate(const Candidate& c, int m, int t_v_max) {
  if (m < 1) throw contract_error("candidate: m must be >= 1");
  if (t_v_max < 1) throw contract_error("candidate: t_v_max must be >= 1");
  if (static_cast<int>(c.w.size()) != m)
    throw contract_error("candidate: weight count does not match m");
  for (double wi : c.w)
    if (!(wi >= 0.0 && wi <= 1.0)) throw contract_error("candidate: weights must lie in [0,1]");
  if (!(c.t_u >= 0.0 && c.t_u <= static_cast<double>(m)))
    throw contract_error("candidate: t_u must lie in [0,m]");
  if (c.t_v < 1 || c.t_v > t_v_max) throw contract_error("candidate: t_v must lie in {1..t_v_max}");
}

}  // namespace

std::vector<double> encode_candidate(const Candidate& c, int m, int t_v_max) {
  check_candidate(c, m, t_v_max);
  std::vector<double> x(static_cast<size_t>(m) + 2);
  std::copy(c.w.begin(), c.w.end(), x.begin());
  x[m] = c.t_u / m;
  x[m + 1] = t_v_max == 1 ? 0.0 : static_cast<double>(c.t_v - 1) / (t_v_max - 1);
  return x;
}

Candidate decode_candidate(const std::vector<double>& x, int m, int t_v_max) {
  if (m < 1) throw contract_error("decode_candidate: m must be >= 1");
  if (t_v_max < 1) throw contract_error("decode_candidate: t_v_max must be >= 1");
  if (x.size() != static_cast<size_t>(m) + 2)
    throw contract_error("decode_candidate: point dimension must be m+2");
  for (double xi : x)
    if (!(xi >= 0.0 && xi <= 1.0))
      throw contract_error("decode_candidate: coordinates must lie in [0,1]");
  Candidate c;
  c.w.assign(x.begin(), x.begin() + m);
  c.t_u = x[m] * m;
  c.t_v = t_v_max == 1
              ? 1
              : 1 + static_cast<int>(std::llround(x[m + 1] * (t_v_max - 1)));
  return c;
}

namespace {

// One full evaluation of a candidate: replay every shaping context with
// fresh zero tables and sum the per-context losses. met only when every
// context hits all goals.
struct EpochScore {
  double loss = 0;
  bool met = true;
};

EpochScore score_candidate(const FleetSpec& spec, const Candidate& cand,
                           const std::vector<CostTerm>& costs, Rng& root, int epoch) {
  RewardSpec rs = candidate_to_spec(cand);
  EpochScore sc;
  for (size_t j = 0; j < spec.contexts.shaping.size(); ++j) {
    std::vector<ModelEnsemble> models;
    models.reserve(static_cast<size_t>(spec.n_agents));
    for (int a = 0; a < spec.n_agents; ++a) models.push_back(make_single_ensemble(QTable{}));
    MissionResult res =
        run_mission(spec, *spec.contexts.shaping[j], models, rs, nullptr,
                    root.fork(static_cast<uint64_t>(epoch) + 1, j + 1).seed());
    sc.loss += shaping_loss(spec.goals, res.report, costs);
    sc.met = sc.met && goals_met(spec.goals, res.report);
  }
  return sc;
}

}  // namespace

ShapingResult build_reward(const FleetSpec& spec, const ShapingConfig& cfg, uint64_t seed) {
  validate_fleetspec(spec);
  if (spec.contexts.shaping.empty())
    throw contract_error("build_reward: at least one shaping context required");
  if (spec.goals.empty()) throw contract_error("build_reward: goals required");
  const int m = spec.map.m;
  const int t_v_max = spec.tile * spec.tile;
  const bool grid = !cfg.grid_override.empty();
  const int epochs = grid ? static_cast<int>(cfg.grid_override.size()) : cfg.epochs;
  if (epochs < 1) throw contract_error("build_reward: epochs must be >= 1");
  if (!grid && cfg.n_candidates < 1)
    throw contract_error("build_reward: n_candidates must be >= 1");

  Rng root(seed);
  Rng prop_rng = root.fork(0);
  Surrogate gp(static_cast<size_t>(m) + 2, cfg.gp);

  ShapingResult out;
  double best_met = std::numeric_limits<double>::infinity();
  double best_any = std::numeric_limits<double>::infinity();
  double best_obs = std::numeric_limits<double>::infinity();

  Candidate cand;
  if (grid) {
    cand = cfg.grid_override[0];
  } else {
    // Neutral start: uniform mid weights, utility gate wide open, visit
    // budget the whole tile.
    cand.w.assign(static_cast<size_t>(m), 0.5);
    cand.t_u = m;
    cand.t_v = t_v_max;
  }

  for (int e = 0; e < epochs; ++e) {
    // The surrogate must see exactly the quantized point that ran.
    std::vector<double> x = encode_candidate(cand, m, t_v_max);
    EpochScore sc = score_candidate(spec, cand, cfg.costs, root, e);
    out.history.push_back({e, sc.loss, sc.met});
    if (sc.met && sc.loss < best_met) {
      best_met = sc.loss;
      out.best = cand;
      out.goals_met = true;
    }
    // Fallback tracking only matters until some candidate meets the goals.
    if (!out.goals_met && sc.loss < best_any) {
      best_any = sc.loss;
      out.best = cand;
    }
    best_obs = std::min(best_obs, sc.loss);
    gp.add(x, sc.loss);

    if (e + 1 < epochs) {
      if (grid) {
        cand = cfg.grid_override[static_cast<size_t>(e) + 1];
      } else {
        gp.fit();
        std::vector<double> xn = propose_next(gp, best_obs, cfg.n_candidates, prop_rng);
        cand = decode_candidate(xn, m, t_v_max);
      }
    }
  }
  out.best_loss = out.goals_met ? best_met : best_any;
  return out;
}

void save_shaping_result(const ShapingResult& r, const std::string& path) {
  nlohmann::ordered_json j;
  j["weights"] = r.best.w;
  j["t_u"] = r.best.t_u;
  j["t_v"] = r.best.t_v;
  j["best_loss"] = r.best_loss;
  j["goals_met"] = r.goals_met;
  auto hist = nlohmann::ordered_json::array();
  for (const ShapingEpoch& h : r.history)
    hist.push_back({{"epoch", h.epoch}, {"loss", h.loss}});
  j["history"] = std::move(hist);
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for write: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw io_error("write failed: " + path);
}

ShapingResult load_shaping_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("bad shaping result json: " + path + ": " + e.what());
  }
  try {
    ShapingResult r;
    r.best.w = j.at("weights").get<std::vector<double>>();
    r.best.t_u = j.at("t_u").get<double>();
    r.best.t_v = j.at("t_v").get<int>();
    r.best_loss = j.at("best_loss").get<double>();
    r.goals_met = j.at("goals_met").get<bool>();
    for (const auto& h : j.at("history")) {
      // The met flag is not serialized; loaded history carries losses only.
      r.history.push_back({h.at("epoch").get<int>(), h.at("loss").get<double>(), false});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("bad shaping result json: " + path + ": " + e.what());
  }
}

QTable retrain_sa(const QTable& base, const FleetSpec& spec,
                  const std::vector<std::shared_ptr<const ExecutionContext>>& contexts,
                  const RewardSpec& rspec, int episodes, const std::vector<CostTerm>& costs,
                  uint64_t seed) {
  if (contexts.empty()) return base;
  if (episodes < 1) throw contract_error("retrain_sa: episodes must be >= 1");
  FleetSpec s1 = spec;
  s1.n_agents = 1;
  validate_fleetspec(s1);

  Rng root(seed);
  QTable cur = base;
  for (int e = 0; e < episodes; ++e) {
    const ExecutionContext& ctx = *contexts[static_cast<size_t>(e) % contexts.size()];
    MissionOptions opts;
    opts.epsilon = spec.params.epsilon0 * std::pow(spec.params.epsilon_decay, e);
    std::vector<ModelEnsemble> models{make_single_ensemble(cur)};
    MissionResult res =
        run_mission(s1, ctx, models, rspec, nullptr, root.fork(1, static_cast<uint64_t>(e) + 1).seed(), opts);
    cur = std::move(res.tables[0]);
  }

  // Paired greedy comparison on identical seeds; the retrained table must
  // strictly improve to displace the base.
  auto eval_total = [&](const QTable& t) {
    double total = 0;
    for (size_t j = 0; j < contexts.size(); ++j) {
      MissionOptions opts;
      opts.epsilon = 0.0;
      std::vector<ModelEnsemble> models{make_single_ensemble(t)};
      MissionResult res = run_mission(s1, *contexts[j], models, rspec, nullptr,
                                      root.fork(2, j + 1).seed(), opts);
      total += shaping_loss(spec.goals, res.report, costs);
    }
    return total;
  };
  double base_loss = eval_total(base);
  double cur_loss = eval_total(cur);
  return cur_loss < base_loss ? cur : base;
}

}  // namespace fleet
