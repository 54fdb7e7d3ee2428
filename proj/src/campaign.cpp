#include "fleet/campaign.hpp"

#include <fstream>
#include <memory>
#include <set>
#include <utility>

#include "fleet/errors.hpp"
#include "fleet/util.hpp"
#include "json.hpp"

namespace fleet {

namespace {

// Replay cost per agent: one work unit per learned row.
std::vector<double> learned_counts(const std::vector<std::vector<Transition>>& per_agent) {
  std::vector<double> out(per_agent.size(), 0.0);
  for (size_t i = 0; i < per_agent.size(); ++i) {
    for (const Transition& t : per_agent[i]) {
      if (t.learned) out[i] += 1.0;
    }
  }
  return out;
}

}  // namespace

CampaignResult run_campaign(const FleetSpec& spec, const RewardSpec& rspec, int n_missions,
                            bool online, uint64_t seed, const CampaignConfig& cfg) {
  FLEET_REQUIRE(n_missions >= 1, "run_campaign: n_missions must be >= 1");
  validate_fleetspec(spec);
  FLEET_REQUIRE(!spec.contexts.runtime.empty(), "run_campaign: runtime contexts required");
  FLEET_REQUIRE(cfg.idle_budget >= 0, "run_campaign: idle_budget must be >= 0");

  CampaignResult res;
  res.aggs = enumerate_aggregations(spec.n_agents, cfg.aggregation);
  const size_t n_variants = res.aggs.subsets.size();

  QTable base;  // shared start model; unseen entries read 0
  std::vector<std::shared_ptr<const QTable>> variants;
  std::vector<std::vector<double>> weights(static_cast<size_t>(spec.n_agents),
                                           std::vector<double>{1.0});

  for (int k = 0; k < n_missions; ++k) {
    const auto& ctx =
        spec.contexts.runtime[static_cast<size_t>(k) % spec.contexts.runtime.size()];

    std::vector<ModelEnsemble> models;
    MissionOptions opts = cfg.mission;
    if (online && !variants.empty()) {
      opts.mode = SelectionMode::Frozen;
      opts.epsilon = cfg.frozen_epsilon;
      for (int i = 0; i < spec.n_agents; ++i) {
        models.push_back(ModelEnsemble{variants, weights[static_cast<size_t>(i)]});
      }
    } else {
      for (int i = 0; i < spec.n_agents; ++i) models.push_back(make_single_ensemble(base));
    }

    // Mission 0 keeps the raw seed so a one-mission campaign reproduces
    // run_mission bit-exactly.
    uint64_t mseed = k == 0 ? seed : Rng::mix(seed, static_cast<uint64_t>(k));
    double e0 = cfg.cluster ? cfg.cluster->edge_energy() : 0.0;
    MissionResult mr = run_mission(spec, *ctx, models, rspec, cfg.cluster, mseed, opts);

    CampaignRound round;
    round.report = mr.report;
    round.trace = std::move(mr.trace);
    round.steps = mr.steps;
    for (double e : mr.agent_energy) round.agent_energy += e;

    if (online) {
      std::vector<std::vector<Transition>> per_agent =
          split_trace(round.trace, spec.n_agents);
      std::vector<QTable> vt =
          retrain_variants(base, per_agent, res.aggs, spec.params, *ctx);
      variants.clear();
      for (QTable& t : vt) variants.push_back(std::make_shared<const QTable>(std::move(t)));

      // Weight candidates are scored on the context just flown, the
      // freshest cube the fleet owns and the stand-in for the next field.
      uint64_t wseed = Rng::mix(seed, 1000003ull + static_cast<uint64_t>(k));
      for (int i = 0; i < spec.n_agents; ++i) {
        weights[static_cast<size_t>(i)] =
            optimize_weights(i, variants, {ctx}, spec, rspec, cfg.weights, wseed);
      }

      UsefulnessReport rep = aggregate_usefulness(weights);
      round.usefulness = rep.usefulness;

      if (cfg.cluster) {
        std::vector<double> counts = learned_counts(per_agent);
        std::set<int> known;
        for (const Node& n : cfg.cluster->state().nodes) {
          known.insert(n.fragments.begin(), n.fragments.end());
        }
        for (size_t v = 1; v < n_variants; ++v) {  // subset 0 replays nothing
          double work = 0;
          std::set<int> frags;
          for (int i : res.aggs.subsets[v]) {
            work += counts[static_cast<size_t>(i)];
            if (known.count(i)) frags.insert(i);
          }
          // Sub-half-percent usefulness rounds to priority 0, which the
          // scheduler never runs; drop those at source.
          if (work <= 0 || rep.usefulness[v] < 0.005) continue;
          cfg.cluster->submit_retrain(res.aggs.subsets[v], rep.usefulness[v], work, frags);
        }
        cfg.cluster->run_until_idle(cfg.idle_budget);
      }

      // The most useful variant becomes the next replay base; ties break
      // low, favoring smaller aggregations.
      size_t best = 0;
      for (size_t v = 1; v < n_variants; ++v) {
        if (rep.usefulness[v] > rep.usefulness[best]) best = v;
      }
      base = *variants[best];
    } else {
      round.usefulness.assign(1, 1.0);  // base-only family
    }

    round.edge_energy = (cfg.cluster ? cfg.cluster->edge_energy() : 0.0) - e0;
    res.rounds.push_back(std::move(round));
  }

  res.final_weights = std::move(weights);
  return res;
}

void save_campaign_csv(const CampaignResult& res, const std::string& path) {
  std::string out = "mission,accuracy,steps,energy\n";
  for (size_t k = 0; k < res.rounds.size(); ++k) {
    const CampaignRound& r = res.rounds[k];
    auto it = r.report.metrics.find("accuracy");
    FLEET_REQUIRE(it != r.report.metrics.end(), "save_campaign_csv: accuracy metric missing");
    out += std::to_string(k);
    out += ',';
    out += fmt_double(it->second);
    out += ',';
    out += std::to_string(r.steps);
    out += ',';
    out += fmt_double(r.agent_energy + r.edge_energy);
    out += '\n';
  }
  write_text_file(path, out);
}

void save_usefulness_history(const CampaignResult& res, const std::string& path) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (size_t k = 0; k < res.rounds.size(); ++k) {
    const CampaignRound& r = res.rounds[k];
    FLEET_REQUIRE(r.usefulness.size() <= res.aggs.subsets.size(),
                  "save_usefulness_history: more usefulness entries than subsets");
    nlohmann::ordered_json models = nlohmann::ordered_json::array();
    for (size_t v = 0; v < r.usefulness.size(); ++v) {
      models.push_back({{"subset", res.aggs.subsets[v]}, {"usefulness", r.usefulness[v]}});
    }
    rows.push_back({{"mission", k}, {"models", std::move(models)}});
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for write: " + path);
  out << rows.dump(2) << "\n";
  if (!out) throw io_error("write failed: " + path);
}

CameraCampaignResult run_camera_campaign(const TrajectoryDataset& ds, int window_minutes,
                                         const Goals& goals, const ShapingConfig& scfg,
                                         uint64_t seed) {
  validate_trajectories(ds);
  FLEET_REQUIRE(window_minutes >= 1, "run_camera_campaign: window_minutes must be >= 1");

  std::vector<DayData> days;
  for (int d = 0; d < ds.days; ++d) days.push_back(day_slice(ds, d));

  auto eval_on = [&](CorrelationModel m, double ts, double tt, const DayData& day) {
    m.spatial_threshold = ts;
    m.temporal_threshold = tt;
    std::vector<QueryResult> rs = run_day_queries(day, m);
    double total = static_cast<double>(day.n_cameras) *
                   static_cast<double>(day.t_end - day.t_begin);
    return camera_eval(rs, goals, total);
  };

  CameraCampaignResult out;
  CorrelationModel frozen_m;
  double frozen_ts = 0, frozen_tt = 0;
  CorrelationModel prev_m;
  double prev_ts = 0, prev_tt = 0;

  for (int d = 0; d < ds.days; ++d) {
    CorrelationModel md = build_correlations(days[static_cast<size_t>(d)], window_minutes);
    auto run = [&](double ts, double tt) {
      return eval_on(md, ts, tt, days[static_cast<size_t>(d)]);
    };
    ShapingResult tuned =
        tune_thresholds(run, goals, scfg, Rng::mix(seed, static_cast<uint64_t>(d)));
    double ts = tuned.best.w[0];
    double tt = tuned.best.w[1];

    CameraDayRow row;
    row.day = d;
    EvalReport rt = eval_on(md, ts, tt, days[static_cast<size_t>(d)]);
    EvalReport rr = d == 0 ? rt : eval_on(prev_m, prev_ts, prev_tt, days[static_cast<size_t>(d)]);
    EvalReport rf = d == 0 ? rt : eval_on(frozen_m, frozen_ts, frozen_tt,
                                          days[static_cast<size_t>(d)]);
    row.tuned_recall = rt.metrics.at("accuracy");
    row.retrained_recall = rr.metrics.at("accuracy");
    row.frozen_recall = rf.metrics.at("accuracy");
    row.tuned_frames = rt.metrics.at("frames_searched");
    row.retrained_frames = rr.metrics.at("frames_searched");
    row.frozen_frames = rf.metrics.at("frames_searched");
    out.days.push_back(row);

    if (d == 0) {
      frozen_m = md;
      frozen_ts = ts;
      frozen_tt = tt;
      out.frozen_thresholds = {ts, tt};
    }
    prev_m = std::move(md);
    prev_ts = ts;
    prev_tt = tt;
  }
  return out;
}

void save_camera_campaign_csv(const CameraCampaignResult& res, const std::string& path) {
  std::string out =
      "day,tuned_recall,retrained_recall,frozen_recall,tuned_frames,retrained_frames,"
      "frozen_frames\n";
  for (const CameraDayRow& r : res.days) {
    out += std::to_string(r.day);
    out += ',';
    out += fmt_double(r.tuned_recall);
    out += ',';
    out += fmt_double(r.retrained_recall);
    out += ',';
    out += fmt_double(r.frozen_recall);
    out += ',';
    out += fmt_double(r.tuned_frames);
    out += ',';
    out += fmt_double(r.retrained_frames);
    out += ',';
    out += fmt_double(r.frozen_frames);
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace fleet
