#include "fleet/commands.hpp"

#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include "fleet/campaign.hpp"
#include "fleet/camera.hpp"
#include "fleet/cluster.hpp"
#include "fleet/errors.hpp"
#include "fleet/util.hpp"
#include "json.hpp"

namespace fleet {

namespace {

using nlohmann::ordered_json;

std::string out_path(const MissionConfig& cfg, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) fail_io("cannot create output directory " + cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

// std::map ordering plus fmt_double keeps reruns byte-identical.
ordered_json report_json(const EvalReport& rep) {
  ordered_json metrics = ordered_json::object();
  for (const auto& [k, v] : rep.metrics) metrics[k] = fmt_double(v);
  return ordered_json{{"metrics", metrics}, {"finished", rep.finished}};
}

void write_report(const EvalReport& rep, const std::string& path) {
  write_text_file(path, report_json(rep).dump(2) + "\n");
}

void write_epoch_csv(const ShapingResult& r, const std::string& path) {
  std::string out = "epoch,loss,met\n";
  for (const ShapingEpoch& e : r.history) {
    out += std::to_string(e.epoch);
    out += ',';
    out += fmt_double(e.loss);
    out += ',';
    out += e.met ? '1' : '0';
    out += '\n';
  }
  write_text_file(path, out);
}

void write_trace_csv(const MissionTrace& trace, const std::string& path) {
  std::string out = "agent,tick,s,a,s_next,reward,group,learned\n";
  for (const Transition& t : trace.transitions) {
    out += std::to_string(t.agent);
    out += ',';
    out += std::to_string(t.tick);
    out += ',';
    out += std::to_string(t.s.v);
    out += ',';
    out += std::to_string(static_cast<int>(t.a));
    out += ',';
    out += std::to_string(t.s_next.v);
    out += ',';
    out += fmt_double(t.reward);
    out += ',';
    out += std::to_string(t.group);
    out += ',';
    out += t.learned ? '1' : '0';
    out += '\n';
  }
  write_text_file(path, out);
}

void write_cluster_logs(const EdgeCluster& edge, const MissionConfig& cfg) {
  save_sched_trace(edge.sched_rows(), out_path(cfg, "scheduler.csv"));
  std::string energy = std::string(kEnergyHeader) + "\n";
  for (const std::string& row : edge.energy_rows()) {
    energy += row;
    energy += '\n';
  }
  write_text_file(out_path(cfg, "energy.csv"), energy);
}

ShapingConfig shaping_config(const MissionConfig& cfg) {
  ShapingConfig sc;
  sc.epochs = cfg.shaping_epochs;
  sc.n_candidates = cfg.shaping_candidates;
  sc.costs = cfg.shaping_costs;
  return sc;
}

// Shaping result on disk wins over the config fallback, so shape-then-run
// uses what shaping found without re-stating it.
RewardSpec pick_reward(const MissionConfig& cfg) {
  std::filesystem::path p = std::filesystem::path(cfg.out_dir) / "shaping_result.json";
  if (std::filesystem::exists(p)) {
    ShapingResult r = load_shaping_result(p.string());
    return candidate_to_spec(r.best);
  }
  return cfg.reward;
}

CampaignConfig campaign_config(const MissionConfig& cfg, EdgeCluster* edge) {
  CampaignConfig cc;
  cc.weights.bo_epochs = cfg.weight_epochs;
  cc.weights.n_candidates = cfg.weight_candidates;
  cc.weights.costs = cfg.weight_costs;
  cc.mission.epsilon = cfg.mission_epsilon;
  cc.frozen_epsilon = cfg.frozen_epsilon;
  cc.cluster = edge;
  return cc;
}

TrajectoryDataset make_trajectories(const MissionConfig& cfg) {
  return gen_trajectories(cfg.camera.cameras, cfg.camera.targets, cfg.camera.days,
                          cfg.camera.drift, cfg.seed);
}

// Day-0 query workload under one threshold pair; the camera-side analogue of
// replaying a mission with a candidate reward.
EvalReport camera_day_report(const DayData& day, CorrelationModel model, double ts,
                             double tt, const Goals& goals) {
  model.spatial_threshold = ts;
  model.temporal_threshold = tt;
  std::vector<QueryResult> rs = run_day_queries(day, model);
  long long total =
      static_cast<long long>(day.n_cameras) * (day.t_end - day.t_begin);
  return camera_eval(rs, goals, total);
}

int shape_crop(const MissionConfig& cfg) {
  FleetSpec spec = build_crop_fleetspec(cfg);
  ShapingResult r = build_reward(spec, shaping_config(cfg), cfg.shaping_seed);
  save_shaping_result(r, out_path(cfg, "shaping_result.json"));
  write_epoch_csv(r, out_path(cfg, "shaping_epochs.csv"));
  return r.goals_met ? 0 : 3;
}

int shape_camera(const MissionConfig& cfg) {
  TrajectoryDataset ds = make_trajectories(cfg);
  DayData day = day_slice(ds, 0);
  CorrelationModel model = build_correlations(day, cfg.camera.window_minutes);
  auto run_day = [&](double ts, double tt) {
    return camera_day_report(day, model, ts, tt, cfg.goals);
  };
  ShapingResult r = tune_thresholds(run_day, cfg.goals, shaping_config(cfg),
                                    cfg.shaping_seed);
  save_shaping_result(r, out_path(cfg, "shaping_result.json"));
  write_epoch_csv(r, out_path(cfg, "shaping_epochs.csv"));
  return r.goals_met ? 0 : 3;
}

int run_crop(const MissionConfig& cfg) {
  FleetSpec spec = build_crop_fleetspec(cfg);
  const ExecutionContext& ctx = *spec.contexts.runtime[0];

  if (cfg.baseline == "automated") {
    EvalReport rep = baseline_automated(spec, ctx, cfg.automated_coverage);
    write_report(rep, out_path(cfg, "eval_report.json"));
    return rep.finished ? 0 : 3;
  }

  RewardSpec reward = pick_reward(cfg);
  if (cfg.baseline == "classic") {
    std::vector<QTable> tables(static_cast<size_t>(cfg.agents));
    MissionResult mr = baseline_classic_rl(spec, ctx, tables, cfg.seed);
    write_report(mr.report, out_path(cfg, "eval_report.json"));
    write_trace_csv(mr.trace, out_path(cfg, "mission_trace.csv"));
    return mr.report.finished ? 0 : 3;
  }

  std::vector<ModelEnsemble> models;
  QTable blank;
  for (int i = 0; i < cfg.agents; ++i) models.push_back(make_single_ensemble(blank));
  MissionOptions opts;
  opts.epsilon = cfg.mission_epsilon;

  std::unique_ptr<EdgeCluster> edge;
  if (cfg.use_cluster) edge = std::make_unique<EdgeCluster>(cfg.edge);
  MissionResult mr =
      run_mission(spec, ctx, models, reward, edge.get(), cfg.seed, opts);
  write_report(mr.report, out_path(cfg, "eval_report.json"));
  write_trace_csv(mr.trace, out_path(cfg, "mission_trace.csv"));
  if (edge) write_cluster_logs(*edge, cfg);
  return mr.report.finished ? 0 : 3;
}

int run_camera(const MissionConfig& cfg) {
  TrajectoryDataset ds = make_trajectories(cfg);
  DayData day = day_slice(ds, 0);
  CorrelationModel model = build_correlations(day, cfg.camera.window_minutes);

  double ts = model.spatial_threshold, tt = model.temporal_threshold;
  std::filesystem::path p = std::filesystem::path(cfg.out_dir) / "shaping_result.json";
  if (std::filesystem::exists(p)) {
    ShapingResult r = load_shaping_result(p.string());
    FLEET_REQUIRE(r.best.w.size() == 2, "cmd_run: camera shaping result needs two thresholds");
    ts = r.best.w[0];
    tt = r.best.w[1];
  }
  EvalReport rep = camera_day_report(day, model, ts, tt, cfg.goals);
  write_report(rep, out_path(cfg, "eval_report.json"));
  return rep.finished ? 0 : 3;
}

int campaign_crop(const MissionConfig& cfg) {
  FleetSpec spec = build_crop_fleetspec(cfg);
  RewardSpec reward = pick_reward(cfg);

  std::unique_ptr<EdgeCluster> edge;
  if (cfg.use_cluster) edge = std::make_unique<EdgeCluster>(cfg.edge);
  CampaignResult cr = run_campaign(spec, reward, cfg.missions, cfg.online, cfg.seed,
                                   campaign_config(cfg, edge.get()));

  save_campaign_csv(cr, out_path(cfg, "campaign_summary.csv"));
  save_usefulness_history(cr, out_path(cfg, "usefulness_history.json"));
  ordered_json reports = ordered_json::array();
  for (size_t k = 0; k < cr.rounds.size(); ++k) {
    ordered_json row = report_json(cr.rounds[k].report);
    row["mission"] = k;
    reports.push_back(std::move(row));
  }
  write_text_file(out_path(cfg, "campaign_reports.json"), reports.dump(2) + "\n");
  if (edge) write_cluster_logs(*edge, cfg);
  return cr.rounds.back().report.finished ? 0 : 3;
}

int campaign_camera(const MissionConfig& cfg) {
  TrajectoryDataset ds = make_trajectories(cfg);
  CameraCampaignResult r = run_camera_campaign(ds, cfg.camera.window_minutes, cfg.goals,
                                               shaping_config(cfg), cfg.seed);
  save_camera_campaign_csv(r, out_path(cfg, "camera_days.csv"));
  ordered_json fj = ordered_json::object();
  fj["spatial"] = fmt_double(r.frozen_thresholds[0]);
  fj["temporal"] = fmt_double(r.frozen_thresholds[1]);
  write_text_file(out_path(cfg, "frozen_thresholds.json"), fj.dump(2) + "\n");
  return 0;
}

struct CropBenchRow {
  uint64_t seed = 0;
  double fleet_steps = 0, single_steps = 0, speedup = 0;
  double fleet_cov = 0, classic_cov = 0, classic_ratio = 0;
  double automated_cov = 0, automated_ratio = 0;
  double fleet_energy = 0, classic_energy = 0, energy_ratio = 0;
};

CropBenchRow crop_bench_seed(const MissionConfig& cfg, uint64_t seed) {
  MissionConfig one = cfg;
  one.seed = seed;
  one.missions = 1;
  FleetSpec spec = build_crop_fleetspec(one);
  const ExecutionContext& ctx = *spec.contexts.runtime[0];
  RewardSpec reward = pick_reward(cfg);
  MissionOptions opts;
  opts.epsilon = cfg.mission_epsilon;

  CropBenchRow row;
  row.seed = seed;

  std::vector<ModelEnsemble> models;
  QTable blank;
  for (int i = 0; i < cfg.agents; ++i) models.push_back(make_single_ensemble(blank));
  MissionResult fleet = run_mission(spec, ctx, models, reward, nullptr, seed, opts);
  row.fleet_steps = fleet.report.metrics.at("mission_steps");
  row.fleet_cov = fleet.report.metrics.at("coverage");
  row.fleet_energy = fleet.report.metrics.at("agent_energy");

  MissionConfig solo = one;
  solo.agents = 1;
  FleetSpec spec1 = build_crop_fleetspec(solo);
  MissionResult single = run_mission(spec1, *spec1.contexts.runtime[0],
                                     {make_single_ensemble(blank)}, reward, nullptr,
                                     seed, opts);
  row.single_steps = single.report.metrics.at("mission_steps");
  row.speedup = row.fleet_steps > 0 ? row.single_steps / row.fleet_steps : 0.0;

  std::vector<QTable> tables(static_cast<size_t>(cfg.agents));
  MissionResult classic = baseline_classic_rl(spec, ctx, tables, seed);
  row.classic_cov = classic.report.metrics.at("coverage");
  row.classic_energy = classic.report.metrics.at("agent_energy");
  row.classic_ratio = row.classic_cov > 0 ? row.fleet_cov / row.classic_cov : 0.0;
  row.energy_ratio = row.classic_energy > 0 ? row.fleet_energy / row.classic_energy : 0.0;

  double accuracy_goal = 0;
  for (const Goal& g : cfg.goals) {
    if (g.metric == "accuracy" && g.at_least) accuracy_goal = g.target;
  }
  row.automated_cov = automated_min_coverage(spec, ctx, accuracy_goal);
  row.automated_ratio = row.automated_cov > 0 ? row.fleet_cov / row.automated_cov : 0.0;
  return row;
}

int bench_crop(const MissionConfig& cfg) {
  std::vector<CropBenchRow> rows(static_cast<size_t>(cfg.seeds));
  parallel_for(rows.size(), [&](size_t i) {
    rows[i] = crop_bench_seed(cfg, cfg.seed + static_cast<uint64_t>(i));
  });

  std::string out =
      "seed,fleet_steps,single_steps,speedup,fleet_coverage,classic_coverage,"
      "classic_ratio,automated_coverage,automated_ratio,fleet_energy,"
      "classic_energy,energy_ratio\n";
  CropBenchRow mean;
  for (const CropBenchRow& r : rows) {
    out += std::to_string(r.seed);
    for (double v : {r.fleet_steps, r.single_steps, r.speedup, r.fleet_cov,
                     r.classic_cov, r.classic_ratio, r.automated_cov, r.automated_ratio,
                     r.fleet_energy, r.classic_energy, r.energy_ratio}) {
      out += ',';
      out += fmt_double(v);
    }
    out += '\n';
    mean.fleet_steps += r.fleet_steps / rows.size();
    mean.single_steps += r.single_steps / rows.size();
    mean.speedup += r.speedup / rows.size();
    mean.fleet_cov += r.fleet_cov / rows.size();
    mean.classic_cov += r.classic_cov / rows.size();
    mean.classic_ratio += r.classic_ratio / rows.size();
    mean.automated_cov += r.automated_cov / rows.size();
    mean.automated_ratio += r.automated_ratio / rows.size();
    mean.fleet_energy += r.fleet_energy / rows.size();
    mean.classic_energy += r.classic_energy / rows.size();
    mean.energy_ratio += r.energy_ratio / rows.size();
  }
  out += "mean";
  for (double v : {mean.fleet_steps, mean.single_steps, mean.speedup, mean.fleet_cov,
                   mean.classic_cov, mean.classic_ratio, mean.automated_cov,
                   mean.automated_ratio, mean.fleet_energy, mean.classic_energy,
                   mean.energy_ratio}) {
    out += ',';
    out += fmt_double(v);
  }
  out += '\n';
  write_text_file(out_path(cfg, "bench_crop.csv"), out);
  return 0;
}

int bench_camera(const MissionConfig& cfg) {
  const int days = cfg.camera.days;
  std::vector<CameraCampaignResult> results(static_cast<size_t>(cfg.seeds));
  parallel_for(results.size(), [&](size_t i) {
    MissionConfig one = cfg;
    one.seed = cfg.seed + static_cast<uint64_t>(i);
    results[i] = run_camera_campaign(make_trajectories(one), cfg.camera.window_minutes,
                                     cfg.goals, shaping_config(cfg), one.seed);
  });

  std::string out = "day,tuned_recall,retrained_recall,frozen_recall\n";
  for (int d = 0; d < days; ++d) {
    double tuned = 0, retrained = 0, frozen = 0;
    for (const CameraCampaignResult& r : results) {
      tuned += r.days[static_cast<size_t>(d)].tuned_recall / results.size();
      retrained += r.days[static_cast<size_t>(d)].retrained_recall / results.size();
      frozen += r.days[static_cast<size_t>(d)].frozen_recall / results.size();
    }
    out += std::to_string(d);
    for (double v : {tuned, retrained, frozen}) {
      out += ',';
      out += fmt_double(v);
    }
    out += '\n';
  }
  write_text_file(out_path(cfg, "bench_camera.csv"), out);
  return 0;
}

}  // namespace

double automated_min_coverage(const FleetSpec& spec, const ExecutionContext& ctx,
                              double accuracy_goal) {
  const int n_cells = ctx.width * ctx.height;
  FLEET_REQUIRE(n_cells > 0, "automated_min_coverage: context must have cells");
  auto reaches = [&](int k) {
    EvalReport rep =
        baseline_automated(spec, ctx, static_cast<double>(k) / n_cells);
    return rep.metrics.at("accuracy") >= accuracy_goal;
  };
  if (!reaches(n_cells)) return 1.0;
  int lo = 1, hi = n_cells;
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    if (reaches(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return static_cast<double>(lo) / n_cells;
}

int cmd_shape(const MissionConfig& cfg) {
  validate_mission_config(cfg);
  return cfg.app == "crop" ? shape_crop(cfg) : shape_camera(cfg);
}

int cmd_run(const MissionConfig& cfg) {
  validate_mission_config(cfg);
  return cfg.app == "crop" ? run_crop(cfg) : run_camera(cfg);
}

int cmd_campaign(const MissionConfig& cfg) {
  validate_mission_config(cfg);
  return cfg.app == "crop" ? campaign_crop(cfg) : campaign_camera(cfg);
}

int cmd_bench(const MissionConfig& cfg) {
  validate_mission_config(cfg);
  return cfg.app == "crop" ? bench_crop(cfg) : bench_camera(cfg);
}

}  // namespace fleet
