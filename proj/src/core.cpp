#include "fleet/core.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fleet/errors.hpp"
#include "fleet/util.hpp"

namespace fleet {

using nlohmann::json;

const char* action_name(Action a) {
  switch (a) {
    case Action::North: return "north";
    case Action::South: return "south";
    case Action::East: return "east";
    case Action::West: return "west";
    case Action::SenseHold: return "sense";
  }
  return "?";
}

StateId apply_action(StateId s, Action a) {
  switch (a) {
    case Action::North: return {s.row - 1, s.col};
    case Action::South: return {s.row + 1, s.col};
    case Action::East: return {s.row, s.col + 1};
    case Action::West: return {s.row, s.col - 1};
    case Action::SenseHold: return s;
  }
  return s;
}

void validate_context(const ExecutionContext& ctx) {
  if (ctx.width <= 0 || ctx.height <= 0)
    fail_io("context '" + ctx.context_id + "': width and height must be positive");
  if (ctx.channels <= 0) fail_io("context '" + ctx.context_id + "': channels must be positive");
  size_t n = static_cast<size_t>(ctx.width) * ctx.height;
  if (ctx.cells.size() != n)
    fail_io("context '" + ctx.context_id + "': cells has " + std::to_string(ctx.cells.size()) +
            " entries, expected " + std::to_string(n));
  if (ctx.ground_truth.size() != n)
    fail_io("context '" + ctx.context_id + "': ground_truth has " +
            std::to_string(ctx.ground_truth.size()) + " entries, expected " + std::to_string(n));
  for (size_t i = 0; i < n; ++i) {
    int r = static_cast<int>(i) / ctx.width;
    int c = static_cast<int>(i) % ctx.width;
    std::string at = "(" + std::to_string(r) + "," + std::to_string(c) + ")";
    if (ctx.cells[i].size() != static_cast<size_t>(ctx.channels))
      fail_io("context '" + ctx.context_id + "': cell " + at + " has " +
              std::to_string(ctx.cells[i].size()) + " channels, expected " +
              std::to_string(ctx.channels));
    for (int k = 0; k < ctx.channels; ++k)
      if (!std::isfinite(ctx.cells[i][k]))
        fail_io("context '" + ctx.context_id + "': cells " + at + " channel " +
                std::to_string(k) + " is not finite");
    if (!std::isfinite(ctx.ground_truth[i]))
      fail_io("context '" + ctx.context_id + "': ground_truth " + at + " is not finite");
  }
}

ExecutionContext load_context(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail_io("context file '" + path + "': " + e.what());
  }
  ExecutionContext ctx;
  try {
    ctx.context_id = j.at("context_id").get<std::string>();
    ctx.width = j.at("width").get<int>();
    ctx.height = j.at("height").get<int>();
    ctx.channels = j.at("channels").get<int>();
    ctx.cells = j.at("cells").get<std::vector<std::vector<double>>>();
    const auto& gt = j.at("ground_truth");
    if (!gt.is_array()) fail_io("context file '" + path + "': ground_truth must be an array");
    for (const auto& row : gt) {
      if (!row.is_array()) fail_io("context file '" + path + "': ground_truth must be row arrays");
      for (const auto& v : row) ctx.ground_truth.push_back(v.get<double>());
    }
  } catch (const json::exception& e) {
    fail_io("context file '" + path + "': " + e.what());
  }
  validate_context(ctx);
  return ctx;
}

void save_context(const ExecutionContext& ctx, const std::string& path) {
  validate_context(ctx);
  json j;
  j["context_id"] = ctx.context_id;
  j["width"] = ctx.width;
  j["height"] = ctx.height;
  j["channels"] = ctx.channels;
  j["cells"] = ctx.cells;
  json gt = json::array();
  for (int r = 0; r < ctx.height; ++r) {
    json row = json::array();
    for (int c = 0; c < ctx.width; ++c) row.push_back(ctx.ground_truth[ctx.index({r, c})]);
    gt.push_back(std::move(row));
  }
  j["ground_truth"] = std::move(gt);
  write_text_file(path, j.dump());
}

std::vector<Action> valid_actions(StateId s, int width, int height) {
  std::vector<Action> out;
  out.reserve(kActionCount);
  if (s.row > 0) out.push_back(Action::North);
  if (s.row + 1 < height) out.push_back(Action::South);
  if (s.col + 1 < width) out.push_back(Action::East);
  if (s.col > 0) out.push_back(Action::West);
  out.push_back(Action::SenseHold);
  return out;
}

std::vector<Action> valid_actions(StateId s, const ExecutionContext& ctx) {
  return valid_actions(s, ctx.width, ctx.height);
}

int tiles_per_row(int width, int tile) {
  FLEET_REQUIRE(tile > 0 && width > 0, "tiling requires positive width and tile size");
  return (width + tile - 1) / tile;
}

int group_of(StateId s, int width, int tile) {
  FLEET_REQUIRE(s.row >= 0 && s.col >= 0 && s.col < width, "group_of: state out of bounds");
  return (s.row / tile) * tiles_per_row(width, tile) + (s.col / tile);
}

int group_count(int width, int height, int tile) {
  return tiles_per_row(width, tile) * ((height + tile - 1) / tile);
}

std::vector<StateId> group_states(int group, int width, int height, int tile) {
  int per_row = tiles_per_row(width, tile);
  FLEET_REQUIRE(group >= 0 && group < group_count(width, height, tile),
                "group_states: group id out of range");
  int tr = group / per_row;
  int tc = group % per_row;
  std::vector<StateId> out;
  for (int r = tr * tile; r < std::min((tr + 1) * tile, height); ++r)
    for (int c = tc * tile; c < std::min((tc + 1) * tile, width); ++c) out.push_back({r, c});
  return out;
}

std::vector<double> normalize_features(const std::vector<double>& raw,
                                       const std::vector<std::pair<double, double>>& norms) {
  FLEET_REQUIRE(raw.size() == norms.size(), "normalize_features: feature/range count mismatch");
  std::vector<double> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    auto [lo, hi] = norms[i];
    if (!(lo < hi)) {
      out[i] = 0.0;  // empty range: the feature is constant
      continue;
    }
    out[i] = std::clamp((raw[i] - lo) / (hi - lo), 0.0, 1.0);
  }
  return out;
}

size_t FeatureSpace::group_visits(int group) const {
  auto it = groups.find(group);
  return it == groups.end() ? 0 : it->second.size();
}

size_t FeatureSpace::total_visits() const {
  size_t n = 0;
  for (const auto& [g, v] : groups) n += v.size();
  return n;
}

std::map<StateId, std::vector<double>> FeatureSpace::visited_features() const {
  std::map<StateId, std::vector<double>> out;
  for (const auto& [g, visits] : groups)
    for (const auto& ssv : visits) out[ssv.state] = ssv.features;
  return out;
}

bool goals_met(const Goals& goals, const EvalReport& report) {
  for (const auto& g : goals) {
    auto it = report.metrics.find(g.metric);
    FLEET_REQUIRE(it != report.metrics.end(),
                  "goal metric '" + g.metric + "' is not produced by Eval");
    if (g.at_least ? it->second < g.target : it->second > g.target) return false;
  }
  return true;
}

void save_eval_report(const EvalReport& report, const std::string& path) {
  json j;
  j["finished"] = report.finished;
  j["metrics"] = report.metrics;
  if (report.artifact) {
    json rows = json::array();
    for (int r = 0; r < report.artifact_height; ++r) {
      json row = json::array();
      for (int c = 0; c < report.artifact_width; ++c)
        row.push_back((*report.artifact)[static_cast<size_t>(r) * report.artifact_width + c]);
      rows.push_back(std::move(row));
    }
    j["artifact"] = std::move(rows);
  }
  write_text_file(path, j.dump());
}

}  // namespace fleet
