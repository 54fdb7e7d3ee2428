#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fleet {

// Grid coordinates. Row 0 is the north edge, column 0 the west edge.
struct StateId {
  int row = 0;
  int col = 0;
  auto operator<=>(const StateId&) const = default;
};

enum class Action : uint8_t { North = 0, South = 1, East = 2, West = 3, SenseHold = 4 };
constexpr int kActionCount = 5;

const char* action_name(Action a);

// Applies a movement action. Callers must pass an action that is valid at s.
StateId apply_action(StateId s, Action a);

// One sensed cell: the raw channel readings at a state.
struct CellRecord {
  StateId state;
  std::vector<double> channels;
};

// The gridded slice of the world a mission runs on. ground_truth is hidden
// from agents; only Eval and the benchmark drivers read it.
struct ExecutionContext {
  std::string context_id;
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::vector<double>> cells;  // row-major, one channel vector per cell
  std::vector<double> ground_truth;        // row-major scalars

  int n_states() const { return width * height; }
  bool in_bounds(StateId s) const {
    return s.row >= 0 && s.row < height && s.col >= 0 && s.col < width;
  }
  size_t index(StateId s) const { return static_cast<size_t>(s.row) * width + s.col; }
  const std::vector<double>& cell(StateId s) const { return cells[index(s)]; }
  double truth(StateId s) const { return ground_truth[index(s)]; }
  CellRecord record(StateId s) const { return CellRecord{s, cell(s)}; }
};

// Throws io_error naming the offending field if the context is inconsistent
// (dimension mismatch, wrong channel count, non-finite values).
void validate_context(const ExecutionContext& ctx);

ExecutionContext load_context(const std::string& path);
void save_context(const ExecutionContext& ctx, const std::string& path);

// Valid actions at s: SenseHold plus every move that stays on the grid,
// sorted by action ordinal.
std::vector<Action> valid_actions(StateId s, int width, int height);
std::vector<Action> valid_actions(StateId s, const ExecutionContext& ctx);

// States are tiled into square groups (edge tiles may be smaller); ids are
// row-major over tiles.
int tiles_per_row(int width, int tile);
int group_of(StateId s, int width, int tile);
int group_count(int width, int height, int tile);
std::vector<StateId> group_states(int group, int width, int height, int tile);

// Scales raw features to [0, 1] with clamping. A feature whose configured
// range is empty (min >= max) is constant and maps to 0.
std::vector<double> normalize_features(const std::vector<double>& raw,
                                       const std::vector<std::pair<double, double>>& norms);

// Swarm State Vector: the normalized features sensed at one state.
struct Ssv {
  StateId state;
  std::vector<double> features;
};

// Ordered per-group SSV collections gathered during a mission.
struct FeatureSpace {
  std::map<int, std::vector<Ssv>> groups;

  size_t group_visits(int group) const;
  size_t total_visits() const;
  // Flattened view keyed by state; feature vector per visited state.
  std::map<StateId, std::vector<double>> visited_features() const;
};

struct Goal {
  std::string metric;
  bool at_least = true;  // ">=" when true, "<=" otherwise
  double target = 0;
};
using Goals = std::vector<Goal>;

struct EvalReport {
  bool finished = false;
  std::map<std::string, double> metrics;
  std::optional<std::vector<double>> artifact;  // row-major extrapolated map
  int artifact_width = 0;
  int artifact_height = 0;
};

// True when every goal holds. Throws contract_error if a goal names a metric
// the report does not carry.
bool goals_met(const Goals& goals, const EvalReport& report);

void save_eval_report(const EvalReport& report, const std::string& path);

}  // namespace fleet
