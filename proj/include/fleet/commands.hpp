#pragma once

#include <string>

#include "fleet/config.hpp"

namespace fleet {

// CLI entry points. Each writes its artifacts under cfg.out_dir and returns
// the process exit code: 0 success, 3 goals unmet (artifacts still written).
// Config errors surface as io_error (exit 2 in the binary) and broken
// invariants as contract_error (exit 4).
int cmd_shape(const MissionConfig& cfg);
int cmd_run(const MissionConfig& cfg);
int cmd_campaign(const MissionConfig& cfg);
int cmd_bench(const MissionConfig& cfg);

// Smallest coverage fraction at which the row-sweeping baseline reaches the
// accuracy goal on this context, by binary search over the visit count.
// Returns 1.0 when even the full sweep misses the goal.
double automated_min_coverage(const FleetSpec& spec, const ExecutionContext& ctx,
                              double accuracy_goal);

}  // namespace fleet
