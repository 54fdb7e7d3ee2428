#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fleet {

// Shortest round-trip decimal representation of a double (std::to_chars).
// Used for all CSV/JSON-adjacent text output so reruns are byte-identical.
std::string fmt_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Worker-thread cap: FLEETSIM_THREADS when set (>=1), otherwise 1.
int env_threads();

// Runs fn(i) for i in [0, n) with at most env_threads() workers. Work items
// must be independent; results should be written to caller-owned slots so
// the outcome is independent of scheduling.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace fleet
