#include "fleet/util.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "fleet/errors.hpp"

namespace fleet {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot write file: " + path);
  out << content;
  if (!out) fail_io("write failed: " + path);
}

int env_threads() {
  const char* v = std::getenv("FLEETSIM_THREADS");
  if (!v || !*v) return 1;
  int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  int workers = env_threads();
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  size_t nw = std::min<size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = w; i < n; i += nw) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace fleet
