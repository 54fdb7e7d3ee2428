#include "fleet/crop.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fleet/errors.hpp"
#include "fleet/kernels.hpp"
#include "fleet/rng.hpp"

namespace fleet {

namespace {

std::vector<double> value_noise(int w, int h, Rng rng) {
  std::vector<double> out(static_cast<size_t>(w) * h);
  for (double& v : out) v = rng.uniform();
  return out;
}

// One 3x3 mean pass; border cells average their in-bounds neighborhood.
std::vector<double> box_blur(const std::vector<double>& in, int w, int h) {
  std::vector<double> out(in.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          acc += in[static_cast<size_t>(rr) * w + cc];
          ++n;
        }
      }
      out[static_cast<size_t>(r) * w + c] = acc / n;
    }
  }
  return out;
}

void minmax_normalize(std::vector<double>& v) {
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double base = *lo;
  double span = *hi - base;
  if (span < 1e-12) {
    std::fill(v.begin(), v.end(), 0.5);
    return;
  }
  for (double& x : v) x = (x - base) / span;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

ExecutionContext gen_field_family(const CropParams& p, uint64_t seed, int mission_index) {
  FLEET_REQUIRE(p.width >= 1 && p.height >= 1, "field dimensions must be at least 1");
  FLEET_REQUIRE(p.smoothness >= 0, "smoothness must be non-negative");
  FLEET_REQUIRE(p.noise >= 0, "noise amplitude must be non-negative");
  FLEET_REQUIRE(p.drift >= 0 && p.drift <= 1, "drift must lie in [0, 1]");
  FLEET_REQUIRE(mission_index >= 0, "mission index must be non-negative");

  Rng root(seed);
  int w = p.width, h = p.height;
  size_t n = static_cast<size_t>(w) * h;

  std::vector<double> base = value_noise(w, h, root.fork(1));
  double a = std::min(1.0, mission_index * p.drift);
  std::vector<double> truth(n);
  if (a > 0) {
    std::vector<double> target = value_noise(w, h, root.fork(2));
    for (size_t i = 0; i < n; ++i) truth[i] = (1 - a) * base[i] + a * target[i];
  } else {
    truth = base;
  }
  for (int pass = 0; pass < p.smoothness; ++pass) truth = box_blur(truth, w, h);
  minmax_normalize(truth);
  // Flatten the value histogram (midrank keeps ties equal, so constant
  // fields stay constant), then saturate toward bare ground or dense
  // canopy. The pipeline makes every seed equally hard to map: without it
  // a handful of samples pins the field mean and the task collapses, and
  // lopsided seeds stay trivial for any constant predictor.
  {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return truth[a] < truth[b]; });
    std::vector<double> flat(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && truth[order[j + 1]] == truth[order[i]]) ++j;
      double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 0.5;
      for (size_t k = i; k <= j; ++k) flat[order[k]] = mid / static_cast<double>(n);
      i = j + 1;
    }
    for (size_t k = 0; k < n; ++k) {
      double v = flat[k];
      double num = std::pow(v, 4.0);
      truth[k] = num / (num + std::pow(1.0 - v, 4.0));
    }
  }

  // Leaf-area analog: the yield blended with an independent smooth field, so
  // it co-varies with the target without duplicating channel 0.
  std::vector<double> aux = value_noise(w, h, root.fork(4));
  for (int pass = 0; pass < p.smoothness; ++pass) aux = box_blur(aux, w, h);
  minmax_normalize(aux);

  Rng ch0 = root.fork(100 + static_cast<uint64_t>(mission_index));
  Rng ch2 = root.fork(200 + static_cast<uint64_t>(mission_index));

  ExecutionContext ctx;
  ctx.context_id = "crop-" + std::to_string(seed) + "-" + std::to_string(mission_index);
  ctx.width = w;
  ctx.height = h;
  ctx.channels = 3;
  ctx.ground_truth = truth;
  ctx.cells.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double exg = clamp01(truth[i] + ch0.uniform(-p.noise, p.noise));
    double lai = clamp01(0.6 * truth[i] + 0.4 * aux[i]);
    ctx.cells[i] = {exg, lai, ch2.uniform()};
  }
  return ctx;
}

ExecutionContext gen_field(int width, int height, int smoothness, uint64_t seed, double noise) {
  CropParams p;
  p.width = width;
  p.height = height;
  p.smoothness = smoothness;
  p.noise = noise;
  p.drift = 0.0;
  return gen_field_family(p, seed, 0);
}

double lag1_autocorr(const std::vector<double>& field, int width, int height) {
  FLEET_REQUIRE(static_cast<size_t>(width) * height == field.size(),
                "field size does not match dimensions");
  std::vector<double> x, y;
  auto at = [&](int r, int c) { return field[static_cast<size_t>(r) * width + c]; };
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c + 1 < width; ++c) {
      x.push_back(at(r, c));
      y.push_back(at(r, c + 1));
    }
  }
  for (int r = 0; r + 1 < height; ++r) {
    for (int c = 0; c < width; ++c) {
      x.push_back(at(r, c));
      y.push_back(at(r + 1, c));
    }
  }
  if (x.empty()) return 0.0;
  size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx < 1e-15 || syy < 1e-15) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> extrapolate(const std::map<StateId, double>& visited, int width,
                                int height) {
  FLEET_REQUIRE(!visited.empty(), "extrapolation needs at least one visited state");
  size_t n = visited.size();
  std::vector<double> pr, pc, vals;
  pr.reserve(n);
  pc.reserve(n);
  vals.reserve(n);
  for (const auto& [s, v] : visited) {
    pr.push_back(static_cast<double>(s.row));
    pc.push_back(static_cast<double>(s.col));
    vals.push_back(v);
  }
  std::vector<double> out(static_cast<size_t>(width) * height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      auto it = visited.find(StateId{r, c});
      if (it != visited.end()) {
        out[static_cast<size_t>(r) * width + c] = it->second;
        continue;
      }
      double num = 0, den = 0;
      kernels::idw_accumulate(static_cast<double>(r), static_cast<double>(c), pr.data(),
                              pc.data(), vals.data(), n, &num, &den);
      out[static_cast<size_t>(r) * width + c] = num / den;
    }
  }
  return out;
}

EvalReport crop_eval(const EvalInput& in) {
  EvalReport rep;
  FLEET_REQUIRE(in.context != nullptr && in.sensed != nullptr, "eval input incomplete");
  if (in.sensed->empty()) {
    rep.finished = false;
    return rep;
  }
  const ExecutionContext& ctx = *in.context;
  std::map<StateId, double> estimates;
  for (const auto& [s, ssv] : *in.sensed) {
    FLEET_REQUIRE(!ssv.features.empty(), "crop SSV must carry the greenness feature");
    estimates[s] = ssv.features[0];
  }
  std::vector<double> map_final = extrapolate(estimates, ctx.width, ctx.height);

  auto [lo, hi] = std::minmax_element(ctx.ground_truth.begin(), ctx.ground_truth.end());
  double range = *hi - *lo;
  double accuracy = 1.0;
  if (range > 1e-12) {
    double mae =
        kernels::sum_abs_diff(map_final.data(), ctx.ground_truth.data(), map_final.size()) /
        map_final.size();
    accuracy = clamp01(1.0 - mae / range);
  }
  rep.metrics["accuracy"] = accuracy;
  rep.artifact = std::move(map_final);
  rep.artifact_width = ctx.width;
  rep.artifact_height = ctx.height;
  return rep;
}

FleetSpec make_crop_fleetspec(int n_agents, Goals goals, const LearningParams& params) {
  FleetSpec spec;
  spec.n_agents = n_agents;
  spec.tile = 3;
  spec.map.m = 3;
  spec.map.norms = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
  spec.map.sense = [](const ExecutionContext& ctx, StateId s) { return ctx.cell(s); };
  spec.eval = crop_eval;
  spec.params = params;
  spec.goals = std::move(goals);
  return spec;
}

}  // namespace fleet
