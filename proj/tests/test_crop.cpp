#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fleet/crop.hpp"
#include "fleet/errors.hpp"
#include "fleet/mission.hpp"
#include "fleet/rng.hpp"

using namespace fleet;

namespace {

ExecutionContext hand_ctx(int h, int w, const std::vector<double>& truth,
                          const std::vector<double>& ch0) {
  ExecutionContext ctx;
  ctx.context_id = "hand";
  ctx.width = w;
  ctx.height = h;
  ctx.channels = 3;
  ctx.ground_truth = truth;
  for (size_t i = 0; i < truth.size(); ++i) ctx.cells.push_back({ch0[i], 0.5, 0.5});
  return ctx;
}

std::vector<double> channel(const ExecutionContext& ctx, int ch) {
  std::vector<double> out;
  for (const auto& cell : ctx.cells) out.push_back(cell[ch]);
  return out;
}

}  // namespace

TEST_CASE("field generation is deterministic per seed") {
  ExecutionContext a = gen_field(24, 24, 2, 5);
  ExecutionContext b = gen_field(24, 24, 2, 5);
  CHECK(a.cells == b.cells);
  CHECK(a.ground_truth == b.ground_truth);
  ExecutionContext c = gen_field(24, 24, 2, 6);
  CHECK(a.ground_truth != c.ground_truth);
}

TEST_CASE("smoothing produces spatial correlation, the noise channel has none") {
  ExecutionContext f = gen_field(24, 24, 4, 11);
  CHECK(lag1_autocorr(f.ground_truth, 24, 24) > 0.5);
  CHECK(lag1_autocorr(channel(f, 0), 24, 24) > 0.5);
  CHECK(lag1_autocorr(channel(f, 1), 24, 24) > 0.3);
  CHECK(std::fabs(lag1_autocorr(channel(f, 2), 24, 24)) < 0.2);

  ExecutionContext raw = gen_field(24, 24, 0, 11);
  CHECK(std::fabs(lag1_autocorr(raw.ground_truth, 24, 24)) < 0.25);
}

TEST_CASE("field values stay in the unit interval and truth spans it") {
  ExecutionContext f = gen_field(16, 20, 3, 77);
  validate_context(f);
  auto [lo, hi] = std::minmax_element(f.ground_truth.begin(), f.ground_truth.end());
  // The odds curve maps the extreme ranks to within a whisker of 0 and 1.
  CHECK(*lo >= 0.0);
  CHECK(*lo < 1e-6);
  CHECK(*hi <= 1.0);
  CHECK(*hi > 1.0 - 1e-6);
  for (const auto& cell : f.cells) {
    for (double v : cell) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("autocorrelation helper sanity") {
  std::vector<double> flat(36, 0.3);
  CHECK(lag1_autocorr(flat, 6, 6) == 0.0);
  std::vector<double> grad;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) grad.push_back(r + c);
  }
  CHECK(lag1_autocorr(grad, 6, 6) > 0.9);
}

TEST_CASE("crop map plug passes the three channels through unchanged") {
  FleetSpec spec = make_crop_fleetspec(1, {});
  ExecutionContext ctx = hand_ctx(1, 1, {0.5}, {0.4});
  ctx.cells[0] = {0.4, 0.6, 0.1};
  auto raw = spec.map.sense(ctx, StateId{0, 0});
  CHECK(normalize_features(raw, spec.map.norms) == std::vector<double>{0.4, 0.6, 0.1});
}

TEST_CASE("inverse-distance extrapolation") {
  std::map<StateId, double> all;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) all[StateId{r, c}] = r * 3 + c;
  }
  std::vector<double> ident = extrapolate(all, 3, 3);
  for (int i = 0; i < 9; ++i) CHECK(ident[i] == static_cast<double>(i));

  std::map<StateId, double> one{{StateId{1, 1}, 0.7}};
  for (double v : extrapolate(one, 4, 4)) CHECK(v == doctest::Approx(0.7));

  std::map<StateId, double> pair{{StateId{0, 0}, 0.0}, {StateId{0, 2}, 1.0}};
  std::vector<double> mid = extrapolate(pair, 3, 1);
  CHECK(mid[1] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(extrapolate({}, 3, 3), contract_error);

  Rng rng(8);
  for (int rep = 0; rep < 30; ++rep) {
    std::map<StateId, double> pts;
    int k = 1 + static_cast<int>(rng.uniform_int(10));
    for (int i = 0; i < k; ++i) {
      pts[StateId{static_cast<int>(rng.uniform_int(10)), static_cast<int>(rng.uniform_int(10))}] =
          rng.uniform();
    }
    double lo = 2, hi = -1;
    for (const auto& [s, v] : pts) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (double v : extrapolate(pts, 10, 10)) {
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("hand-checked checkerboard accuracy") {
  // Diagonal visitation of a 2x2 checkerboard: both sensed values are 0, the
  // two unvisited cells extrapolate to 0 against truth 1, so MAE = 0.5.
  ExecutionContext ctx = hand_ctx(2, 2, {0, 1, 1, 0}, {0, 1, 1, 0});
  std::map<StateId, Ssv> sensed;
  sensed[StateId{0, 0}] = Ssv{StateId{0, 0}, {0.0, 0.5, 0.5}};
  sensed[StateId{1, 1}] = Ssv{StateId{1, 1}, {0.0, 0.5, 0.5}};
  EvalInput in;
  in.context = &ctx;
  in.sensed = &sensed;
  EvalReport rep = crop_eval(in);
  CHECK(rep.metrics.at("accuracy") == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("constant truth and exhaustive noise-free visits both score 1.0") {
  ExecutionContext flat = hand_ctx(2, 3, {0.4, 0.4, 0.4, 0.4, 0.4, 0.4}, {0.4, 0.4, 0.4, 0.4, 0.4, 0.4});
  std::map<StateId, Ssv> one;
  one[StateId{0, 0}] = Ssv{StateId{0, 0}, {0.4, 0.5, 0.5}};
  EvalInput in;
  in.context = &flat;
  in.sensed = &one;
  CHECK(crop_eval(in).metrics.at("accuracy") == 1.0);

  ExecutionContext f = gen_field(8, 8, 2, 3, 0.0);  // channel 0 equals truth
  std::map<StateId, Ssv> all;
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      StateId s{r, c};
      all[s] = Ssv{s, f.cell(s)};
    }
  }
  EvalInput full;
  full.context = &f;
  full.sensed = &all;
  CHECK(crop_eval(full).metrics.at("accuracy") == 1.0);

  std::map<StateId, Ssv> none;
  EvalInput empty;
  empty.context = &f;
  empty.sensed = &none;
  EvalReport rep = crop_eval(empty);
  CHECK_FALSE(rep.finished);
  CHECK(rep.metrics.count("accuracy") == 0);
}

TEST_CASE("a full-exploration crop mission maps the field accurately") {
  ExecutionContext f = gen_field(12, 12, 2, 19);
  FleetSpec spec = make_crop_fleetspec(2, {});
  RewardSpec rspec{{0.0, 0.0, 0.0}, 3.0, 100};  // zero rewards keep the gate silent
  MissionResult res = run_mission(spec, f, {make_single_ensemble(QTable{}),
                                            make_single_ensemble(QTable{})},
                                  rspec, nullptr, 23);
  CHECK(res.report.metrics.at("coverage") == 1.0);
  CHECK(res.report.metrics.at("accuracy") > 0.9);
  REQUIRE(res.report.artifact.has_value());
  CHECK(res.report.artifact->size() == 144);
}

TEST_CASE("field families drift only through the latent blend") {
  CropParams p;
  p.width = 16;
  p.height = 16;
  p.smoothness = 2;
  p.noise = 0.02;

  p.drift = 0.1;
  ExecutionContext k0 = gen_field_family(p, 31, 0);
  ExecutionContext again = gen_field_family(p, 31, 0);
  CHECK(k0.cells == again.cells);
  CHECK(k0.ground_truth == gen_field(16, 16, 2, 31).ground_truth);

  ExecutionContext k5 = gen_field_family(p, 31, 5);
  CHECK(k0.ground_truth != k5.ground_truth);

  p.drift = 0.0;
  ExecutionContext s0 = gen_field_family(p, 31, 0);
  ExecutionContext s7 = gen_field_family(p, 31, 7);
  CHECK(s0.ground_truth == s7.ground_truth);
  for (size_t i = 0; i < s0.cells.size(); ++i) {
    CHECK(std::fabs(s0.cells[i][0] - s7.cells[i][0]) <= 2 * p.noise + 1e-12);
    CHECK(s0.cells[i][1] == s7.cells[i][1]);  // leaf-area analog is stable
  }
}
