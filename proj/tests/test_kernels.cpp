#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fleet/kernels.hpp"
#include "fleet/rng.hpp"

using namespace fleet;

namespace {

bool close(double a, double b, double tol = 1e-11) {
  return std::fabs(a - b) <= tol * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

std::vector<double> random_vec(Rng& rng, size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match hand arithmetic") {
  std::vector<double> a{0.2, 0.8, 0.4};
  std::vector<double> b{0.5, 0.25, 1.0};
  CHECK(kernels::scalar().dot(a.data(), b.data(), 3) == doctest::Approx(0.7).epsilon(1e-12));

  std::vector<double> w{2.0, 1.0};
  std::vector<double> p{1.0, 3.0};
  std::vector<double> q{0.0, 1.0};
  // 2*(1)^2 + 1*(2)^2 = 6
  CHECK(kernels::scalar().weighted_sqdist(p.data(), q.data(), w.data(), 2) ==
        doctest::Approx(6.0).epsilon(1e-12));

  // Two points at distance 1 and 2 from the query with values 1 and 0:
  // num = 1/1 + 0, den = 1/1 + 1/4.
  std::vector<double> pr{0.0, 0.0};
  std::vector<double> pc{1.0, 2.0};
  std::vector<double> vals{1.0, 0.0};
  double num = 0, den = 0;
  kernels::scalar().idw_accumulate(0.0, 0.0, pr.data(), pc.data(), vals.data(), 2, &num, &den);
  CHECK(num == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(den == doctest::Approx(1.25).epsilon(1e-12));

  std::vector<double> x{1.0, -2.0, 3.0};
  std::vector<double> y{0.5, 0.5, 0.5};
  CHECK(kernels::scalar().sum_abs_diff(x.data(), y.data(), 3) ==
        doctest::Approx(0.5 + 2.5 + 2.5).epsilon(1e-12));
}

TEST_CASE("empty inputs produce zero") {
  const auto& k = kernels::active();
  CHECK(k.dot(nullptr, nullptr, 0) == 0.0);
  CHECK(k.weighted_sqdist(nullptr, nullptr, nullptr, 0) == 0.0);
  CHECK(k.sum_abs_diff(nullptr, nullptr, 0) == 0.0);
  double num = 0, den = 0;
  k.idw_accumulate(0, 0, nullptr, nullptr, nullptr, 0, &num, &den);
  CHECK(num == 0.0);
  CHECK(den == 0.0);
}

TEST_CASE("active implementation is equivalent to the scalar reference") {
  const auto& ref = kernels::scalar();
  const auto& act = kernels::active();
  INFO("active kernel set: ", act.name);

  Rng rng(20240817);
  for (size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 33u, 100u, 1024u}) {
    for (int rep = 0; rep < 8; ++rep) {
      auto a = random_vec(rng, n, -3.0, 3.0);
      auto b = random_vec(rng, n, -3.0, 3.0);
      auto w = random_vec(rng, n, 0.0, 2.0);
      CHECK(close(ref.dot(a.data(), b.data(), n), act.dot(a.data(), b.data(), n)));
      CHECK(close(ref.weighted_sqdist(a.data(), b.data(), w.data(), n),
                  act.weighted_sqdist(a.data(), b.data(), w.data(), n)));
      CHECK(close(ref.sum_abs_diff(a.data(), b.data(), n),
                  act.sum_abs_diff(a.data(), b.data(), n)));

      // Points placed away from the query so every distance is positive.
      auto pr = random_vec(rng, n, 1.0, 30.0);
      auto pc = random_vec(rng, n, 1.0, 30.0);
      auto vals = random_vec(rng, n, 0.0, 1.0);
      double n1 = 0, d1 = 0, n2 = 0, d2 = 0;
      ref.idw_accumulate(0.25, -0.5, pr.data(), pc.data(), vals.data(), n, &n1, &d1);
      act.idw_accumulate(0.25, -0.5, pr.data(), pc.data(), vals.data(), n, &n2, &d2);
      CHECK(close(n1, n2));
      CHECK(close(d1, d2));
    }
  }
}

TEST_CASE("dispatch picks a valid implementation") {
  const auto& act = kernels::active();
  if (kernels::avx2_selected()) {
    CHECK(kernels::avx2_compiled());
    CHECK(std::string(act.name) == "avx2");
  } else {
    CHECK(std::string(act.name) == "scalar");
  }
}
