#include "fleet/gp.hpp"

#include <cmath>

#include "fleet/errors.hpp"
#include "fleet/kernels.hpp"

namespace fleet {

Surrogate::Surrogate(int dim, GpParams params) : dim_(dim), params_(params) {
  FLEET_REQUIRE(dim > 0, "surrogate: dimension must be positive");
  FLEET_REQUIRE(params.length_scale > 0 && params.signal_var > 0 && params.jitter >= 0,
                "surrogate: bad kernel parameters");
  inv2l2_.assign(dim, 1.0 / (2.0 * params.length_scale * params.length_scale));
}

double Surrogate::kernel(const std::vector<double>& a, const std::vector<double>& b) const {
  double d2 = kernels::weighted_sqdist(a.data(), b.data(), inv2l2_.data(), a.size());
  return params_.signal_var * std::exp(-d2);
}

void Surrogate::add(const std::vector<double>& x, double y) {
  FLEET_REQUIRE(static_cast<int>(x.size()) == dim_, "surrogate: input dimension mismatch");
  for (double v : x) FLEET_REQUIRE(std::isfinite(v), "surrogate: non-finite input coordinate");
  FLEET_REQUIRE(std::isfinite(y), "surrogate: observation must be finite");
  xs_.push_back(x);
  ys_.push_back(y);
  fitted_ = false;
}

void Surrogate::fit() {
  size_t n = xs_.size();
  FLEET_REQUIRE(n > 0, "surrogate: fit with no observations");
  std::vector<double> base(n * n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j <= i; ++j) {
      double k = kernel(xs_[i], xs_[j]);
      base[i * n + j] = k;
      base[j * n + i] = k;
    }

  // Cholesky with escalating jitter; repeated inputs make K singular without it.
  double jit = params_.jitter;
  for (int attempt = 0; attempt < 7; ++attempt, jit *= 10.0) {
    std::vector<double> m = base;
    for (size_t i = 0; i < n; ++i) m[i * n + i] += jit;
    bool ok = true;
    for (size_t i = 0; i < n && ok; ++i) {
      for (size_t j = 0; j <= i; ++j) {
        double sum = m[i * n + j];
        for (size_t k = 0; k < j; ++k) sum -= m[i * n + k] * m[j * n + k];
        if (i == j) {
          if (sum <= 0.0) {
            ok = false;
            break;
          }
          m[i * n + i] = std::sqrt(sum);
        } else {
          m[i * n + j] = sum / m[j * n + j];
        }
      }
    }
    if (!ok) continue;
    chol_ = std::move(m);
    // alpha = K^-1 y by forward/backward substitution.
    alpha_.assign(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
      double sum = ys_[i];
      for (size_t k = 0; k < i; ++k) sum -= chol_[i * n + k] * alpha_[k];
      alpha_[i] = sum / chol_[i * n + i];
    }
    for (size_t ii = n; ii-- > 0;) {
      double sum = alpha_[ii];
      for (size_t k = ii + 1; k < n; ++k) sum -= chol_[k * n + ii] * alpha_[k];
      alpha_[ii] = sum / chol_[ii * n + ii];
    }
    fitted_ = true;
    return;
  }
  fail_contract("surrogate: covariance is not positive definite");
}

std::pair<double, double> Surrogate::predict(const std::vector<double>& x) const {
  FLEET_REQUIRE(static_cast<int>(x.size()) == dim_, "surrogate: input dimension mismatch");
  if (xs_.empty()) return {0.0, params_.signal_var};  // prior
  if (!fitted_) const_cast<Surrogate*>(this)->fit();

  size_t n = xs_.size();
  std::vector<double> ks(n);
  for (size_t i = 0; i < n; ++i) ks[i] = kernel(x, xs_[i]);

  double mean = kernels::dot(ks.data(), alpha_.data(), n);

  // v = L^-1 k*; var = k(x,x) - v'v.
  std::vector<double> v(n);
  for (size_t i = 0; i < n; ++i) {
    double sum = ks[i];
    for (size_t k = 0; k < i; ++k) sum -= chol_[i * n + k] * v[k];
    v[i] = sum / chol_[i * n + i];
  }
  double var = params_.signal_var - kernels::dot(v.data(), v.data(), n);
  if (var < 0.0) var = 0.0;
  if (var > params_.signal_var) var = params_.signal_var;
  return {mean, var};
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * 0.39894228040143267794;  // 1/sqrt(2*pi)
}

double expected_improvement(double mu, double var, double best) {
  FLEET_REQUIRE(std::isfinite(mu) && std::isfinite(best) && var >= 0.0,
                "expected_improvement: bad inputs");
  if (var == 0.0) return 0.0;
  double sigma = std::sqrt(var);
  double z = (best - mu) / sigma;
  double ei = (best - mu) * std_normal_cdf(z) + sigma * std_normal_pdf(z);
  return ei > 0.0 ? ei : 0.0;
}

std::vector<double> propose_next(const Surrogate& gp, double best, int n_candidates, Rng& rng,
                                 const std::function<std::vector<double>(Rng&)>& sampler) {
  FLEET_REQUIRE(n_candidates > 0, "propose_next: need at least one candidate");
  std::vector<double> best_x;
  double best_ei = -1.0;
  for (int c = 0; c < n_candidates; ++c) {
    std::vector<double> x;
    if (sampler) {
      x = sampler(rng);
      FLEET_REQUIRE(static_cast<int>(x.size()) == gp.dim(),
                    "propose_next: sampler dimension mismatch");
    } else {
      x.resize(gp.dim());
      for (auto& v : x) v = rng.uniform();
    }
    auto [mu, var] = gp.predict(x);
    double ei = expected_improvement(mu, var, best);
    if (ei > best_ei) {  // strict: the first maximum wins
      best_ei = ei;
      best_x = std::move(x);
    }
  }
  return best_x;
}

}  // namespace fleet
