#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "fleet/rng.hpp"

namespace fleet {

// Squared-exponential kernel with one shared per-dimension length scale.
// Inputs live on the unit cube; a diagonal jitter keeps the Cholesky stable
// when candidates repeat.
struct GpParams {
  double length_scale = 0.2;
  double signal_var = 1.0;
  double jitter = 1e-6;
};

class Surrogate {
 public:
  explicit Surrogate(int dim, GpParams params = {});

  // Records one observation. y must be finite; x must match dim.
  void add(const std::vector<double>& x, double y);
  // Factorizes the covariance. Called implicitly by predict when stale.
  void fit();
  // Posterior (mean, variance) at x; variance clamped to [0, signal_var].
  std::pair<double, double> predict(const std::vector<double>& x) const;

  size_t n() const { return xs_.size(); }
  int dim() const { return dim_; }
  const GpParams& params() const { return params_; }

 private:
  double kernel(const std::vector<double>& a, const std::vector<double>& b) const;

  int dim_;
  GpParams params_;
  std::vector<double> inv2l2_;  // 1 / (2 * length_scale^2) per dimension
  std::vector<std::vector<double>> xs_;
  std::vector<double> ys_;
  mutable std::vector<double> chol_;   // lower-triangular factor, row-major
  mutable std::vector<double> alpha_;  // K^-1 y
  mutable bool fitted_ = false;
};

// Expected improvement for minimization: EI = (best-mu)*Phi(z) + sigma*phi(z)
// with z = (best-mu)/sigma. Returns 0 when the variance is 0.
double expected_improvement(double mu, double var, double best);

// Draws n_candidates points (uniform cube by default, or via sampler) and
// returns the one with maximal EI; the first strict maximum wins.
std::vector<double> propose_next(const Surrogate& gp, double best, int n_candidates, Rng& rng,
                                 const std::function<std::vector<double>(Rng&)>& sampler = {});

// Gaussian helpers shared with the tests' quadrature oracles.
double std_normal_cdf(double z);
double std_normal_pdf(double z);

}  // namespace fleet
