#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace baladin::coordinate {

/// True when the barrier subproblem is solved to E^μ ≤ η⁻μ.
inline bool barrier_accepted(double E_mu, double mu, double eta_minus = 10.0) { return E_mu <= eta_minus * mu; }

/// μ⁺ = max(ε/10, min(μ/5, μ^1.5)).
inline double next_mu(double mu, double eps) { return std::max(eps / 10.0, std::min(mu / 5.0, std::pow(mu, 1.5))); }

/// Applies the barrier schedule: reduces μ only when the acceptance test holds.
inline double update_barrier(double mu, double eps, double E_mu, double eta_minus = 10.0) {
  return barrier_accepted(E_mu, mu, eta_minus) ? next_mu(mu, eps) : mu;
}

struct GlobalResidual {
  double E_mu = 0.0;
  double E0 = 0.0;
  double consensus = 0.0;
};

/// E = max(max_ℓ E_ℓ, ‖ΣA_ℓx_ℓ − b‖∞) for both μ and 0.
inline GlobalResidual global_residual(const std::vector<double>& E_mu, const std::vector<double>& E0,
                                      const Eigen::VectorXd& sum_Ax, const Eigen::VectorXd& b) {
  GlobalResidual r;
  r.consensus = b.size() ? (sum_Ax - b).cwiseAbs().maxCoeff() : 0.0;
  r.E_mu = r.consensus;
  r.E0 = r.consensus;
  for (double e : E_mu) r.E_mu = std::max(r.E_mu, e);
  for (double e : E0) r.E0 = std::max(r.E0, e);
  return r;
}

}  // namespace baladin::coordinate
