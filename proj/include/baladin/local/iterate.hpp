#pragma once

#include <algorithm>
#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace baladin::local {

/// Primal-dual iterate of one region; s and κ stay strictly positive.
struct LocalIterate {
  Eigen::VectorXd x;
  Eigen::VectorXd s;
  Eigen::VectorXd gamma;
  Eigen::VectorXd kappa;

  bool positive() const {
    return (s.size() == 0 || s.minCoeff() > 0.0) && (kappa.size() == 0 || kappa.minCoeff() > 0.0);
  }
};

/// τ = max(τ_min, 1 − μ).
inline double tau_rule(double mu, double tau_min = 0.99) { return std::max(tau_min, 1.0 - mu); }

/// Largest β ∈ (0, 1] with v + β·dv ≥ (1 − τ)·v, for v > 0.
inline double fraction_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, double tau) {
  double beta = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) beta = std::min(beta, -tau * v[i] / dv[i]);
  return beta;
}

/// (β^p, β^d) from the slack and multiplier steps.
inline std::pair<double, double> step_lengths(const Eigen::VectorXd& s, const Eigen::VectorXd& ds,
                                              const Eigen::VectorXd& kappa, const Eigen::VectorXd& dkappa,
                                              double tau) {
  return {fraction_to_boundary(s, ds, tau), fraction_to_boundary(kappa, dkappa, tau)};
}

/// Slack and multiplier initialization at x: s = max(−c^I, 10⁻²·max(1, |c^I|)), κ = μ/s.
inline void init_slacks(const Eigen::VectorXd& c_ineq, double mu, Eigen::VectorXd& s, Eigen::VectorXd& kappa) {
  s.resize(c_ineq.size());
  kappa.resize(c_ineq.size());
  for (Eigen::Index i = 0; i < c_ineq.size(); ++i) {
    s[i] = std::max(-c_ineq[i], 1e-2 * std::max(1.0, std::abs(c_ineq[i])));
    kappa[i] = mu / s[i];
  }
}

}  // namespace baladin::local
