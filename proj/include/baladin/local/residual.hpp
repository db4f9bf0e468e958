#pragma once

#include <algorithm>

#include <Eigen/Dense>

#include "baladin/local/iterate.hpp"
#include "baladin/model/region_problem.hpp"

namespace baladin::local {

/// s^d = max(s_max, mean |multiplier|)/s_max over (λ_ℓ, γ, κ); s^c the same over κ only.
struct ResidualScaling {
  double sd = 1.0;
  double sc = 1.0;
};

inline ResidualScaling residual_scaling(const Eigen::VectorXd& lambda_cpl, const Eigen::VectorXd& gamma,
                                        const Eigen::VectorXd& kappa, double s_max = 100.0) {
  ResidualScaling sc;
  const double count = static_cast<double>(lambda_cpl.size() + gamma.size() + kappa.size());
  if (count > 0) {
    const double sum = lambda_cpl.lpNorm<1>() + gamma.lpNorm<1>() + kappa.lpNorm<1>();
    sc.sd = std::max(s_max, sum / count) / s_max;
  }
  if (kappa.size() > 0) sc.sc = std::max(s_max, kappa.lpNorm<1>() / static_cast<double>(kappa.size())) / s_max;
  return sc;
}

struct LocalResidual {
  double E_mu = 0.0;
  double E0 = 0.0;
  double stationarity = 0.0;  // unscaled ‖∇L + Aᵀλ‖∞
  double complementarity_mu = 0.0;
  double complementarity0 = 0.0;
  double feasibility = 0.0;
  ResidualScaling scaling;
};

namespace detail {

inline double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline LocalResidual assemble_residual(const Eigen::VectorXd& grad, const Eigen::VectorXd& s,
                                       const Eigen::VectorXd& kappa, const Eigen::VectorXd& c_eq,
                                       const Eigen::VectorXd& c_ineq, double mu, const ResidualScaling& sc) {
  LocalResidual r;
  r.scaling = sc;
  r.stationarity = inf_norm(grad);
  const Eigen::VectorXd sk = s.cwiseProduct(kappa);
  r.complementarity_mu = inf_norm((sk.array() - mu).matrix());
  r.complementarity0 = inf_norm(sk);
  r.feasibility = std::max(inf_norm(c_eq), inf_norm(c_ineq + s));
  r.E_mu = std::max({r.stationarity / sc.sd, r.complementarity_mu / sc.sc, r.feasibility});
  r.E0 = std::max({r.stationarity / sc.sd, r.complementarity0 / sc.sc, r.feasibility});
  return r;
}

}  // namespace detail

/**
 * Decoupled optimality residuals E^μ_ℓ and E^0_ℓ at an iterate, with stationarity
 * measured on ∇f + Jᵀγ + Rᵀκ + A_ℓᵀλ.
 */
inline LocalResidual local_residual(const model::RegionProblem& rp, const LocalIterate& it,
                                    const Eigen::VectorXd& lambda_cpl, double mu) {
  Eigen::VectorXd grad = rp.objective_gradient(it.x);
  if (rp.n_eq() > 0) grad += rp.jac_eq(it.x).transpose() * it.gamma;
  if (rp.n_ineq() > 0) grad += rp.jac_ineq(it.x).transpose() * it.kappa;
  grad += rp.consensus_gradient(lambda_cpl);
  return detail::assemble_residual(grad, it.s, it.kappa, rp.eval_eq(it.x), rp.eval_ineq(it.x), mu,
                                   residual_scaling(lambda_cpl, it.gamma, it.kappa));
}

}  // namespace baladin::local
