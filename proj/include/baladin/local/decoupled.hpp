#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "baladin/kkt/regularize.hpp"
#include "baladin/local/iterate.hpp"
#include "baladin/local/residual.hpp"
#include "baladin/model/region_problem.hpp"

namespace baladin::local {

struct DecoupledOptions {
  double tol = 1e-2;       // E^μ-type residual target
  int max_iter = 100;
  double tau_min = 0.99;
  double armijo = 1e-4;
  double kappa_sigma = 1e10;  // κ_i kept within [μ/(κΣ s_i), κΣ μ/s_i]
  kkt::RegularizationParams reg;
};

struct DecoupledResult {
  LocalIterate it;
  int iterations = 0;
  bool converged = false;
  LocalResidual residual;  // of the decoupled problem, prox term included
  std::string failure;
};

/// Decoupled objective f + λᵀA x + (ρ/2)‖x − z‖²_Σ without the barrier term.
inline double prox_objective(const model::RegionProblem& rp, const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& lambda_cpl, double rho, const Eigen::VectorXd& sigma) {
  double v = rp.eval_objective(x);
  if (rp.n_cpl() > 0) v += lambda_cpl.dot(rp.A_cpl * x);
  const Eigen::VectorXd d = x - z;
  return v + 0.5 * rho * d.dot(sigma.cwiseProduct(d));
}

inline double log_barrier(const Eigen::VectorXd& s, double mu) {
  return s.size() ? -mu * s.array().log().sum() : 0.0;
}

namespace detail {

struct Trial {
  double phi = std::numeric_limits<double>::infinity();
  double violation = 0.0;
  bool ok = false;
};

inline double l1_violation(const model::RegionProblem& rp, const Eigen::VectorXd& x, const Eigen::VectorXd& s) {
  double v = 0.0;
  if (rp.n_eq() > 0) v += rp.eval_eq(x).lpNorm<1>();
  if (rp.n_ineq() > 0) v += (rp.eval_ineq(x) + s).lpNorm<1>();
  return v;
}

}  // namespace detail

/**
 * Damped primal-dual Newton method for the region's barrier subproblem
 *
 *   min f(x) + λᵀA x + (ρ/2)‖x − z‖²_Σ − μ Σ ln s
 *   s.t. c^E(x) = 0, c^I(x) + s = 0.
 *
 * Steps come from the condensed system [[H + ρΣ + δˣI, Jᵀ], [J, −δᵞI]] with
 * inertia correction, an ℓ1 merit Armijo backtracking on (x, s) and separate
 * fraction-to-boundary lengths for the slacks and κ. Starts from `warm`;
 * returns with `converged = false` at the iteration cap.
 */
inline DecoupledResult solve_decoupled(const model::RegionProblem& rp, const Eigen::VectorXd& z,
                                       const Eigen::VectorXd& lambda_cpl, double rho, double mu,
                                       const Eigen::VectorXd& sigma, const LocalIterate& warm,
                                       const DecoupledOptions& opt = {}) {
  DecoupledResult res;
  LocalIterate it = warm;
  if (it.x.size() != rp.nx) it.x = z;
  if (it.gamma.size() != rp.n_eq()) it.gamma = Eigen::VectorXd::Zero(rp.n_eq());
  if (it.s.size() != rp.n_ineq() || it.kappa.size() != rp.n_ineq() || !it.positive())
    init_slacks(rp.eval_ineq(it.x), mu, it.s, it.kappa);

  const Eigen::VectorXd lin_cpl = rp.consensus_gradient(lambda_cpl);
  const double tau = tau_rule(mu, opt.tau_min);
  double nu = 1.0;
  double delta_last = 0.0;

  auto merit = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& s) {
    detail::Trial t;
    if (s.size() && !(s.minCoeff() > 0.0)) return t;
    const double viol = detail::l1_violation(rp, x, s);
    const double phi = prox_objective(rp, x, z, lambda_cpl, rho, sigma) + log_barrier(s, mu) + nu * viol;
    if (!std::isfinite(phi)) return t;
    t.phi = phi;
    t.violation = viol;
    t.ok = true;
    return t;
  };

  for (int k = 0;; ++k) {
    model::Derivatives d;
    try {
      d = model::eval_derivatives(rp, it.x, it.s, it.kappa, it.gamma,
                                  lin_cpl + rho * sigma.cwiseProduct(it.x - z));
    } catch (const model::EvaluationError& e) {
      res.failure = e.what();
      break;
    }
    res.residual = local::detail::assemble_residual(d.grad_lagrangian, it.s, it.kappa, d.c_eq, d.c_ineq, mu,
                                                    residual_scaling(lambda_cpl, it.gamma, it.kappa));
    res.iterations = k;
    if (res.residual.E_mu <= opt.tol) {
      res.converged = true;
      break;
    }
    if (k >= opt.max_iter) {
      res.failure = "inner iteration limit";
      break;
    }

    Eigen::MatrixXd H = d.H;
    H.diagonal() += rho * sigma;
    auto rf = kkt::factor_with_inertia(H, d.J, mu, delta_last, opt.reg);
    if (!rf.ok) {
      res.failure = "inertia correction failed";
      break;
    }
    Eigen::VectorXd rhs(rp.nx + rp.n_eq());
    rhs.head(rp.nx) = d.g(mu);
    rhs.tail(rp.n_eq()) = d.c_eq;
    const Eigen::VectorXd step = -rf.factor.solve(rhs);
    const Eigen::VectorXd dx = step.head(rp.nx);
    const Eigen::VectorXd dgamma = step.tail(rp.n_eq());
    Eigen::VectorXd ds = -d.c_ineq - it.s;
    if (rp.n_ineq() > 0) ds -= d.R * dx;
    const Eigen::VectorXd dkappa =
        -it.kappa + it.s.cwiseInverse().cwiseProduct((mu - it.kappa.cwiseProduct(ds).array()).matrix());

    const double alpha_p = fraction_to_boundary(it.s, ds, tau);
    const double alpha_d = fraction_to_boundary(it.kappa, dkappa, tau);

    // directional derivative of the barrier objective; the Newton step zeroes
    // the linearized violation, so the penalty part contributes −ν‖c‖₁
    Eigen::VectorXd grad_x = rp.objective_gradient(it.x) + lin_cpl + rho * sigma.cwiseProduct(it.x - z);
    double dphi = grad_x.dot(dx);
    if (rp.n_ineq() > 0) dphi -= mu * it.s.cwiseInverse().dot(ds);
    const double viol0 = detail::l1_violation(rp, it.x, it.s);
    const double curv = std::max(0.0, dx.dot(H * dx));
    double nu_need = 0.0;
    if (viol0 > 0.0) nu_need = (dphi + 0.5 * curv) / (0.9 * viol0);
    double ymax = 0.0;
    if (rp.n_eq() > 0) ymax = std::max(ymax, (it.gamma + dgamma).cwiseAbs().maxCoeff());
    if (rp.n_ineq() > 0) ymax = std::max(ymax, (it.kappa + dkappa).cwiseAbs().maxCoeff());
    nu_need = std::max(nu_need, ymax);
    if (nu < nu_need) nu = std::max(2.0 * nu, nu_need * 1.01 + 1.0);
    const double D = dphi - nu * viol0;

    const detail::Trial cur = merit(it.x, it.s);
    // merit changes below roundoff carry no information near the solution
    const double slack_phi = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(cur.phi));
    double alpha = alpha_p;
    Eigen::VectorXd xt, st;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      xt = it.x + alpha * dx;
      st = it.s + alpha * ds;
      const detail::Trial t = merit(xt, st);
      if (t.ok && t.phi <= cur.phi + opt.armijo * alpha * std::min(D, 0.0) + slack_phi) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // keep moving with the shortest tried step rather than stalling
      if (!(st.size() == 0 || st.minCoeff() > 0.0)) {
        res.failure = "line search failed";
        break;
      }
    }
    it.x = xt;
    it.s = st;
    it.gamma += alpha * dgamma;
    it.kappa += alpha_d * dkappa;
    for (Eigen::Index i = 0; i < it.kappa.size(); ++i) {
      const double lo = mu / (opt.kappa_sigma * it.s[i]);
      const double hi = opt.kappa_sigma * mu / it.s[i];
      it.kappa[i] = std::clamp(it.kappa[i], lo, hi);
    }
  }
  res.it = std::move(it);
  return res;
}

}  // namespace baladin::local
