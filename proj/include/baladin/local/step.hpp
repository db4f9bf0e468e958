#pragma once

#include <Eigen/Dense>

#include "baladin/kkt/condense.hpp"
#include "baladin/local/iterate.hpp"
#include "baladin/model/region_problem.hpp"

namespace baladin::local {

/// Curvature data of one region at its decoupled solution.
struct LocalKkt {
  model::Derivatives d;
  Eigen::MatrixXd Abar;  // [A_ℓ 0] over coupled rows
  Eigen::VectorXd gbar0;  // (g₀; c^E)
  Eigen::VectorXd gbar_mu;  // (g_μ; 0)
  Eigen::VectorXd Ax;
};

/// Evaluates derivatives with ∇L including A_ℓᵀλ, so the coordination step Δλ is an increment.
inline LocalKkt prepare_kkt(const model::RegionProblem& rp, const LocalIterate& it, const Eigen::VectorXd& lambda_cpl) {
  LocalKkt k;
  k.d = model::eval_derivatives(rp, it.x, it.s, it.kappa, it.gamma, rp.consensus_gradient(lambda_cpl));
  const int n = rp.nx + rp.n_eq();
  k.Abar = Eigen::MatrixXd::Zero(rp.n_cpl(), n);
  if (rp.n_cpl() > 0) k.Abar.leftCols(rp.nx) = rp.A_cpl;
  k.gbar0.resize(n);
  k.gbar0.head(rp.nx) = k.d.g0;
  k.gbar0.tail(rp.n_eq()) = k.d.c_eq;
  k.gbar_mu = Eigen::VectorXd::Zero(n);
  k.gbar_mu.head(rp.nx) = k.d.g_mu;
  k.Ax = rp.consensus_value(it.x);
  return k;
}

inline kkt::Condensed condense_local(const LocalKkt& k, double delta_x, double delta_gamma,
                                     kkt::CondenseContext* ctx = nullptr, Eigen::MatrixXd* hbar_out = nullptr) {
  Eigen::MatrixXd Hbar = kkt::build_hbar(k.d.H, k.d.J, delta_x, delta_gamma);
  auto c = kkt::condense(Hbar, k.Abar, k.gbar0, k.gbar_mu, k.Ax, ctx);
  if (hbar_out) *hbar_out = std::move(Hbar);
  return c;
}

struct LocalStep {
  Eigen::VectorXd dx;
  Eigen::VectorXd dgamma;
  Eigen::VectorXd ds;
  Eigen::VectorXd dkappa;
};

/// Slack and κ steps from Δx: Δs = −c^I − s − RΔx, Δκ = −κ + S⁻¹(μ1 − KΔs).
inline void slack_dual_steps(const LocalKkt& k, const LocalIterate& it, double mu, LocalStep& st) {
  st.ds = -k.d.c_ineq - it.s;
  if (it.s.size() > 0) st.ds -= k.d.R * st.dx;
  st.dkappa = -it.kappa + it.s.cwiseInverse().cwiseProduct((mu - it.kappa.cwiseProduct(st.ds).array()).matrix());
}

/// Primal-dual step from the retained factor: (Δx, Δγ) = −H̄⁻¹(ĀᵀΔλ + ḡ(μ)).
inline LocalStep recover_step(const kkt::CondenseContext& ctx, const LocalKkt& k, const Eigen::VectorXd& dlambda,
                              const LocalIterate& it, double mu) {
  const Eigen::VectorXd xbar = ctx.recover(dlambda, mu);
  const Eigen::Index nx = k.d.H.rows();
  LocalStep st;
  st.dx = xbar.head(nx);
  st.dgamma = xbar.tail(xbar.size() - nx);
  slack_dual_steps(k, it, mu, st);
  return st;
}

}  // namespace baladin::local
