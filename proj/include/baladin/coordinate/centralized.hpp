#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "baladin/coordinate/barrier.hpp"
#include "baladin/coordinate/options.hpp"
#include "baladin/coordinate/solution.hpp"
#include "baladin/kkt/condense.hpp"
#include "baladin/kkt/ldl.hpp"
#include "baladin/kkt/regularize.hpp"
#include "baladin/local/decoupled.hpp"
#include "baladin/local/iterate.hpp"
#include "baladin/local/residual.hpp"
#include "baladin/local/step.hpp"
#include "baladin/model/opf_builder.hpp"
#include "baladin/partition/consensus.hpp"

namespace baladin::coordinate {

/// Per-iteration state exposed by the centralized loop for audits.
struct CentralizedAudit {
  int iteration = 0;
  double mu_next = 0.0;
  const model::RegionProblem* problem = nullptr;
  const local::LocalIterate* decoupled = nullptr;
  const Eigen::MatrixXd* hbar = nullptr;
  const local::LocalStep* step = nullptr;
  const Eigen::VectorXd* z = nullptr;  // after the update
  const local::LocalIterate* next = nullptr;  // warm start after the update
};

/**
 * Barrier-Newton method on the whole network as one problem.
 *
 * Uses the same proximal subproblem, barrier schedule, fraction-to-boundary
 * rule, inertia correction on [[H, Jᵀ], [J, 0]] with target (N^x, N^E, 0) and
 * update rules as the distributed driver, but assembles and solves the full
 * Newton system directly with no consensus rows.
 */
inline Solution centralized_solve(const netio::PowerNetwork& net, const SolverOptions& opt = {},
                                  const std::function<void(const CentralizedAudit&)>& observer = {}) {
  opt.validate();
  Solution sol;
  if (auto why = empty_interior(net); !why.empty()) {
    sol.status = Status::InfeasibleDiagnostic;
    sol.diagnostic = why;
    return sol;
  }
  const partition::Partition part =
      partition::build_consensus(net, partition::RegionAssignment{std::vector<int>(net.buses.size(), 0), 1});
  const model::RegionProblem rp = model::build_region_problem(net, part, 0);
  const Eigen::VectorXd no_lambda = Eigen::VectorXd::Zero(0);
  const Eigen::VectorXd sigma = Eigen::VectorXd::Ones(rp.nx);
  const int nx = rp.nx, ne = rp.n_eq();

  Eigen::VectorXd z = model::flat_start(net, part.regions[0]);
  local::LocalIterate warm;
  warm.x = z;
  warm.gamma = Eigen::VectorXd::Zero(ne);
  local::init_slacks(rp.eval_ineq(z), opt.mu0, warm.s, warm.kappa);
  Eigen::VectorXd s_z = warm.s;

  double mu = opt.mu0;
  double delta_last = 0.0;
  Mode mode = opt.mode;
  double E0_first = -1.0;
  double E0_prev = std::numeric_limits<double>::infinity();
  double obj_prev = std::numeric_limits<double>::quiet_NaN();
  int increases = 0, stagnant = 0;
  local::LocalIterate cur;

  local::DecoupledOptions dopt;
  dopt.max_iter = opt.inner_max_iter;
  dopt.tau_min = opt.tau_min;
  dopt.reg = opt.reg;

  auto violation = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& s) {
    double v = 0.0;
    if (ne > 0) v += rp.eval_eq(x).lpNorm<1>();
    if (rp.n_ineq() > 0) v += (rp.eval_ineq(x) + s).lpNorm<1>();
    return v;
  };

  for (int k = 0;; ++k) {
    IterationRecord rec;
    rec.iteration = k;
    rec.mu = mu;
    rec.mode = mode;

    dopt.tol = opt.eta_minus * mu / 10.0;
    local::LocalIterate start = warm;
    start.x = z;
    auto res = local::solve_decoupled(rp, z, no_lambda, opt.rho, mu, sigma, start, dopt);
    cur = std::move(res.it);
    rec.inner_iterations = res.iterations;
    rec.inner_converged = res.converged;
    const auto lr = local::local_residual(rp, cur, no_lambda, mu);
    const double objective = rp.eval_objective(cur.x);
    rec.E_mu = lr.E_mu;
    rec.E0 = lr.E0;
    rec.objective = objective;
    sol.objective = objective;
    sol.E0 = lr.E0;
    sol.mu = mu;

    StateHash hash;
    hash.add(mu);
    hash.add(lr.E_mu);
    hash.add(lr.E0);
    hash.add(objective);
    auto close = [&](Status s, std::string why = {}) {
      rec.hash = hash.value();
      sol.records.push_back(rec);
      sol.status = s;
      sol.diagnostic = std::move(why);
    };

    if (!std::isfinite(lr.E0) || !std::isfinite(objective)) {
      close(Status::Diverged, "non-finite residual or objective");
      break;
    }
    if (E0_first < 0.0) E0_first = lr.E0;
    if (lr.E0 <= opt.eps) {
      close(Status::Optimal);
      break;
    }
    if (lr.E0 > opt.divergence_factor * std::max(E0_first, opt.eps)) {
      close(Status::Diverged, "E0 exceeded the divergence threshold");
      break;
    }
    if (k >= opt.max_iter) {
      close(Status::IterationCap);
      break;
    }
    if (std::isfinite(obj_prev)) {
      const double rel = std::abs(objective - obj_prev) / std::max(1.0, std::abs(obj_prev));
      stagnant = rel < opt.stagnation_rel ? stagnant + 1 : 0;
    }
    obj_prev = objective;
    if (stagnant >= opt.stagnation_window) {
      close(Status::Stagnation, "relative objective change below threshold");
      break;
    }
    increases = lr.E0 > E0_prev ? increases + 1 : 0;
    E0_prev = lr.E0;
    if (opt.auto_globalize && mode == Mode::FullStep && increases >= opt.fallback_window) {
      mode = Mode::Globalized;
      rec.mode = mode;
    }
    const double mu_next = update_barrier(mu, opt.eps, lr.E_mu, opt.eta_minus);
    rec.barrier_updated = mu_next < mu;

    // monolithic Newton system with inertia correction
    const model::Derivatives d = model::eval_derivatives(rp, cur.x, cur.s, cur.kappa, cur.gamma);
    const kkt::Inertia want{nx, ne, 0};
    Eigen::MatrixXd K = kkt::build_hbar(d.H, d.J, 0.0, 0.0);
    kkt::LdlFactor f(K);
    double dx = 0.0, dg = 0.0;
    if (!(f.inertia() == want)) {
      auto [d0, eta] = kkt::initial_delta(delta_last, opt.reg);
      dx = d0;
      int rounds = 0;
      bool ok = false;
      while (true) {
        if (f.inertia().zero > 0) dg = opt.reg.delta_gamma_factor * mu;
        if (rounds == opt.reg.max_rounds) break;
        ++rounds;
        K = kkt::build_hbar(d.H, d.J, dx, dg);
        f.factor(K);
        if (f.inertia() == want) {
          ok = true;
          break;
        }
        dx *= eta;
      }
      rec.correction_rounds = rounds;
      if (!ok) {
        close(Status::Diverged, "inertia correction exceeded " + std::to_string(opt.reg.max_rounds) + " rounds");
        break;
      }
      delta_last = dx;
    }
    rec.delta_x = dx;
    rec.delta_gamma = dg;

    Eigen::VectorXd rhs(nx + ne);
    rhs.head(nx) = d.g(mu_next);
    rhs.tail(ne) = d.c_eq;
    const Eigen::VectorXd sol_xg = -f.solve(rhs);
    local::LocalKkt lk;
    lk.d = d;
    local::LocalStep st;
    st.dx = sol_xg.head(nx);
    st.dgamma = sol_xg.tail(ne);
    local::slack_dual_steps(lk, cur, mu_next, st);
    const double tau = local::tau_rule(mu_next, opt.tau_min);
    auto [beta_p, beta_d] = local::step_lengths(cur.s, st.ds, cur.kappa, st.dkappa, tau);

    double a1 = 1.0, a2 = 1.0, a3 = 1.0;
    if (mode == Mode::Globalized) {
      const double pen = 10.0;
      auto phi = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& s) {
        return rp.eval_objective(x) + pen * violation(x, s);
      };
      const Eigen::VectorXd dz = cur.x - z;
      const double prox = 0.5 * opt.rho * dz.dot(sigma.cwiseProduct(dz));
      const double model_decrease = opt.merit_eta * prox;
      const double phi_z = phi(z, s_z);
      if (phi_z - phi(cur.x + beta_p * st.dx, cur.s + beta_p * st.ds) >= model_decrease) {
        rec.stage = 'a';
      } else if (phi_z - phi(cur.x, cur.s) >= model_decrease) {
        rec.stage = 'b';
        a2 = a3 = 0.0;
      } else {
        // no dual variables to move: the grid search has a flat objective and keeps α₃ = 1
        rec.stage = 'c';
        a1 = a2 = 0.0;
        a3 = 1.0;
      }
    }

    const double a2b = a2 * beta_p;
    const double kb = opt.kappa_step == local::KappaStep::Dual ? a2 * beta_d : a2b;
    z = z + a1 * (cur.x - z) + a2b * st.dx;
    warm.s = cur.s + a2b * st.ds;
    warm.kappa = cur.kappa + kb * st.dkappa;
    warm.gamma = cur.gamma + a2b * st.dgamma;
    warm.x = z;
    s_z = warm.s;

    rec.alpha1 = a1;
    rec.alpha2 = a2;
    rec.alpha3 = a3;
    rec.beta_p = beta_p;
    rec.beta_d = beta_d;
    hash.add(Eigen::VectorXd(0));
    hash.add(beta_p);
    hash.add(beta_d);
    hash.add(dx);
    rec.hash = hash.value();
    sol.records.push_back(rec);
    sol.iterations = k + 1;

    if (observer) {
      CentralizedAudit a;
      a.iteration = k;
      a.mu_next = mu_next;
      a.problem = &rp;
      a.decoupled = &cur;
      a.hbar = &K;
      a.step = &st;
      a.z = &z;
      a.next = &warm;
      observer(a);
    }
    mu = mu_next;
  }

  sol.regions = {cur};
  sol.lambda = Eigen::VectorXd::Zero(0);
  std::vector<int> ne_v{ne};
  const Layout L = make_layout(part, ne_v);
  sol.certificate = certify({rp}, sol.regions, L, sol.lambda, sol.mu, opt.eps);
  if (sol.status == Status::Optimal && !sol.certificate.verified) {
    sol.status = Status::Diverged;
    sol.diagnostic = "independent residual pass did not confirm the certificate";
  }
  return sol;
}

}  // namespace baladin::coordinate
