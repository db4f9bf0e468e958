#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "baladin/kkt/condense.hpp"
#include "baladin/local/decoupled.hpp"
#include "baladin/local/payload.hpp"
#include "baladin/local/residual.hpp"
#include "baladin/local/step.hpp"
#include "baladin/model/region_problem.hpp"

namespace baladin::local {

enum class KappaStep { Dual, Primal };

struct AgentOptions {
  double tau_min = 0.99;
  double eta_minus = 10.0;  // inner tolerance is η⁻μ/10
  int inner_max_iter = 100;
  KappaStep kappa_step = KappaStep::Dual;
  kkt::RegularizationParams reg;
};

/**
 * State and per-iteration work of one region. Interaction happens only
 * through the payload types of payload.hpp.
 */
class RegionAgent {
 public:
  RegionAgent(model::RegionProblem rp, Eigen::VectorXd z0, double mu0, AgentOptions opt = {})
      : rp_(std::move(rp)), opt_(opt), z_(std::move(z0)), mu_(mu0) {
    if (z_.size() != rp_.nx) throw std::invalid_argument("initial point has wrong dimension");
    sigma_ = Eigen::VectorXd::Ones(rp_.nx);
    lambda_ = Eigen::VectorXd::Zero(rp_.n_cpl());
    warm_.x = z_;
    warm_.gamma = Eigen::VectorXd::Zero(rp_.n_eq());
    init_slacks(rp_.eval_ineq(z_), mu0, warm_.s, warm_.kappa);
    s_z_ = warm_.s;
  }

  int region() const { return rp_.region; }
  const model::RegionProblem& problem() const { return rp_; }

  CondensedBlock handle(const SolveRequest& req) {
    mu_ = req.mu;
    rho_ = req.rho;
    DecoupledOptions dopt;
    dopt.tol = opt_.eta_minus * mu_ / 10.0;
    dopt.max_iter = opt_.inner_max_iter;
    dopt.tau_min = opt_.tau_min;
    dopt.reg = opt_.reg;
    LocalIterate start = warm_;
    start.x = z_;
    const auto t0 = Clock::now();
    auto res = solve_decoupled(rp_, z_, lambda_, rho_, mu_, sigma_, start, dopt);
    cur_ = std::move(res.it);
    inner_iterations_ = res.iterations;
    inner_converged_ = res.converged;
    const auto t1 = Clock::now();
    try {
      residual_ = local_residual(rp_, cur_, lambda_, mu_);
      kkt_ = prepare_kkt(rp_, cur_, lambda_);
    } catch (const model::EvaluationError&) {
      failed_ = true;
      return failed_block();
    }
    failed_ = false;
    auto b = condense(0.0, 0.0);
    b.t_solve = seconds(t0, t1);
    b.t_condense = seconds(t1, Clock::now());
    return b;
  }

  CondensedBlock handle(const CorrectionRound& req) {
    if (failed_) return failed_block();
    const auto t0 = Clock::now();
    auto b = condense(req.delta_x, req.delta_gamma);
    b.t_condense = seconds(t0, Clock::now());
    return b;
  }

  StepUp handle(const DualDown& req) {
    const auto t0 = Clock::now();
    mu_ = req.mu;
    if (failed_) return {rp_.region, 0.0, 0.0, 0.0};
    step_ = recover_step(ctx_, kkt_, req.dlambda, cur_, mu_);
    dlambda_ = req.dlambda;
    const double tau = tau_rule(mu_, opt_.tau_min);
    auto [bp, bd] = step_lengths(cur_.s, step_.ds, cur_.kappa, step_.dkappa, tau);
    beta_p_ = bp;
    beta_d_ = bd;
    return {rp_.region, bp, bd, seconds(t0, Clock::now())};
  }

  MeritReport handle(const MeritRequest& req) {
    MeritReport m;
    m.region = rp_.region;
    m.at_z = merit_point(z_, s_z_);
    m.at_x = merit_point(cur_.x, cur_.s);
    m.at_trial = merit_point(cur_.x + req.beta_p * step_.dx, cur_.s + req.beta_p * step_.ds);
    const Eigen::VectorXd d = cur_.x - z_;
    m.prox = 0.5 * rho_ * d.dot(sigma_.cwiseProduct(d));
    return m;
  }

  /// Dual function value at λ + α₃Δλ: the decoupled barrier problem re-solved at z.
  DualEvalReport handle(const DualEvalRequest& req) {
    const Eigen::VectorXd lam = lambda_ + req.alpha3 * dlambda_;
    DecoupledOptions dopt;
    dopt.tol = opt_.eta_minus * mu_ / 10.0;
    dopt.max_iter = opt_.inner_max_iter;
    dopt.tau_min = opt_.tau_min;
    dopt.reg = opt_.reg;
    auto res = solve_decoupled(rp_, z_, lam, rho_, mu_, sigma_, cur_, dopt);
    DualEvalReport r;
    r.region = rp_.region;
    r.value = prox_objective(rp_, res.it.x, z_, lam, rho_, sigma_) + log_barrier(res.it.s, mu_);
    return r;
  }

  void handle(const StepSync& req) {
    const double a2b = req.alpha2 * req.beta_p;
    const double kb = opt_.kappa_step == KappaStep::Dual ? req.alpha2 * beta_d_ : a2b;
    z_ = z_ + req.alpha1 * (cur_.x - z_) + a2b * step_.dx;
    warm_.s = cur_.s + a2b * step_.ds;
    warm_.kappa = cur_.kappa + kb * step_.dkappa;
    warm_.gamma = cur_.gamma + a2b * step_.dgamma;
    warm_.x = z_;
    s_z_ = warm_.s;
    if (rp_.n_cpl() > 0) lambda_ += req.lambda_step * dlambda_;
  }

  // read-only views for audits and reports
  const LocalIterate& decoupled() const { return cur_; }
  const LocalIterate& warm() const { return warm_; }
  const Eigen::VectorXd& z() const { return z_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  const LocalResidual& residual() const { return residual_; }
  const LocalKkt& kkt() const { return kkt_; }
  const LocalStep& step() const { return step_; }
  const kkt::CondenseContext& context() const { return ctx_; }
  const Eigen::MatrixXd& hbar() const { return hbar_; }
  double beta_d() const { return beta_d_; }
  double mu() const { return mu_; }

 private:
  using Clock = std::chrono::steady_clock;
  static double seconds(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  }

  CondensedBlock condense(double dx, double dg) {
    auto c = condense_local(kkt_, dx, dg, &ctx_, &hbar_);
    CondensedBlock b;
    b.region = rp_.region;
    b.inertia = c.inertia;
    b.singular = c.singular;
    b.W = std::move(c.W);
    b.h0 = std::move(c.h0);
    b.h_mu = std::move(c.h_mu);
    b.Ax = kkt_.Ax;
    b.E_mu = residual_.E_mu;
    b.E0 = residual_.E0;
    b.objective = rp_.eval_objective(cur_.x);
    const MeritPoint mp = merit_point(cur_.x, cur_.s);
    b.eq_violation = rp_.n_eq() ? kkt_.d.c_eq.lpNorm<1>() : 0.0;
    b.ineq_violation = mp.violation - b.eq_violation;
    b.inner_iterations = inner_iterations_;
    b.inner_converged = inner_converged_;
    if (b.singular) {
      b.W = Eigen::MatrixXd::Zero(rp_.n_cpl(), rp_.n_cpl());
      b.h0 = Eigen::VectorXd::Zero(rp_.n_cpl());
      b.h_mu = Eigen::VectorXd::Zero(rp_.n_cpl());
    }
    return b;
  }

  /// Block reported when the decoupled point cannot be evaluated.
  CondensedBlock failed_block() const {
    CondensedBlock b;
    b.region = rp_.region;
    b.singular = true;
    b.W = Eigen::MatrixXd::Zero(rp_.n_cpl(), rp_.n_cpl());
    b.h0 = Eigen::VectorXd::Zero(rp_.n_cpl());
    b.h_mu = Eigen::VectorXd::Zero(rp_.n_cpl());
    b.Ax = Eigen::VectorXd::Zero(rp_.n_cpl());
    b.E_mu = b.E0 = std::numeric_limits<double>::infinity();
    b.inner_iterations = inner_iterations_;
    b.inner_converged = false;
    return b;
  }

  MeritPoint merit_point(const Eigen::VectorXd& x, const Eigen::VectorXd& s) const {
    MeritPoint p;
    p.objective = rp_.eval_objective(x);
    if (rp_.n_eq() > 0) p.violation += rp_.eval_eq(x).lpNorm<1>();
    if (rp_.n_ineq() > 0) p.violation += (rp_.eval_ineq(x) + s).lpNorm<1>();
    p.Ax = rp_.consensus_value(x);
    return p;
  }

  model::RegionProblem rp_;
  AgentOptions opt_;
  Eigen::VectorXd sigma_;
  Eigen::VectorXd z_;
  Eigen::VectorXd s_z_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd dlambda_;
  LocalIterate warm_;
  LocalIterate cur_;
  LocalResidual residual_;
  LocalKkt kkt_;
  kkt::CondenseContext ctx_;
  Eigen::MatrixXd hbar_;
  LocalStep step_;
  double mu_ = 0.1;
  double rho_ = 100.0;
  double beta_p_ = 1.0;
  double beta_d_ = 1.0;
  int inner_iterations_ = 0;
  bool inner_converged_ = true;
  bool failed_ = false;
};

}  // namespace baladin::local
