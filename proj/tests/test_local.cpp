#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "baladin/coordinate/direct.hpp"
#include "baladin/local/agent.hpp"
#include "baladin/local/decoupled.hpp"
#include "baladin/local/residual.hpp"
#include "baladin/local/step.hpp"
#include "baladin/partition/partitioner.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace baladin;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

model::ConstraintRow linear_row(double constant, std::initializer_list<std::pair<int, double>> terms) {
  model::ConstraintRow c;
  c.base.constant = constant;
  for (auto [i, a] : terms) c.base.add_linear(i, a);
  return c;
}

// 1-D problem min ½x² s.t. x − 1 ≤ 0, no coupling.
model::RegionProblem bounded_scalar() {
  model::RegionProblem rp;
  rp.nx = 1;
  rp.objective.add_quad(0, 0, 0.5);
  rp.ineq.push_back(linear_row(-1.0, {{0, 1.0}}));
  rp.A_cpl = Eigen::MatrixXd::Zero(0, 1);
  rp.finalize();
  return rp;
}

}  // namespace

TEST(Decoupled, UnconstrainedProxIsShifted) {
  model::RegionProblem rp;
  rp.nx = 1;
  rp.coupled_rows = {0};
  rp.A_cpl = Eigen::MatrixXd::Ones(1, 1);
  rp.finalize();
  const double z = 0.7, lam = 3.0, rho = 20.0;
  auto res = local::solve_decoupled(rp, vec({z}), vec({lam}), rho, 0.1, vec({1.0}), {});
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.it.x[0], z - lam / rho, 1e-12);
}

TEST(Decoupled, MeetsInnerToleranceAndStaysInterior) {
  const auto rp = bounded_scalar();
  local::DecoupledOptions o;
  o.tol = 1e-9;
  auto res = local::solve_decoupled(rp, vec({0.9}), Eigen::VectorXd(0), 1.0, 1e-3, vec({1.0}), {}, o);
  ASSERT_TRUE(res.converged);
  EXPECT_LE(res.residual.E_mu, 1e-9);
  EXPECT_TRUE(res.it.positive());
}

TEST(Decoupled, TwoRegionCopiesDriftWithoutMultipliers) {
  const auto net = fixtures::two_bus();
  const auto part = fixtures::split(net, {0, 1});
  coordinate::SolverOptions opt;
  auto agents = coordinate::make_agents(net, part, opt);
  const auto L = coordinate::make_layout(part, agents);
  std::vector<Eigen::VectorXd> ax;
  for (auto& a : agents) ax.push_back(a.handle(local::SolveRequest{opt.mu0, opt.rho}).Ax);
  EXPECT_GT((coordinate::scatter_sum(L, ax) - L.b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(StepLength, ScalarFractionToBoundary) {
  auto [bp, bd] = local::step_lengths(vec({1.0}), vec({-2.0}), vec({1.0}), vec({1.0}), 0.99);
  EXPECT_NEAR(bp, 0.495, 1e-12);
  EXPECT_EQ(bd, 1.0);
}

TEST(StepLength, VectorFractionToBoundary) {
  EXPECT_NEAR(local::fraction_to_boundary(vec({1.0, 0.1}), vec({-0.5, -0.5}), 0.9), 0.18, 1e-12);
}

TEST(StepLength, NonnegativeStepIsFull) {
  EXPECT_EQ(local::fraction_to_boundary(vec({1.0, 0.1, 3.0}), vec({0.0, 2.0, 1e-9}), 0.99), 1.0);
}

TEST(StepLength, TauRule) {
  EXPECT_EQ(local::tau_rule(0.1), 0.99);
  EXPECT_DOUBLE_EQ(local::tau_rule(1e-3), 0.999);
  EXPECT_EQ(local::tau_rule(0.5, 0.6), 0.6);
}

TEST(StepLength, KeepsStrictInteriorOnRandomSteps) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> pos(1e-6, 2.0), u(-50.0, 50.0);
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd s(5), ds(5);
    for (int i = 0; i < 5; ++i) {
      s[i] = pos(rng);
      ds[i] = u(rng);
    }
    const double tau = 0.99;
    const double b = local::fraction_to_boundary(s, ds, tau);
    EXPECT_GT(b, 0.0);
    EXPECT_LE(b, 1.0);
    EXPECT_GT((s + b * ds).minCoeff(), 0.0);
    EXPECT_GE(((s + b * ds) - (1 - tau) * s).minCoeff(), -1e-15);
  }
}

TEST(Residual, ComplementarityAtBarrierPoint) {
  // x = 0, s = 1, κ = 0.1: stationary for f = −0.1x, feasible, Sκ = μ1 with μ = 0.1
  model::RegionProblem rp;
  rp.nx = 1;
  rp.objective.add_linear(0, -0.1);
  rp.ineq.push_back(linear_row(-1.0, {{0, 1.0}}));
  rp.A_cpl = Eigen::MatrixXd::Zero(0, 1);
  rp.finalize();
  local::LocalIterate it{vec({0.0}), vec({1.0}), Eigen::VectorXd(0), vec({0.1})};
  auto r = local::local_residual(rp, it, Eigen::VectorXd(0), 0.1);
  EXPECT_EQ(r.E_mu, 0.0);
  EXPECT_DOUBLE_EQ(r.E0, 0.1 / r.scaling.sc);
  EXPECT_EQ(r.scaling.sc, 1.0);
}

TEST(Residual, ScalingOnThreeVariables) {
  // f = aᵀx, x₀ + x₁ + x₂ = 0 with γ, x₀ − 1 ≤ 0 with κ, one coupled row on x₂
  model::RegionProblem rp;
  rp.nx = 3;
  rp.objective.add_linear(0, 1.0);
  rp.objective.add_linear(1, -2.0);
  rp.objective.add_linear(2, 0.5);
  rp.eq.push_back(linear_row(0.0, {{0, 1.0}, {1, 1.0}, {2, 1.0}}));
  rp.ineq.push_back(linear_row(-1.0, {{0, 1.0}}));
  rp.coupled_rows = {4};
  rp.A_cpl = Eigen::MatrixXd::Zero(1, 3);
  rp.A_cpl(0, 2) = 1.0;
  rp.finalize();
  local::LocalIterate it{vec({0.0, 0.0, 0.0}), vec({1.0}), vec({600.0}), vec({300.0})};
  const Eigen::VectorXd lam = vec({-900.0});
  auto r = local::local_residual(rp, it, lam, 300.0);
  // mean |multiplier| = (900 + 600 + 300)/3 = 600 → s^d = 6; s^c = 300/100 = 3
  EXPECT_DOUBLE_EQ(r.scaling.sd, 6.0);
  EXPECT_DOUBLE_EQ(r.scaling.sc, 3.0);
  // ∇L = (1 + 600 + 300, −2 + 600, 0.5 + 600 − 900) = (901, 598, −299.5)
  EXPECT_DOUBLE_EQ(r.stationarity, 901.0);
  EXPECT_DOUBLE_EQ(r.complementarity_mu, 0.0);
  EXPECT_DOUBLE_EQ(r.complementarity0, 300.0);
  EXPECT_DOUBLE_EQ(r.E_mu, 901.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.E0, 901.0 / 6.0);
  EXPECT_EQ(r.feasibility, 0.0);
}

TEST(Residual, SmallMultipliersLeaveScalingAtOne) {
  auto sc = local::residual_scaling(vec({1.0, -2.0}), vec({50.0}), vec({0.3}));
  EXPECT_EQ(sc.sd, 1.0);
  EXPECT_EQ(sc.sc, 1.0);
}

TEST(Recover, ZeroDualStepAndGradient) {
  local::LocalKkt k;
  k.d.H = Eigen::MatrixXd::Identity(2, 2) * 3.0;
  k.d.J = model::SparseRM(0, 2);
  std::vector<Eigen::Triplet<double>> tr{{0, 0, 1.0}, {0, 1, -1.0}};
  k.d.R = model::SparseRM(1, 2);
  k.d.R.setFromTriplets(tr.begin(), tr.end());
  k.Abar = Eigen::MatrixXd::Ones(1, 2);
  k.gbar0 = Eigen::VectorXd::Zero(2);
  k.gbar_mu = Eigen::VectorXd::Zero(2);
  k.Ax = vec({0.0});
  kkt::CondenseContext ctx;
  local::condense_local(k, 0.0, 0.0, &ctx);
  const double mu = 0.05;
  local::LocalIterate it{vec({0.1, 0.2}), vec({0.25}), Eigen::VectorXd(0), vec({2.0})};

  // slack on its constraint: Δs = 0 and Δκ = −κ + μS⁻¹1
  k.d.c_ineq = vec({-0.25});
  auto st = local::recover_step(ctx, k, vec({0.0}), it, mu);
  EXPECT_EQ(st.dx.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(st.dgamma.size(), 0);
  EXPECT_EQ(st.ds[0], 0.0);
  EXPECT_NEAR(st.dkappa[0], -2.0 + mu / 0.25, 1e-15);

  // otherwise Δs = −(c^I + s) and Δκ carries the −S⁻¹KΔs term
  k.d.c_ineq = vec({-0.4});
  st = local::recover_step(ctx, k, vec({0.0}), it, mu);
  EXPECT_NEAR(st.ds[0], 0.15, 1e-15);
  EXPECT_NEAR(st.dkappa[0], -2.0 + (mu - 2.0 * 0.15) / 0.25, 1e-14);
}

TEST(Recover, StepVanishesAtBarrierKktPoint) {
  const auto rp = bounded_scalar();
  const double mu = 0.01;
  // x + κ = 0, sκ = μ, x − 1 + s = 0  ⇒  x² − x − μ = 0
  const double x = 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * mu));
  local::LocalIterate it{vec({x}), vec({1.0 - x}), Eigen::VectorXd(0), vec({-x})};
  const auto k = local::prepare_kkt(rp, it, Eigen::VectorXd(0));
  kkt::CondenseContext ctx;
  local::condense_local(k, 0.0, 0.0, &ctx);
  auto st = local::recover_step(ctx, k, Eigen::VectorXd(0), it, mu);
  EXPECT_LT(std::abs(st.dx[0]), 1e-14);
  EXPECT_LT(std::abs(st.ds[0]), 1e-14);
  EXPECT_LT(std::abs(st.dkappa[0]), 1e-14);
}

// Recovered (Δx, Δγ) satisfy the first block row H̄Δx̄ + ĀᵀΔλ + ḡ = 0.
TEST(Recover, FirstBlockRowResidual) {
  std::mt19937 rng(11);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 50; ++t) {
    auto I = oracles::random_instance(rng, 2 + t % 2, 30);
    const double mu = 0.05;
    for (std::size_t r = 0; r < I.problems.size(); ++r) {
      const auto k = local::prepare_kkt(I.problems[r], I.points[r], I.lambda[r]);
      kkt::CondenseContext ctx;
      Eigen::MatrixXd Hbar;
      local::condense_local(k, 0.0, 0.0, &ctx, &Hbar);
      Eigen::VectorXd dl(I.problems[r].n_cpl());
      for (Eigen::Index i = 0; i < dl.size(); ++i) dl[i] = n01(rng);
      auto st = local::recover_step(ctx, k, dl, I.points[r], mu);
      Eigen::VectorXd xbar(st.dx.size() + st.dgamma.size());
      xbar << st.dx, st.dgamma;
      const Eigen::VectorXd res = Hbar * xbar + k.Abar.transpose() * dl + k.gbar0 + mu * k.gbar_mu;
      EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-8) << "trial " << t << " region " << r;
    }
  }
}

// The stacked recovered steps with the coordination step reproduce the
// unreduced Newton direction on an 8-variable instance.
TEST(Recover, StackedStepMatchesFullNewtonDirection) {
  std::mt19937 rng(8);
  auto I = oracles::random_instance(rng, 2, 8);
  const double mu = 0.03;
  std::vector<local::CondensedBlock> blocks;
  std::vector<kkt::CondenseContext> ctx(I.problems.size());
  std::vector<local::LocalKkt> kk;
  for (std::size_t r = 0; r < I.problems.size(); ++r) {
    kk.push_back(local::prepare_kkt(I.problems[r], I.points[r], I.lambda[r]));
    auto c = local::condense_local(kk.back(), 0.0, 0.0, &ctx[r]);
    local::CondensedBlock b;
    b.W = c.W;
    b.h0 = c.h0;
    b.h_mu = c.h_mu;
    blocks.push_back(b);
  }
  auto cr = coordinate::coordination_solve(coordinate::assemble_W(I.layout, blocks),
                                           coordinate::assemble_h(I.layout, blocks, mu));
  const auto ref = oracles::monolithic_step(I, mu);
  EXPECT_LE((cr.dlambda - ref.dlambda).cwiseAbs().maxCoeff(), 1e-8);
  for (std::size_t r = 0; r < I.problems.size(); ++r) {
    auto st = local::recover_step(ctx[r], kk[r], coordinate::restrict_rows(cr.dlambda, I.layout.coupled_rows[r]),
                                  I.points[r], mu);
    EXPECT_LE((st.dx - ref.dx[r]).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((st.ds - ref.ds[r]).cwiseAbs().maxCoeff(), 1e-8);
    if (st.dgamma.size()) EXPECT_LE((st.dgamma - ref.dgamma[r]).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((st.dkappa - ref.dkappa[r]).cwiseAbs().maxCoeff(), 1e-8);
  }
}

// Re-solving each outer iteration's decoupled problem from the warm start
// takes no more inner iterations than from a cold start at the same z.
class WarmStart : public ::testing::TestWithParam<int> {};

TEST_P(WarmStart, NotSlowerThanColdStart) {
  const auto net = fixtures::load_case(GetParam());
  const auto part = fixtures::graph_split(net, 2);
  coordinate::SolverOptions opt;
  int checked = 0, warm_total = 0, cold_total = 0;
  auto obs = [&](const coordinate::IterationAudit& a, const coordinate::DirectChannel& ch) {
    local::DecoupledOptions dopt;
    dopt.tol = opt.eta_minus * a.mu_next / 10.0;
    dopt.max_iter = opt.inner_max_iter;
    for (const auto& ag : ch.agents()) {
      const Eigen::VectorXd sigma = Eigen::VectorXd::Ones(ag.problem().nx);
      local::LocalIterate warm = ag.warm();
      auto w = local::solve_decoupled(ag.problem(), ag.z(), ag.lambda(), opt.rho, a.mu_next, sigma, warm, dopt);
      local::LocalIterate cold;
      cold.x = ag.z();
      auto c = local::solve_decoupled(ag.problem(), ag.z(), ag.lambda(), opt.rho, a.mu_next, sigma, cold, dopt);
      EXPECT_LE(w.iterations, c.iterations) << "iteration " << a.iteration + 1 << " region " << ag.region();
      warm_total += w.iterations;
      cold_total += c.iterations;
      ++checked;
    }
  };
  auto sol = coordinate::baladin_solve(net, part, opt, obs);
  EXPECT_EQ(sol.status, coordinate::Status::Optimal);
  EXPECT_GT(checked, 0);
  EXPECT_LT(warm_total, cold_total);
}

INSTANTIATE_TEST_SUITE_P(Cases, WarmStart, ::testing::Values(14, 30));
