#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "baladin/model/opf_builder.hpp"
#include "baladin/netio/admittance.hpp"
#include "baladin/partition/partitioner.hpp"
#include "fixtures.hpp"

using namespace baladin;
using namespace baladin::model;

namespace {

partition::Partition whole(const netio::PowerNetwork& net) {
  return partition::build_consensus(net, partition::RegionAssignment{std::vector<int>(net.buses.size(), 0), 1});
}

// Injections S = diag(V)·conj(Y V) from the complex bus admittance matrix.
Eigen::VectorXcd complex_injection(const netio::PowerNetwork& net, const Eigen::VectorXcd& V) {
  const int n = static_cast<int>(net.buses.size());
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  auto idx = net.bus_index();
  for (const auto& br : net.branches) {
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> t = std::polar(br.tap, br.shift);
    const std::complex<double> ytt = ys + std::complex<double>(0, br.b_charging / 2);
    const int f = idx.at(br.from), k = idx.at(br.to);
    Y(f, f) += ytt / (br.tap * br.tap);
    Y(f, k) += -ys / std::conj(t);
    Y(k, f) += -ys / t;
    Y(k, k) += ytt;
  }
  for (int i = 0; i < n; ++i) Y(i, i) += std::complex<double>(net.buses[i].g_shunt, net.buses[i].b_shunt);
  Eigen::VectorXcd I = Y * V;
  return V.cwiseProduct(I.conjugate());
}

Eigen::VectorXd random_point(const RegionProblem& rp, std::mt19937& rng, double spread = 0.2) {
  std::uniform_real_distribution<double> d(-spread, spread);
  Eigen::VectorXd x(rp.nx);
  for (int i = 0; i < rp.nx; ++i) x[i] = d(rng);
  for (std::size_t l = 0; l < rp.local_buses.size(); ++l) x[l] += 1.0;
  return x;
}

}  // namespace

TEST(Model, ObjectiveValue) {
  RegionProblem rp;
  rp.nx = 1;
  rp.objective.add_quad(0, 0, 2.0);
  rp.objective.add_linear(0, 3.0);
  rp.objective.constant = 1.0;
  rp.A_cpl.resize(0, 1);
  rp.finalize();
  Eigen::VectorXd x(1);
  x << 0.5;
  EXPECT_DOUBLE_EQ(rp.eval_objective(x), 3.0);
}

TEST(Model, TwoBusInjectionsMatchComplexOracle) {
  auto net = fixtures::two_bus();
  auto p = whole(net);
  auto rp = build_region_problem(net, p, 0);
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x = random_point(rp, rng);
    Eigen::VectorXcd V(2);
    V << std::complex<double>(x[0], x[2]), std::complex<double>(x[1], x[3]);
    auto S = complex_injection(net, V);
    Eigen::VectorXd c = rp.eval_eq(x);
    // row P_i = Σ flows + load − generation
    EXPECT_NEAR(c[0], S[0].real() + net.buses[0].p_load - x[4], 1e-12);
    EXPECT_NEAR(c[1], S[0].imag() + net.buses[0].q_load - x[5], 1e-12);
    EXPECT_NEAR(c[2], S[1].real() + net.buses[1].p_load, 1e-12);
    EXPECT_NEAR(c[3], S[1].imag() + net.buses[1].q_load, 1e-12);
  }
}

TEST(Model, CaseInjectionsMatchComplexOracle) {
  for (int cn : {14, 57, 118}) {
    auto net = fixtures::load_case(cn);
    auto p = whole(net);
    auto rp = build_region_problem(net, p, 0);
    const auto& reg = p.regions[0];
    std::mt19937 rng(cn);
    Eigen::VectorXd x = random_point(rp, rng);
    const int n = static_cast<int>(net.buses.size());
    Eigen::VectorXcd V(n);
    for (int l = 0; l < reg.n_local_buses(); ++l)
      V[reg.local_buses[l]] = std::complex<double>(x[reg.u_index(l)], x[reg.w_index(l)]);
    auto S = complex_injection(net, V);
    Eigen::VectorXd gen_p = Eigen::VectorXd::Zero(n), gen_q = Eigen::VectorXd::Zero(n);
    auto idx = net.bus_index();
    for (std::size_t k = 0; k < reg.generators.size(); ++k) {
      int b = idx.at(net.generators[reg.generators[k]].bus);
      gen_p[b] += x[reg.pg_index(static_cast<int>(k))];
      gen_q[b] += x[reg.qg_index(static_cast<int>(k))];
    }
    Eigen::VectorXd c = rp.eval_eq(x);
    for (int i = 0; i < rp.n_eq(); ++i) {
      const auto& tag = rp.eq_tags[i];
      if (tag.kind == RowKind::PBalance)
        EXPECT_NEAR(c[i], S[tag.ref].real() + net.buses[tag.ref].p_load - gen_p[tag.ref], 1e-10) << cn;
      else if (tag.kind == RowKind::QBalance)
        EXPECT_NEAR(c[i], S[tag.ref].imag() + net.buses[tag.ref].q_load - gen_q[tag.ref], 1e-10) << cn;
    }
  }
}

TEST(Model, FlatLosslessStartBalances) {
  auto net = fixtures::two_bus();
  net.buses[1].p_load = net.buses[1].q_load = 0.0;
  net.generators[0].p_min = net.generators[0].p_max = 0.0;
  net.generators[0].q_min = -1.0;
  net.generators[0].q_max = 1.0;
  auto p = whole(net);
  auto rp = build_region_problem(net, p, 0);
  Eigen::VectorXd x = flat_start(net, p.regions[0]);
  EXPECT_LT(rp.eval_eq(x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Model, VoltageRowValue) {
  auto net = fixtures::two_bus();
  auto p = whole(net);
  auto rp = build_region_problem(net, p, 0);
  Eigen::VectorXd x = flat_start(net, p.regions[0]);
  x[0] = 1.2;  // |V_1| = 1.2, v_max = 1.1
  Eigen::VectorXd ci = rp.eval_ineq(x);
  bool found = false;
  for (int i = 0; i < rp.n_ineq(); ++i)
    if (rp.ineq_tags[i].kind == RowKind::VoltageMax && rp.ineq_tags[i].ref == 0) {
      EXPECT_NEAR(ci[i], 1.44 - 1.21, 1e-15);
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Model, TwoBusRowCounts) {
  auto net = fixtures::two_bus();
  auto rp = build_region_problem(net, whole(net), 0);
  // P, Q at two buses plus the gauge row
  EXPECT_EQ(rp.n_eq(), 5);
  // no flow or angle limits; v_max and v_min per bus; four generator bounds
  EXPECT_EQ(rp.n_ineq(), 8);
}

class DerivativeCheck : public ::testing::TestWithParam<int> {};

TEST_P(DerivativeCheck, FiniteDifferences) {
  const int cn = GetParam();
  auto net = fixtures::load_case(cn);
  auto p = partition::build_consensus(net, partition::partition_graph(net, 3, 0.05, 1));
  std::mt19937 rng(17);
  for (int r = 0; r < p.n_regions(); ++r) {
    auto rp = build_region_problem(net, p, r);
    Eigen::VectorXd x = random_point(rp, rng);
    Eigen::VectorXd gamma = Eigen::VectorXd::Random(rp.n_eq());
    Eigen::VectorXd kappa = Eigen::VectorXd::Random(rp.n_ineq()).cwiseAbs();
    const double h = 1e-6;
    auto J = Eigen::MatrixXd(rp.jac_eq(x));
    auto R = Eigen::MatrixXd(rp.jac_ineq(x));
    Eigen::VectorXd g = rp.objective_gradient(x);
    Eigen::MatrixXd H = rp.hess_lagrangian(x, gamma, kappa);
    auto lag_grad = [&](const Eigen::VectorXd& y) {
      Eigen::VectorXd v = rp.objective_gradient(y);
      v += Eigen::MatrixXd(rp.jac_eq(y)).transpose() * gamma;
      v += Eigen::MatrixXd(rp.jac_ineq(y)).transpose() * kappa;
      return v;
    };
    for (int j = 0; j < rp.nx; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double scale = 1.0 + g.cwiseAbs().maxCoeff();
      EXPECT_NEAR((rp.eval_objective(xp) - rp.eval_objective(xm)) / (2 * h), g[j], 1e-6 * scale);
      Eigen::VectorXd dce = (rp.eval_eq(xp) - rp.eval_eq(xm)) / (2 * h);
      Eigen::VectorXd dci = (rp.eval_ineq(xp) - rp.eval_ineq(xm)) / (2 * h);
      EXPECT_LT((dce - J.col(j)).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + J.cwiseAbs().maxCoeff()));
      if (rp.n_ineq() > 0) EXPECT_LT((dci - R.col(j)).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + R.cwiseAbs().maxCoeff()));
      Eigen::VectorXd dH = (lag_grad(xp) - lag_grad(xm)) / (2 * h);
      EXPECT_LT((dH - H.col(j)).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + H.cwiseAbs().maxCoeff()));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Cases, DerivativeCheck, ::testing::Values(14, 30));

// Second-order expansion is exact for quadratic rows. For the squared flow
// rows the remainder is the fourth-order term (dᵀ∇²q d)²/4 per square.
TEST(Model, TaylorIdentity) {
  for (int cn : {14, 30, 57, 118}) {
    auto net = fixtures::load_case(cn);
    auto p = whole(net);
    auto rp = build_region_problem(net, p, 0);
    std::mt19937 rng(cn + 100);
    double worst = 0.0;
    for (int pair = 0; pair < 1000; ++pair) {
      Eigen::VectorXd x = random_point(rp, rng);
      Eigen::VectorXd y = random_point(rp, rng);
      Eigen::VectorXd d = y - x;
      auto check = [&](const ConstraintRow& row) {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(rp.nx, rp.nx);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(rp.nx);
        row.add_gradient(x, 1.0, g);
        row.add_hessian(x, 1.0, H);
        double pred = row.value(x) + g.dot(d) + 0.5 * d.dot(H * d);
        for (const auto& q : row.squares) {
          Eigen::MatrixXd Hq = Eigen::MatrixXd::Zero(rp.nx, rp.nx);
          q.add_hessian(1.0, Hq);
          Eigen::VectorXd gq = Eigen::VectorXd::Zero(rp.nx);
          q.add_gradient(x, 1.0, gq);
          const double curv = d.dot(Hq * d);
          // q(y)² = (q + gᵀd + c/2)²; expansion keeps terms up to second order
          pred += gq.dot(d) * curv + 0.25 * curv * curv;
        }
        const double err = std::abs(row.value(y) - pred) / (1.0 + std::abs(row.value(y)));
        worst = std::max(worst, err);
      };
      if (pair % 50 == 0) {
        for (const auto& row : rp.eq) check(row);
        for (const auto& row : rp.ineq) check(row);
      } else {
        check(rp.eq[pair % rp.n_eq()]);
        check(rp.ineq[pair % rp.n_ineq()]);
      }
      const double fx = rp.eval_objective(x);
      Eigen::VectorXd gf = rp.objective_gradient(x);
      Eigen::MatrixXd Hf = Eigen::MatrixXd::Zero(rp.nx, rp.nx);
      rp.objective.add_hessian(1.0, Hf);
      const double fy = fx + gf.dot(d) + 0.5 * d.dot(Hf * d);
      worst = std::max(worst, std::abs(rp.eval_objective(y) - fy) / (1.0 + std::abs(fy)));
    }
    EXPECT_LT(worst, 1e-12) << "case " << cn;
  }
}

TEST(Model, SparsityIndependentOfPoint) {
  auto net = fixtures::load_case(30);
  auto p = partition::build_consensus(net, partition::partition_graph(net, 2, 0.05, 1));
  for (int r = 0; r < 2; ++r) {
    auto rp = build_region_problem(net, p, r);
    // the union of row supports bounds the Jacobian pattern at every point
    std::mt19937 rng(r);
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd x = random_point(rp, rng, 0.5);
      auto J = rp.jac_eq(x);
      for (int k = 0; k < J.outerSize(); ++k)
        for (SparseRM::InnerIterator it(J, k); it; ++it) {
          const auto& s = rp.eq[it.row()].support;
          EXPECT_TRUE(std::binary_search(s.begin(), s.end(), static_cast<int>(it.col())));
        }
      // generic points reach the full support
      EXPECT_EQ(J.nonZeros(), [&] {
        Eigen::Index n = 0;
        for (const auto& row : rp.eq) n += static_cast<Eigen::Index>(row.support.size());
        return n;
      }());
    }
  }
}

TEST(Model, ConsensusBlockMatchesRegion) {
  auto net = fixtures::load_case(57);
  auto p = partition::build_consensus(net, partition::partition_graph(net, 4, 0.05, 1));
  for (int r = 0; r < 4; ++r) {
    auto rp = build_region_problem(net, p, r);
    Eigen::VectorXd x = Eigen::VectorXd::Random(rp.nx);
    Eigen::VectorXd full = p.regions[r].A * x;
    Eigen::VectorXd cpl = rp.consensus_value(x);
    for (int k = 0; k < rp.n_cpl(); ++k) EXPECT_DOUBLE_EQ(cpl[k], full[rp.coupled_rows[k]]);
  }
}

TEST(Model, DerivativeBundle) {
  auto net = fixtures::load_case(14);
  auto p = whole(net);
  auto rp = build_region_problem(net, p, 0);
  Eigen::VectorXd x = flat_start(net, p.regions[0]);
  Eigen::VectorXd c = rp.eval_ineq(x);
  Eigen::VectorXd s = (-c).cwiseMax(1e-2);
  Eigen::VectorXd kappa = Eigen::VectorXd::Constant(rp.n_ineq(), 0.1);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(rp.n_eq());
  auto d = eval_derivatives(rp, x, s, kappa, gamma);
  Eigen::MatrixXd R(d.R);
  Eigen::VectorXd sig = kappa.cwiseQuotient(s);
  Eigen::MatrixXd Href = d.hess_lagrangian + R.transpose() * sig.asDiagonal() * R;
  EXPECT_LT((d.H - Href).cwiseAbs().maxCoeff(), 1e-9);
  const double mu = 0.3;
  Eigen::VectorXd gref = d.grad_lagrangian + R.transpose() * (s.cwiseInverse() * mu + sig.cwiseProduct(c));
  EXPECT_LT((d.g(mu) - gref).cwiseAbs().maxCoeff(), 1e-10);
  s[0] = 0.0;
  EXPECT_THROW(eval_derivatives(rp, x, s, kappa, gamma), EvaluationError);
}
