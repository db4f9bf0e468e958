#pragma once

// Independent references for the tests: random generic region problems, the
// unreduced primal-dual Newton system solved densely, and eigenvalue inertia.

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "baladin/coordinate/coordination.hpp"
#include "baladin/kkt/ldl.hpp"
#include "baladin/local/iterate.hpp"
#include "baladin/model/region_problem.hpp"

namespace oracles {

using baladin::kkt::Inertia;

inline Inertia eigen_inertia(const Eigen::MatrixXd& K, double rel_tol = 1e-13) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double scale = ev.size() ? std::max(1.0, ev.cwiseAbs().maxCoeff()) : 1.0;
  Inertia in;
  for (double e : ev) {
    if (std::abs(e) <= rel_tol * scale) ++in.zero;
    else if (e > 0) ++in.pos;
    else ++in.neg;
  }
  return in;
}

/**
 * Inertia of an ill-scaled symmetric matrix: symmetric Ruiz equilibration
 * D K D (a congruence, so the inertia is unchanged) before the eigensolve.
 */
inline Inertia equilibrated_inertia(const Eigen::MatrixXd& K, double rel_tol = 1e-13) {
  Eigen::MatrixXd M = 0.5 * (K + K.transpose());
  for (int pass = 0; pass < 20; ++pass) {
    Eigen::VectorXd d(M.rows());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const double r = M.row(i).cwiseAbs().maxCoeff();
      d[i] = r > 0.0 ? 1.0 / std::sqrt(r) : 1.0;
    }
    M = d.asDiagonal() * M * d.asDiagonal();
    if ((d.array() - 1.0).abs().maxCoeff() < 1e-3) break;
  }
  return eigen_inertia(M, rel_tol);
}

/// Several generic regions coupled by x_a,i − x_b,j = b_k rows.
struct Instance {
  std::vector<baladin::model::RegionProblem> problems;
  std::vector<baladin::local::LocalIterate> points;
  std::vector<Eigen::VectorXd> lambda;  // per region, restricted to coupled rows
  baladin::coordinate::Layout layout;
};

/**
 * Random instance with at most `max_vars` variables over `n_regions` regions.
 * Objectives are quadratics with a diagonally dominant Hessian; equality rows
 * mix linear and bilinear terms, inequality rows are linear with one square.
 */
inline Instance random_instance(std::mt19937& rng, int n_regions, int max_vars) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.2, 2.0);
  const int per = std::max(3, max_vars / n_regions);
  std::uniform_int_distribution<int> nxd(3, per);

  Instance I;
  std::vector<int> nx(n_regions);
  for (int r = 0; r < n_regions; ++r) nx[r] = nxd(rng);

  // consensus rows between consecutive regions, plus one wrap-around row
  struct Row {
    int ra, ia, rb, ib;
  };
  // each variable enters at most one row, so Ā has full row rank
  std::vector<std::vector<int>> free_vars(n_regions);
  for (int r = 0; r < n_regions; ++r) {
    for (int i = 0; i < nx[r]; ++i) free_vars[r].push_back(i);
    std::shuffle(free_vars[r].begin(), free_vars[r].end(), rng);
  }
  auto take = [&](int r) {
    const int i = free_vars[r].back();
    free_vars[r].pop_back();
    return i;
  };
  std::vector<Row> rows;
  for (int r = 0; r + 1 < n_regions; ++r) {
    const int k = 1 + static_cast<int>(rng() % 2);
    for (int t = 0; t < k; ++t) {
      const int ia = take(r);
      rows.push_back({r, ia, r + 1, take(r + 1)});
    }
  }
  if (n_regions > 2) {
    const int ia = take(n_regions - 1);
    rows.push_back({n_regions - 1, ia, 0, take(0)});
  }
  const int nl = static_cast<int>(rows.size());

  I.layout.n_lambda = nl;
  I.layout.b = Eigen::VectorXd(nl);
  for (int k = 0; k < nl; ++k) I.layout.b[k] = 0.1 * u(rng);
  I.layout.coupled_rows.assign(n_regions, {});
  for (int k = 0; k < nl; ++k) {
    auto& a = I.layout.coupled_rows[rows[k].ra];
    auto& b = I.layout.coupled_rows[rows[k].rb];
    if (a.empty() || a.back() != k) a.push_back(k);
    if (b.empty() || b.back() != k) b.push_back(k);
  }

  for (int r = 0; r < n_regions; ++r) {
    baladin::model::RegionProblem rp;
    rp.region = r;
    rp.nx = nx[r];
    for (int i = 0; i < nx[r]; ++i) {
      rp.objective.add_quad(i, i, 0.5 * (2.0 + pos(rng)));
      rp.objective.add_linear(i, u(rng));
      if (i + 1 < nx[r]) rp.objective.add_quad(i, i + 1, 0.3 * u(rng));
    }
    const int ne = static_cast<int>(rng() % std::max(1, nx[r] / 2));
    for (int e = 0; e < ne; ++e) {
      baladin::model::ConstraintRow c;
      c.base.constant = 0.2 * u(rng);
      for (int i = 0; i < nx[r]; ++i) c.base.add_linear(i, u(rng));
      c.base.add_quad(static_cast<int>(rng() % nx[r]), static_cast<int>(rng() % nx[r]), 0.3 * u(rng));
      rp.eq.push_back(c);
    }
    const int ni = 1 + static_cast<int>(rng() % nx[r]);
    for (int q = 0; q < ni; ++q) {
      baladin::model::ConstraintRow c;
      c.base.constant = -1.0 - pos(rng);
      const int i = static_cast<int>(rng() % nx[r]);
      c.base.add_linear(i, u(rng));
      c.base.add_quad(i, i, 0.5 * pos(rng));
      rp.ineq.push_back(c);
    }
    const auto& cr = I.layout.coupled_rows[r];
    rp.coupled_rows = cr;
    rp.A_cpl = Eigen::MatrixXd::Zero(static_cast<int>(cr.size()), nx[r]);
    for (std::size_t a = 0; a < cr.size(); ++a) {
      const Row& row = rows[cr[a]];
      if (row.ra == r) rp.A_cpl(a, row.ia) += 1.0;
      if (row.rb == r) rp.A_cpl(a, row.ib) -= 1.0;
    }
    rp.finalize();

    baladin::local::LocalIterate it;
    it.x = Eigen::VectorXd(nx[r]);
    for (int i = 0; i < nx[r]; ++i) it.x[i] = 0.5 * u(rng);
    it.gamma = Eigen::VectorXd(ne);
    for (int e = 0; e < ne; ++e) it.gamma[e] = u(rng);
    it.s = Eigen::VectorXd(ni);
    it.kappa = Eigen::VectorXd(ni);
    for (int q = 0; q < ni; ++q) {
      it.s[q] = pos(rng);
      it.kappa[q] = pos(rng);
    }

    I.layout.nx.push_back(nx[r]);
    I.layout.ne.push_back(ne);
    I.problems.push_back(std::move(rp));
    I.points.push_back(std::move(it));
  }
  // one λ per row; regions read their restriction
  Eigen::VectorXd lam_global = Eigen::VectorXd::Zero(nl);
  for (int k = 0; k < nl; ++k) lam_global[k] = u(rng);
  for (int r = 0; r < n_regions; ++r)
    I.lambda.push_back(baladin::coordinate::restrict_rows(lam_global, I.layout.coupled_rows[r]));
  return I;
}

/// Full Newton direction per region plus Δλ.
struct NewtonStep {
  std::vector<Eigen::VectorXd> dx, dgamma, ds, dkappa;
  Eigen::VectorXd dlambda;
};

/**
 * Unreduced primal-dual Newton system in (x, s, γ, κ) for all regions and λ:
 *
 *   ∇²L Δx + JᵀΔγ + RᵀΔκ + AᵀΔλ = −(∇f + Jᵀγ + Rᵀκ + Aᵀλ)
 *   K Δs + S Δκ                = μ1 − Sκ
 *   J Δx                       = −c^E
 *   R Δx + Δs                  = −(c^I + s)
 *   Σ A Δx                     = b − Σ A x
 *
 * solved with a partially pivoted dense LU (no rank truncation: the rows are
 * badly scaled near the boundary and a rank-revealing solve would drop them).
 */
inline NewtonStep monolithic_step(const Instance& I, double mu) {
  const int nr = static_cast<int>(I.problems.size());
  std::vector<int> off(nr + 1, 0);
  for (int r = 0; r < nr; ++r) {
    const auto& rp = I.problems[r];
    off[r + 1] = off[r] + rp.nx + 2 * rp.n_ineq() + rp.n_eq();
  }
  const int nl = I.layout.n_lambda;
  const int n = off[nr] + nl;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd cons = -I.layout.b;

  for (int r = 0; r < nr; ++r) {
    const auto& rp = I.problems[r];
    const auto& p = I.points[r];
    const int nx = rp.nx, ni = rp.n_ineq(), ne = rp.n_eq();
    const int ox = off[r], os = ox + nx, og = os + ni, ok = og + ne;
    const Eigen::MatrixXd J = Eigen::MatrixXd(rp.jac_eq(p.x));
    const Eigen::MatrixXd R = Eigen::MatrixXd(rp.jac_ineq(p.x));
    const Eigen::MatrixXd HL = rp.hess_lagrangian(p.x, p.gamma, p.kappa);
    Eigen::VectorXd grad = rp.objective_gradient(p.x) + rp.A_cpl.transpose() * I.lambda[r];
    if (ne) grad += J.transpose() * p.gamma;
    if (ni) grad += R.transpose() * p.kappa;

    K.block(ox, ox, nx, nx) = HL;
    K.block(ox, og, nx, ne) = J.transpose();
    K.block(ox, ok, nx, ni) = R.transpose();
    rhs.segment(ox, nx) = -grad;
    for (int q = 0; q < ni; ++q) {
      K(os + q, os + q) = p.kappa[q];
      K(os + q, ok + q) = p.s[q];
      rhs[os + q] = mu - p.s[q] * p.kappa[q];
    }
    K.block(og, ox, ne, nx) = J;
    rhs.segment(og, ne) = -rp.eval_eq(p.x);
    K.block(ok, ox, ni, nx) = R;
    K.block(ok, os, ni, ni) = Eigen::MatrixXd::Identity(ni, ni);
    rhs.segment(ok, ni) = -(rp.eval_ineq(p.x) + p.s);

    const auto& cr = I.layout.coupled_rows[r];
    for (std::size_t a = 0; a < cr.size(); ++a) {
      const int row = off[nr] + cr[a];
      K.block(row, ox, 1, nx) += rp.A_cpl.row(a);
      K.block(ox, row, nx, 1) += rp.A_cpl.row(a).transpose();
      cons[cr[a]] += rp.A_cpl.row(a).dot(p.x);
    }
  }
  rhs.tail(nl) = -cons;
  const Eigen::VectorXd sol = K.partialPivLu().solve(rhs);

  NewtonStep st;
  for (int r = 0; r < nr; ++r) {
    const auto& rp = I.problems[r];
    const int nx = rp.nx, ni = rp.n_ineq(), ne = rp.n_eq();
    const int ox = off[r], os = ox + nx, og = os + ni, ok = og + ne;
    st.dx.push_back(sol.segment(ox, nx));
    st.ds.push_back(sol.segment(os, ni));
    st.dgamma.push_back(sol.segment(og, ne));
    st.dkappa.push_back(sol.segment(ok, ni));
  }
  st.dlambda = sol.tail(nl);
  return st;
}

/// Symmetric bordered matrix [[blkdiag H̄_ℓ, Āᵀ], [Ā, 0]] with Ā scattered onto global rows.
inline Eigen::MatrixXd bordered_kkt(const std::vector<Eigen::MatrixXd>& hbar, const std::vector<Eigen::MatrixXd>& abar,
                                    const std::vector<std::vector<int>>& rows, int n_lambda) {
  int n = 0;
  for (const auto& H : hbar) n += static_cast<int>(H.rows());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + n_lambda, n + n_lambda);
  int o = 0;
  for (std::size_t r = 0; r < hbar.size(); ++r) {
    const int d = static_cast<int>(hbar[r].rows());
    K.block(o, o, d, d) = hbar[r];
    for (std::size_t a = 0; a < rows[r].size(); ++a) {
      K.block(n + rows[r][a], o, 1, d) += abar[r].row(a);
      K.block(o, n + rows[r][a], d, 1) += abar[r].row(a).transpose();
    }
    o += d;
  }
  return K;
}

}  // namespace oracles
