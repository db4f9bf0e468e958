#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "baladin/kkt/ldl.hpp"

namespace baladin::kkt {

/// H̄ = [[H + δˣI, Jᵀ], [J, −δᵞI]].
inline Eigen::MatrixXd build_hbar(const Eigen::MatrixXd& H, const Eigen::SparseMatrix<double, Eigen::RowMajor>& J,
                                  double delta_x, double delta_gamma) {
  const Eigen::Index nx = H.rows();
  const Eigen::Index ne = J.rows();
  Eigen::MatrixXd Hb = Eigen::MatrixXd::Zero(nx + ne, nx + ne);
  Hb.topLeftCorner(nx, nx) = H;
  Hb.topLeftCorner(nx, nx).diagonal().array() += delta_x;
  if (ne > 0) {
    Eigen::MatrixXd Jd(J);
    Hb.bottomLeftCorner(ne, nx) = Jd;
    Hb.topRightCorner(nx, ne) = Jd.transpose();
    Hb.bottomRightCorner(ne, ne).diagonal().array() = -delta_gamma;
  }
  return Hb;
}

/// Condensed contribution of one block: W = −Ā H̄⁻¹ Āᵀ, h = A x − Ā H̄⁻¹ ḡ with
/// ḡ = ḡ₀ + μ ḡ_μ split as h = h₀ + μ h_μ. Ā holds only the coupled rows.
struct Condensed {
  Eigen::MatrixXd W;
  Eigen::VectorXd h0;
  Eigen::VectorXd h_mu;
  Inertia inertia;
  bool singular = false;

  Eigen::VectorXd h(double mu) const { return h0 + mu * h_mu; }
};

/// Keeps the factor of H̄ for step recovery.
struct CondenseContext {
  LdlFactor factor;
  Eigen::MatrixXd Abar;  // N^cpl × dim(H̄)
  Eigen::VectorXd gbar0;
  Eigen::VectorXd gbar_mu;

  /// Δx̄ = −H̄⁻¹(ĀᵀΔλ + ḡ₀ + μ ḡ_μ).
  Eigen::VectorXd recover(const Eigen::VectorXd& dlambda, double mu) const {
    Eigen::VectorXd rhs = gbar0 + mu * gbar_mu;
    if (Abar.rows() > 0) rhs += Abar.transpose() * dlambda;
    return -factor.solve(rhs);
  }
};

/**
 * Factors H̄ and forms the Schur complement pieces. When H̄ is singular the
 * returned block carries `singular = true` and W, h are left empty.
 */
inline Condensed condense(const Eigen::MatrixXd& Hbar, const Eigen::MatrixXd& Abar, const Eigen::VectorXd& gbar0,
                          const Eigen::VectorXd& gbar_mu, const Eigen::VectorXd& Ax, CondenseContext* ctx = nullptr,
                          double zero_tol = -1.0) {
  Condensed out;
  LdlFactor f(Hbar, zero_tol);
  out.inertia = f.inertia();
  if (f.singular()) {
    out.singular = true;
    if (ctx) {
      ctx->factor = std::move(f);
      ctx->Abar = Abar;
      ctx->gbar0 = gbar0;
      ctx->gbar_mu = gbar_mu;
    }
    return out;
  }
  const Eigen::Index nc = Abar.rows();
  Eigen::MatrixXd rhs(Hbar.rows(), nc + 2);
  if (nc > 0) rhs.leftCols(nc) = Abar.transpose();
  rhs.col(nc) = gbar0;
  rhs.col(nc + 1) = gbar_mu;
  Eigen::MatrixXd X = f.solve(rhs);
  if (nc > 0) {
    out.W = -Abar * X.leftCols(nc);
    out.W = 0.5 * (out.W + out.W.transpose()).eval();
    out.h0 = Ax - Abar * X.col(nc);
    out.h_mu = -Abar * X.col(nc + 1);
  } else {
    out.W.resize(0, 0);
    out.h0.resize(0);
    out.h_mu.resize(0);
  }
  if (ctx) {
    ctx->factor = std::move(f);
    ctx->Abar = Abar;
    ctx->gbar0 = gbar0;
    ctx->gbar_mu = gbar_mu;
  }
  return out;
}

}  // namespace baladin::kkt
