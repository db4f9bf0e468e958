#pragma once

#include <algorithm>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "baladin/kkt/condense.hpp"
#include "baladin/kkt/ldl.hpp"

namespace baladin::kkt {

/// Constants of the δ-regularization schedule.
struct RegularizationParams {
  double delta_x0 = 1e-4;
  double delta_x_min = 1e-20;
  double eta_fast = 100.0;
  double eta_slow = 8.0;
  double eta_red = 1.0 / 3.0;
  double delta_gamma_factor = 1e-8;  // δ^γ₀ = factor·μ
  int max_rounds = 30;
};

/// First trial δ^x of a correction sequence and its growth factor.
inline std::pair<double, double> initial_delta(double delta_last, const RegularizationParams& p) {
  if (delta_last == 0.0) return {p.delta_x0, p.eta_fast};
  return {std::max(p.eta_red * delta_last, p.delta_x_min), p.eta_slow};
}

struct RegularizedFactor {
  LdlFactor factor;
  Eigen::MatrixXd Hbar;
  double delta_x = 0.0;
  double delta_gamma = 0.0;
  int rounds = 0;
  bool ok = false;
};

/**
 * Factors [[H + δˣI, Jᵀ], [J, −δᵞI]] and increases δˣ until the inertia is
 * (n_x, n_E, 0). `delta_last` carries the accepted δˣ between calls.
 */
inline RegularizedFactor factor_with_inertia(const Eigen::MatrixXd& H,
                                             const Eigen::SparseMatrix<double, Eigen::RowMajor>& J, double mu,
                                             double& delta_last, const RegularizationParams& p = {}) {
  const int nx = static_cast<int>(H.rows());
  const int ne = static_cast<int>(J.rows());
  const Inertia want{nx, ne, 0};
  RegularizedFactor out;
  out.Hbar = build_hbar(H, J, 0.0, 0.0);
  out.factor.factor(out.Hbar);
  if (out.factor.inertia() == want) {
    delta_last = 0.0;
    out.ok = true;
    return out;
  }
  auto [dx, eta] = initial_delta(delta_last, p);
  const double dg = out.factor.inertia().zero > 0 ? p.delta_gamma_factor * mu : 0.0;
  for (int round = 1; round <= p.max_rounds; ++round) {
    out.Hbar = build_hbar(H, J, dx, dg);
    out.factor.factor(out.Hbar);
    out.rounds = round;
    out.delta_x = dx;
    out.delta_gamma = dg;
    if (out.factor.inertia() == want) {
      delta_last = dx;
      out.ok = true;
      return out;
    }
    dx *= eta;
  }
  return out;
}

}  // namespace baladin::kkt
