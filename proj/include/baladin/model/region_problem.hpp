#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "baladin/model/quadratic.hpp"

namespace baladin::model {

using SparseRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class RowKind {
  PBalance,
  QBalance,
  Gauge,
  FixedP,
  FixedQ,
  FlowFrom,
  FlowTo,
  AngleUpper,
  AngleLower,
  VoltageMax,
  VoltageMin,
  PMax,
  PMin,
  QMax,
  QMin,
  Generic,
};

inline const char* to_string(RowKind k) {
  switch (k) {
    case RowKind::PBalance: return "p-balance";
    case RowKind::QBalance: return "q-balance";
    case RowKind::Gauge: return "gauge";
    case RowKind::FixedP: return "fixed-p";
    case RowKind::FixedQ: return "fixed-q";
    case RowKind::FlowFrom: return "flow-from";
    case RowKind::FlowTo: return "flow-to";
    case RowKind::AngleUpper: return "angle-upper";
    case RowKind::AngleLower: return "angle-lower";
    case RowKind::VoltageMax: return "v-max";
    case RowKind::VoltageMin: return "v-min";
    case RowKind::PMax: return "p-max";
    case RowKind::PMin: return "p-min";
    case RowKind::QMax: return "q-max";
    case RowKind::QMin: return "q-min";
    case RowKind::Generic: return "generic";
  }
  return "?";
}

/// Row provenance: bus position, branch index or generator index depending on kind.
struct RowTag {
  RowKind kind = RowKind::Generic;
  int ref = -1;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * One region's smooth NLP: min f(x) s.t. c^E(x) = 0, c^I(x) ≤ 0, with the
 * consensus block restricted to the region's coupled rows.
 */
struct RegionProblem {
  int region = 0;
  int nx = 0;
  QuadraticFunction objective;
  std::vector<ConstraintRow> eq;
  std::vector<ConstraintRow> ineq;
  std::vector<RowTag> eq_tags;
  std::vector<RowTag> ineq_tags;

  /// A_ℓ restricted to coupled rows (N^cpl_ℓ × nx) and the global row ids.
  Eigen::MatrixXd A_cpl;
  std::vector<int> coupled_rows;

  // variable bookkeeping, filled by the OPF builder; empty for generic problems
  std::vector<int> local_buses;
  std::vector<int> generators;
  int n_core_buses = 0;

  int n_eq() const { return static_cast<int>(eq.size()); }
  int n_ineq() const { return static_cast<int>(ineq.size()); }
  int n_cpl() const { return static_cast<int>(coupled_rows.size()); }

  void finalize() {
    objective.normalize();
    for (auto& r : eq) r.finalize();
    for (auto& r : ineq) r.finalize();
    if (A_cpl.cols() != nx || A_cpl.rows() != n_cpl())
      throw std::invalid_argument("consensus block shape does not match coupled rows");
    if (eq_tags.size() != eq.size()) eq_tags.resize(eq.size());
    if (ineq_tags.size() != ineq.size()) ineq_tags.resize(ineq.size());
  }

  double eval_objective(const Eigen::VectorXd& x) const { return objective.value(x); }

  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nx);
    objective.add_gradient(x, 1.0, g);
    return g;
  }

  Eigen::VectorXd eval_eq(const Eigen::VectorXd& x) const {
    Eigen::VectorXd c(n_eq());
    for (int i = 0; i < n_eq(); ++i) c[i] = eq[i].value(x);
    return c;
  }

  Eigen::VectorXd eval_ineq(const Eigen::VectorXd& x) const {
    Eigen::VectorXd c(n_ineq());
    for (int i = 0; i < n_ineq(); ++i) c[i] = ineq[i].value(x);
    return c;
  }

  static SparseRM jacobian(const std::vector<ConstraintRow>& rows, int nx, const Eigen::VectorXd& x) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd scratch = Eigen::VectorXd::Zero(nx);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      rows[r].add_gradient(x, 1.0, scratch);
      for (int j : rows[r].support) {
        if (scratch[j] != 0.0) trip.emplace_back(static_cast<int>(r), j, scratch[j]);
        scratch[j] = 0.0;
      }
    }
    SparseRM J(static_cast<Eigen::Index>(rows.size()), nx);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
  }

  SparseRM jac_eq(const Eigen::VectorXd& x) const { return jacobian(eq, nx, x); }
  SparseRM jac_ineq(const Eigen::VectorXd& x) const { return jacobian(ineq, nx, x); }

  /// ∇²f + Σ γ_i ∇²c^E_i + Σ κ_i ∇²c^I_i.
  Eigen::MatrixXd hess_lagrangian(const Eigen::VectorXd& x, const Eigen::VectorXd& gamma,
                                  const Eigen::VectorXd& kappa) const {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nx, nx);
    objective.add_hessian(1.0, H);
    for (int i = 0; i < n_eq(); ++i)
      if (gamma[i] != 0.0) eq[i].add_hessian(x, gamma[i], H);
    for (int i = 0; i < n_ineq(); ++i)
      if (kappa[i] != 0.0) ineq[i].add_hessian(x, kappa[i], H);
    return H;
  }

  /// A_ℓᵀλ_ℓ for the region's copy of the coupled multipliers.
  Eigen::VectorXd consensus_gradient(const Eigen::VectorXd& lambda_cpl) const {
    if (n_cpl() == 0) return Eigen::VectorXd::Zero(nx);
    return A_cpl.transpose() * lambda_cpl;
  }

  Eigen::VectorXd consensus_value(const Eigen::VectorXd& x) const {
    if (n_cpl() == 0) return Eigen::VectorXd::Zero(0);
    return A_cpl * x;
  }
};

/// Derivative bundle of one region at (x, s, κ, γ, μ).
struct Derivatives {
  Eigen::VectorXd grad_lagrangian;  // ∇f + Jᵀγ + Rᵀκ (+ Aᵀλ when supplied)
  Eigen::VectorXd g0;               // grad_lagrangian + RᵀS⁻¹K c^I
  Eigen::VectorXd g_mu;             // RᵀS⁻¹1, so g = g0 + μ·g_mu
  SparseRM J;
  SparseRM R;
  Eigen::MatrixXd hess_lagrangian;  // ∇²_xx L
  Eigen::MatrixXd H;                // ∇²_xx L + RᵀS⁻¹K R
  Eigen::VectorXd c_eq;
  Eigen::VectorXd c_ineq;

  Eigen::VectorXd g(double mu) const { return g0 + mu * g_mu; }
};

/**
 * Evaluates J, R, the exact Lagrangian Hessian and the barrier-condensed H, g.
 * `consensus_term` (A_ℓᵀλ) is added to the gradient when non-empty.
 *
 * @throws EvaluationError if any slack is non-positive or a value is not finite.
 */
inline Derivatives eval_derivatives(const RegionProblem& rp, const Eigen::VectorXd& x, const Eigen::VectorXd& s,
                                    const Eigen::VectorXd& kappa, const Eigen::VectorXd& gamma,
                                    const Eigen::VectorXd& consensus_term = Eigen::VectorXd()) {
  if (s.size() != rp.n_ineq() || kappa.size() != rp.n_ineq() || gamma.size() != rp.n_eq())
    throw EvaluationError("dimension mismatch in eval_derivatives");
  for (int i = 0; i < s.size(); ++i)
    if (!(s[i] > 0.0)) throw EvaluationError("slack " + std::to_string(i) + " is not positive");
  Derivatives d;
  d.c_eq = rp.eval_eq(x);
  d.c_ineq = rp.eval_ineq(x);
  d.J = rp.jac_eq(x);
  d.R = rp.jac_ineq(x);
  d.grad_lagrangian = rp.objective_gradient(x);
  if (rp.n_eq() > 0) d.grad_lagrangian += d.J.transpose() * gamma;
  if (rp.n_ineq() > 0) d.grad_lagrangian += d.R.transpose() * kappa;
  if (consensus_term.size() == rp.nx) d.grad_lagrangian += consensus_term;
  d.hess_lagrangian = rp.hess_lagrangian(x, gamma, kappa);

  const Eigen::VectorXd sigma = kappa.cwiseQuotient(s);  // S⁻¹K
  d.H = d.hess_lagrangian;
  if (rp.n_ineq() > 0) {
    SparseRM DR = sigma.asDiagonal() * d.R;
    Eigen::SparseMatrix<double> RtDR = Eigen::SparseMatrix<double>(d.R.transpose()) * Eigen::SparseMatrix<double>(DR);
    d.H += Eigen::MatrixXd(RtDR);
    d.g0 = d.grad_lagrangian + d.R.transpose() * sigma.cwiseProduct(d.c_ineq);
    d.g_mu = d.R.transpose() * s.cwiseInverse();
  } else {
    d.g0 = d.grad_lagrangian;
    d.g_mu = Eigen::VectorXd::Zero(rp.nx);
  }
  if (!d.H.allFinite() || !d.g0.allFinite() || !d.g_mu.allFinite())
    throw EvaluationError("non-finite derivative");
  return d;
}

}  // namespace baladin::model
