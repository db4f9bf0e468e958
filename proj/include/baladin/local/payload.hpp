#pragma once

#include <Eigen/Dense>

#include "baladin/kkt/ldl.hpp"

namespace baladin::local {

/// Coordinator → agent: solve the decoupled problem at the current (z, λ).
struct SolveRequest {
  double mu = 0.0;
  double rho = 0.0;
};

/// Agent → coordinator after a solve or a correction round.
struct CondensedBlock {
  int region = 0;
  Eigen::MatrixXd W;  // N^cpl × N^cpl, sent as packed upper triangle
  Eigen::VectorXd h0;
  Eigen::VectorXd h_mu;
  Eigen::VectorXd Ax;  // A_ℓ x_ℓ over coupled rows
  double E_mu = 0.0;
  double E0 = 0.0;
  kkt::Inertia inertia;
  bool singular = false;
  double objective = 0.0;
  double eq_violation = 0.0;    // ‖c^E‖₁
  double ineq_violation = 0.0;  // ‖c^I + s‖₁
  // diagnostics of the decoupled solve
  int inner_iterations = 0;
  bool inner_converged = true;
  double t_solve = 0.0;
  double t_condense = 0.0;
};

/// Coordinator → agent: re-condense with the given regularization.
struct CorrectionRound {
  double delta_x = 0.0;
  double delta_gamma = 0.0;
};

/// Coordinator → agent: dual step restricted to the coupled rows and the new μ.
struct DualDown {
  Eigen::VectorXd dlambda;
  double mu = 0.0;
};

/// Agent → coordinator: fraction-to-boundary step lengths.
struct StepUp {
  int region = 0;
  double beta_p = 1.0;
  double beta_d = 1.0;
  double t_recover = 0.0;  // diagnostics
};

/// Coordinator → agent: request merit ingredients for the trial step with β^p.
struct MeritRequest {
  double beta_p = 1.0;
};

/// Merit ingredients at one point.
struct MeritPoint {
  double objective = 0.0;
  double violation = 0.0;  // ‖c^E‖₁ + ‖c^I + s‖₁
  Eigen::VectorXd Ax;
};

/// Agent → coordinator: merit data at z, at the decoupled x and at x + β^pΔx.
struct MeritReport {
  int region = 0;
  MeritPoint at_z;
  MeritPoint at_x;
  MeritPoint at_trial;
  double prox = 0.0;  // (ρ/2)‖x − z‖²_Σ
};

/// Coordinator → agent: evaluate the dual function at λ + α₃Δλ.
struct DualEvalRequest {
  double alpha3 = 1.0;
};

struct DualEvalReport {
  int region = 0;
  double value = 0.0;
};

/// Coordinator → agent: accepted step parameters.
struct StepSync {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;
  double beta_p = 1.0;
  double lambda_step = 1.0;  // multiplier of Δλ in the λ update
};

/// Entries of a packed upper triangle of an n × n symmetric matrix.
inline long packed_size(long n) { return n * (n + 1) / 2; }

/// Algebraic payload of a condensed block: packed W plus the h split.
inline long algebraic_floats(const CondensedBlock& b) {
  const long n = static_cast<long>(b.h0.size());
  return packed_size(n) + 2 * n;
}

inline long algebraic_floats(const DualDown& d) { return static_cast<long>(d.dlambda.size()); }

}  // namespace baladin::local
