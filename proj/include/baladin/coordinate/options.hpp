#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

#include "baladin/kkt/regularize.hpp"
#include "baladin/local/agent.hpp"

namespace baladin::coordinate {

enum class Mode { FullStep, Globalized };

inline const char* to_string(Mode m) { return m == Mode::FullStep ? "full-step" : "globalized"; }

enum class Status { Running, Optimal, Stagnation, IterationCap, Diverged, InfeasibleDiagnostic, Degraded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::Optimal: return "optimal";
    case Status::Stagnation: return "stagnation";
    case Status::IterationCap: return "iteration-cap";
    case Status::Diverged: return "diverged";
    case Status::InfeasibleDiagnostic: return "infeasible-diagnostic";
    case Status::Degraded: return "degraded";
  }
  return "?";
}

inline std::ostream& operator<<(std::ostream& os, Status s) { return os << to_string(s); }

struct SolverOptions {
  double eps = 1e-6;         // termination tolerance on E^0
  double eta_minus = 10.0;   // barrier acceptance E^μ ≤ η⁻μ
  double mu0 = 0.1;
  double rho = 1e5;  // proximal weight; sized for per-unit costs of order 1e3 $/pu
  double tau_min = 0.99;
  Mode mode = Mode::FullStep;
  bool auto_globalize = true;  // switch after `fallback_window` consecutive E^0 increases
  int fallback_window = 5;
  int max_iter = 200;
  int inner_max_iter = 100;
  kkt::RegularizationParams reg;  // δ^x₀, δ̄^x, η^fast, η^slow, η^red, δ^γ₀/μ, round cap
  double stagnation_rel = 1e-9;
  double stagnation_consensus = 1e-6;
  int stagnation_window = 5;
  double divergence_factor = 1e6;
  local::KappaStep kappa_step = local::KappaStep::Dual;
  double merit_eta = 1e-4;  // η_Φ

  void validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(mu0 > eps / 10.0)) throw std::invalid_argument("mu0 must exceed eps/10");
    if (!(eta_minus > 0.0)) throw std::invalid_argument("eta_minus must be positive");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (!(tau_min > 0.0 && tau_min < 1.0)) throw std::invalid_argument("tau_min must lie in (0, 1)");
    if (max_iter < 0) throw std::invalid_argument("max_iter must be non-negative");
  }

  local::AgentOptions agent_options() const {
    local::AgentOptions a;
    a.tau_min = tau_min;
    a.eta_minus = eta_minus;
    a.inner_max_iter = inner_max_iter;
    a.kappa_step = kappa_step;
    a.reg = reg;
    return a;
  }
};

struct Timing {
  double local = 0.0;
  double condense = 0.0;
  double coordinate = 0.0;
  double recover = 0.0;
  double sync = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  double mu = 0.0;
  double E_mu = 0.0;
  double E0 = 0.0;
  double objective = 0.0;
  double consensus = 0.0;  // ‖ΣA_ℓx_ℓ − b‖∞
  double alpha1 = 1.0, alpha2 = 1.0, alpha3 = 1.0;
  double beta_p = 1.0, beta_d = 1.0;
  double delta_x = 0.0;
  double delta_gamma = 0.0;
  int correction_rounds = 0;
  bool barrier_updated = false;
  Mode mode = Mode::FullStep;
  char stage = '-';  // globalization stage a, b, c
  int inner_iterations = 0;  // max over regions
  bool inner_converged = true;
  Timing timing;
  long forward_floats = 0;   // algebraic
  long backward_floats = 0;  // algebraic
  std::uint64_t hash = 0;
};

}  // namespace baladin::coordinate
