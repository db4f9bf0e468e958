#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "baladin/coordinate/barrier.hpp"
#include "baladin/coordinate/coordination.hpp"
#include "baladin/coordinate/options.hpp"
#include "baladin/local/payload.hpp"

namespace baladin::coordinate {

/// FNV-1a over raw bytes; used to compare trajectories bit for bit.
class StateHash {
 public:
  void add(double v) {
    unsigned char b[sizeof(double)];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char c : b) {
      h_ ^= c;
      h_ *= 1099511628211ull;
    }
  }
  void add(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ull;
};

/// Coordinator-side view of one iteration, handed to the observer after the sync.
struct IterationAudit {
  int iteration = 0;
  double mu = 0.0;       // barrier of the decoupled solves
  double mu_next = 0.0;  // barrier targeted by the Newton step
  const std::vector<local::CondensedBlock>* blocks = nullptr;
  Eigen::MatrixXd W;
  Eigen::VectorXd h;
  Eigen::VectorXd dlambda;
  Eigen::VectorXd lambda_before;
  double delta_x = 0.0;
  double delta_gamma = 0.0;
  kkt::Inertia w_inertia;
  local::StepSync sync;
};

struct RunResult {
  Status status = Status::Running;
  std::string diagnostic;
  std::vector<IterationRecord> records;
  Eigen::VectorXd lambda;
  double mu = 0.0;
  double E0 = std::numeric_limits<double>::infinity();
  double E_mu = std::numeric_limits<double>::infinity();
  double objective = 0.0;
  double consensus = 0.0;
  int iterations = 0;  // outer iterations that produced a step
};

/// Resume point for a second run on the same channel: multipliers and barrier value.
struct RunStart {
  Eigen::VectorXd lambda;
  double mu = 0.0;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// ℓ1 exact penalty Φ = Σf + ε‖ΣAx − b‖₁ + ε Σ violations, assembled from merit points.
template <class Get>
double merit_value(const Layout& L, const std::vector<local::MeritReport>& reps, const std::vector<char>& active,
                   double penalty, Get get) {
  double f = 0.0, viol = 0.0;
  std::vector<Eigen::VectorXd> ax;
  ax.reserve(reps.size());
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const local::MeritPoint& p = get(reps[r]);
    ax.push_back(p.Ax);
    if (!active[r]) continue;
    f += p.objective;
    viol += p.violation;
  }
  const double cons = L.n_lambda ? (scatter_sum(L, ax) - L.b).lpNorm<1>() : 0.0;
  return f + penalty * cons + penalty * viol;
}

}  // namespace detail

using Observer = std::function<void(const IterationAudit&)>;

/**
 * Outer loop of the distributed barrier method.
 *
 * Per iteration: decoupled solves and condensation in every region, global
 * residual and termination tests, barrier update, distributed inertia
 * correction, the coordination solve, step recovery with fraction-to-boundary
 * lengths, optional globalization and the synchronized update. All region work
 * goes through `ch`; reductions run in region order.
 *
 * Channel interface: n_regions(), active(r), begin_iteration(k),
 * solve(SolveRequest), correct(CorrectionRound), dual_down(vector<DualDown>),
 * merit(MeritRequest), dual_eval(DualEvalRequest), sync(StepSync).
 */
template <class Channel>
RunResult run_baladin(Channel& ch, const Layout& L, const SolverOptions& opt, const Observer& observer = {},
                      const std::optional<RunStart>& start = std::nullopt) {
  opt.validate();
  RunResult out;
  const int nr = L.n_regions();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(L.n_lambda);
  double mu = opt.mu0;
  if (start) {
    if (start->lambda.size() != L.n_lambda) throw std::invalid_argument("resume multipliers have the wrong size");
    lambda = start->lambda;
    mu = start->mu;
  }
  double delta_last = 0.0;
  Mode mode = opt.mode;
  double E0_first = -1.0;
  double E0_prev = std::numeric_limits<double>::infinity();
  double obj_prev = std::numeric_limits<double>::quiet_NaN();
  int increases = 0;
  int stagnant = 0;

  auto finish = [&](Status s, std::string why = {}) {
    out.status = s;
    out.diagnostic = std::move(why);
  };

  for (int k = 0;; ++k) {
    ch.begin_iteration(k);
    std::vector<char> active(nr);
    for (int r = 0; r < nr; ++r) active[r] = ch.active(r) ? 1 : 0;

    IterationRecord rec;
    rec.iteration = k;
    rec.mu = mu;
    rec.mode = mode;

    auto t0 = detail::Clock::now();
    std::vector<local::CondensedBlock> blocks = ch.solve(local::SolveRequest{mu, opt.rho});
    for (int r = 0; r < nr; ++r) {
      if (!active[r]) continue;
      rec.timing.local = std::max(rec.timing.local, blocks[r].t_solve);
      rec.timing.condense = std::max(rec.timing.condense, blocks[r].t_condense);
      rec.inner_iterations = std::max(rec.inner_iterations, blocks[r].inner_iterations);
      rec.inner_converged = rec.inner_converged && blocks[r].inner_converged;
      rec.forward_floats += local::algebraic_floats(blocks[r]);
    }

    std::vector<double> Emu, E0;
    std::vector<Eigen::VectorXd> ax;
    double objective = 0.0;
    for (int r = 0; r < nr; ++r) {
      ax.push_back(blocks[r].Ax);
      if (!active[r]) continue;
      Emu.push_back(blocks[r].E_mu);
      E0.push_back(blocks[r].E0);
      objective += blocks[r].objective;
    }
    // consensus rows of a silent region are left out of the termination test
    const std::vector<char> keep = certifiable_rows(L, active);
    const GlobalResidual gr = global_residual(Emu, E0, mask_rows(scatter_sum(L, ax), keep), mask_rows(L.b, keep));
    rec.E_mu = gr.E_mu;
    rec.E0 = gr.E0;
    rec.objective = objective;
    rec.consensus = gr.consensus;
    out.E0 = gr.E0;
    out.E_mu = gr.E_mu;
    out.objective = objective;
    out.consensus = gr.consensus;
    out.mu = mu;

    StateHash hash;
    hash.add(mu);
    hash.add(gr.E_mu);
    hash.add(gr.E0);
    hash.add(objective);
    hash.add(lambda);

    auto close = [&](Status s, std::string why = {}) {
      rec.hash = hash.value();
      out.records.push_back(rec);
      finish(s, std::move(why));
    };

    if (!std::isfinite(gr.E0) || !std::isfinite(objective)) {
      close(Status::Diverged, "non-finite residual or objective");
      break;
    }
    if (E0_first < 0.0) E0_first = gr.E0;
    if (gr.E0 <= opt.eps) {
      close(Status::Optimal);
      break;
    }
    if (gr.E0 > opt.divergence_factor * std::max(E0_first, opt.eps)) {
      close(Status::Diverged, "E0 exceeded the divergence threshold");
      break;
    }
    if (k >= opt.max_iter) {
      close(Status::IterationCap);
      break;
    }
    if (std::isfinite(obj_prev)) {
      const double rel = std::abs(objective - obj_prev) / std::max(1.0, std::abs(obj_prev));
      stagnant = (rel < opt.stagnation_rel && gr.consensus < opt.stagnation_consensus) ? stagnant + 1 : 0;
    }
    obj_prev = objective;
    if (stagnant >= opt.stagnation_window) {
      close(Status::Stagnation, "relative objective change below threshold");
      break;
    }
    increases = gr.E0 > E0_prev ? increases + 1 : 0;
    E0_prev = gr.E0;
    if (opt.auto_globalize && mode == Mode::FullStep && increases >= opt.fallback_window) {
      mode = Mode::Globalized;
      rec.mode = mode;
    }

    // barrier schedule on the residual of the fresh decoupled solves
    const double mu_next = update_barrier(mu, opt.eps, gr.E_mu, opt.eta_minus);
    rec.barrier_updated = mu_next < mu;

    // distributed inertia correction
    t0 = detail::Clock::now();
    Eigen::MatrixXd W = assemble_W(L, blocks);
    kkt::LdlFactor wf(W);
    bool ok = inertia_condition(L, blocks, active, wf.inertia());
    double dx = 0.0, dg = 0.0;
    if (!ok) {
      auto [d0, eta] = initial_delta(delta_last, opt.reg);
      dx = d0;
      int rounds = 0;
      while (true) {
        int n0 = wf.inertia().zero;
        for (int r = 0; r < nr; ++r)
          if (active[r]) n0 += blocks[r].inertia.zero;
        if (n0 > 0) dg = opt.reg.delta_gamma_factor * mu;
        if (rounds == opt.reg.max_rounds) break;
        ++rounds;
        blocks = ch.correct(local::CorrectionRound{dx, dg});
        W = assemble_W(L, blocks);
        wf.factor(W);
        ok = inertia_condition(L, blocks, active, wf.inertia());
        if (ok) break;
        dx *= eta;
      }
      rec.correction_rounds = rounds;
      if (!ok) {
        rec.timing.coordinate = detail::seconds_since(t0);
        close(Status::Diverged, "inertia correction exceeded " + std::to_string(opt.reg.max_rounds) +
                                    " rounds (last delta_x " + std::to_string(dx) + ")");
        break;
      }
      delta_last = dx;
    }
    rec.delta_x = dx;
    rec.delta_gamma = dg;

    // coordination step on the dual system at the new barrier value
    const Eigen::VectorXd h = assemble_h(L, blocks, mu_next);
    Eigen::VectorXd dlambda = L.n_lambda ? Eigen::VectorXd(wf.solve(Eigen::VectorXd(-h)))
                                         : Eigen::VectorXd::Zero(0);
    rec.timing.coordinate = detail::seconds_since(t0);

    std::vector<local::DualDown> down(nr);
    for (int r = 0; r < nr; ++r) {
      down[r].dlambda = restrict_rows(dlambda, L.coupled_rows[r]);
      down[r].mu = mu_next;
      if (active[r]) rec.backward_floats += local::algebraic_floats(down[r]);
    }
    std::vector<local::StepUp> ups = ch.dual_down(down);
    double beta_p = 1.0, beta_d = 1.0;
    int n_active = 0;
    for (int r = 0; r < nr; ++r) {
      if (!active[r]) continue;
      ++n_active;
      beta_p = std::min(beta_p, ups[r].beta_p);
      beta_d = std::min(beta_d, ups[r].beta_d);
      rec.timing.recover = std::max(rec.timing.recover, ups[r].t_recover);
    }
    rec.backward_floats += n_active;  // β^p broadcast with the sync

    local::StepSync sync;
    sync.beta_p = beta_p;
    sync.lambda_step = beta_d;
    if (mode == Mode::Globalized) {
      const double pen = 10.0 * std::max(1.0, lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0);
      const std::vector<local::MeritReport> m = ch.merit(local::MeritRequest{beta_p});
      const double phi_z = detail::merit_value(L, m, active, pen, [](const auto& x) -> const auto& { return x.at_z; });
      const double phi_x = detail::merit_value(L, m, active, pen, [](const auto& x) -> const auto& { return x.at_x; });
      const double phi_t =
          detail::merit_value(L, m, active, pen, [](const auto& x) -> const auto& { return x.at_trial; });
      double prox = 0.0;
      std::vector<Eigen::VectorXd> mx;
      for (int r = 0; r < nr; ++r) {
        mx.push_back(m[r].at_x.Ax);
        if (active[r]) prox += m[r].prox;
      }
      const double cons = L.n_lambda ? (scatter_sum(L, mx) - L.b).lpNorm<1>() : 0.0;
      const double model_decrease = opt.merit_eta * (prox + pen * cons);
      if (phi_z - phi_t >= model_decrease) {
        rec.stage = 'a';
      } else if (phi_z - phi_x >= model_decrease) {
        rec.stage = 'b';
        sync.alpha2 = 0.0;
        sync.alpha3 = 0.0;
        sync.lambda_step = 0.0;
      } else {
        rec.stage = 'c';
        double best = -std::numeric_limits<double>::infinity();
        double best_a3 = 1.0;
        for (double a3 : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
          const std::vector<local::DualEvalReport> v = ch.dual_eval(local::DualEvalRequest{a3});
          double val = L.n_lambda ? -(lambda + a3 * dlambda).dot(L.b) : 0.0;
          for (int r = 0; r < nr; ++r)
            if (active[r]) val += v[r].value;
          if (val > best) {
            best = val;
            best_a3 = a3;
          }
        }
        sync.alpha1 = 0.0;
        sync.alpha2 = 0.0;
        sync.alpha3 = best_a3;
        sync.lambda_step = best_a3;
      }
    } else {
      sync.lambda_step *= sync.alpha3;
    }

    t0 = detail::Clock::now();
    ch.sync(sync);
    const Eigen::VectorXd lambda_before = lambda;
    if (L.n_lambda) lambda += sync.lambda_step * dlambda;
    rec.timing.sync = detail::seconds_since(t0);

    rec.alpha1 = sync.alpha1;
    rec.alpha2 = sync.alpha2;
    rec.alpha3 = sync.alpha3;
    rec.beta_p = beta_p;
    rec.beta_d = beta_d;
    hash.add(dlambda);
    hash.add(beta_p);
    hash.add(beta_d);
    hash.add(dx);
    rec.hash = hash.value();
    out.records.push_back(rec);
    out.iterations = k + 1;

    if (observer) {
      IterationAudit a;
      a.iteration = k;
      a.mu = mu;
      a.mu_next = mu_next;
      a.blocks = &blocks;
      a.W = std::move(W);
      a.h = h;
      a.dlambda = dlambda;
      a.lambda_before = lambda_before;
      a.delta_x = dx;
      a.delta_gamma = dg;
      a.w_inertia = wf.inertia();
      a.sync = sync;
      observer(a);
    }
    mu = mu_next;
  }
  out.lambda = lambda;
  return out;
}

}  // namespace baladin::coordinate
