#pragma once

#include <string>
#include <vector>

#include "baladin/partition/consensus.hpp"
#include "baladin/runtime/ledger.hpp"

namespace baladin::runtime {

struct RegionShape {
  int region = 0;
  long nx = 0;
  long ncpl = 0;
  double xi = 0.0;  // N^cpl / N^x
};

/// Closed-form per-iteration float counts for one method: forward, backward, total.
struct ClosedForm {
  std::string forward_expr, backward_expr, total_expr;
  double forward = 0.0, backward = 0.0, total = 0.0;
  double mb_forward() const { return forward * kBytesPerFloat / 1e6; }
  double mb_backward() const { return backward * kBytesPerFloat / 1e6; }
  double mb_total() const { return total * kBytesPerFloat / 1e6; }
};

struct IterationComm {
  IterationTraffic measured;
  long predicted_forward = 0;   // Σ[2N^cpl + N^cpl(N^cpl+1)/2]
  long predicted_backward = 0;  // N^reg + ΣN^cpl over responding regions
  bool forward_exact = false;
  bool backward_exact = false;
};

struct CommReport {
  std::vector<RegionShape> regions;
  double xi_mean = 0.0;
  std::vector<IterationComm> iterations;
  FloatCounts total_forward, total_backward;
  bool exact = true;  // every iteration matches the prediction
  ClosedForm admm, aladin, baladin;
  ClosedForm baladin_derived;  // backward N^reg + ΣN^cpl instead of the tabulated 2N^reg + ΣξN^x
};

namespace detail {

inline long forward_prediction(long c) { return 2 * c + c * (c + 1) / 2; }

}  // namespace detail

/**
 * Measured traffic per iteration against the closed-form counts for BALADIN,
 * and the per-iteration communication of consensus ADMM and ALADIN on the same
 * region shapes.
 *
 * Per-iteration predictions use the regions that took part in that iteration
 * (those the coordinator exchanged a CondensedUp with).
 */
inline CommReport comm_report(const Ledger& ledger, const partition::Partition& part,
                              const netio::PowerNetwork& net) {
  CommReport rep;
  const auto cm = partition::coupling_metrics(part, net);
  const int nreg = part.n_regions();
  for (int r = 0; r < nreg; ++r) {
    RegionShape s;
    s.region = r;
    s.nx = cm.nx[r];
    s.ncpl = cm.n_cpl[r];
    s.xi = s.nx ? static_cast<double>(s.ncpl) / static_cast<double>(s.nx) : 0.0;
    rep.regions.push_back(s);
    rep.xi_mean += s.xi / nreg;
  }

  for (const auto& t : ledger.by_iteration()) {
    IterationComm ic;
    ic.measured = t;
    std::vector<char> seen(nreg, 0);
    for (const auto& e : ledger.entries())
      if (e.iteration == t.iteration && e.kind == Kind::CondensedUp) seen[e.region] = 1;
    bool stepped = false;
    for (const auto& e : ledger.entries())
      if (e.iteration == t.iteration && e.kind == Kind::DualDown) stepped = true;
    for (int r = 0; r < nreg; ++r) {
      if (!seen[r]) continue;
      ic.predicted_forward += detail::forward_prediction(rep.regions[r].ncpl);
      if (stepped) ic.predicted_backward += 1 + rep.regions[r].ncpl;
    }
    ic.forward_exact = ic.predicted_forward == t.forward.algebraic;
    ic.backward_exact = ic.predicted_backward == t.backward.algebraic + t.backward.step_sync;
    rep.exact = rep.exact && ic.forward_exact && ic.backward_exact;
    rep.total_forward += t.forward;
    rep.total_backward += t.backward;
    rep.iterations.push_back(ic);
  }

  double sn = 0, sn2 = 0, sxin = 0, sxi2n2 = 0;
  long scpl = 0;
  for (const auto& s : rep.regions) {
    const double n = static_cast<double>(s.nx);
    sn += n;
    sn2 += n * n;
    sxin += s.xi * n;
    sxi2n2 += s.xi * s.xi * n * n;
    scpl += s.ncpl;
  }
  const double R = nreg;

  rep.admm.forward_expr = "sum 2 N^x";
  rep.admm.backward_expr = "sum N^x";
  rep.admm.total_expr = "sum 3 N^x";
  rep.admm.forward = 2 * sn;
  rep.admm.backward = sn;
  rep.admm.total = 3 * sn;

  rep.aladin.forward_expr = "sum (N^x)^2 + (3 + 2 xi)/2 N^x";
  rep.aladin.backward_expr = "sum (1 + xi) N^x";
  rep.aladin.total_expr = "sum (N^x)^2 + (5 + 4 xi)/2 N^x";
  rep.aladin.forward = sn2 + 1.5 * sn + sxin;
  rep.aladin.backward = sn + sxin;
  rep.aladin.total = sn2 + 2.5 * sn + 2 * sxin;

  rep.baladin.forward_expr = "sum xi^2/2 (N^x)^2 + 5 xi/2 N^x";
  rep.baladin.backward_expr = "2 N^reg + sum xi N^x";
  rep.baladin.total_expr = "2 N^reg + sum xi^2/2 (N^x)^2 + 7 xi/2 N^x";
  rep.baladin.forward = 0.5 * sxi2n2 + 2.5 * sxin;
  rep.baladin.backward = 2 * R + sxin;
  rep.baladin.total = 2 * R + 0.5 * sxi2n2 + 3.5 * sxin;

  rep.baladin_derived = rep.baladin;
  rep.baladin_derived.forward_expr = "sum 2 N^cpl + N^cpl (N^cpl + 1)/2";
  rep.baladin_derived.backward_expr = "N^reg + sum N^cpl";
  rep.baladin_derived.total_expr = "N^reg + sum 3 N^cpl + N^cpl (N^cpl + 1)/2";
  long fwd = 0;
  for (const auto& s : rep.regions) fwd += detail::forward_prediction(s.ncpl);
  rep.baladin_derived.forward = static_cast<double>(fwd);
  rep.baladin_derived.backward = R + static_cast<double>(scpl);
  rep.baladin_derived.total = rep.baladin_derived.forward + rep.baladin_derived.backward;
  return rep;
}

}  // namespace baladin::runtime
