#pragma once

#include <string>
#include <vector>

#include "baladin/coordinate/direct.hpp"
#include "baladin/runtime/channel.hpp"

namespace baladin::runtime {

struct RunOutput {
  coordinate::Solution solution;
  Ledger ledger;
  RuntimeOptions runtime;
  bool degraded = false;
  std::string degraded_note;  // which residual components could not be certified
};

/**
 * Distributed solve executed as message exchanges between agent hosts and a
 * coordinator. The iterate trajectory does not depend on `ropt.exec` or on the
 * service order.
 */
inline RunOutput run(const netio::PowerNetwork& net, const partition::Partition& part,
                     const coordinate::SolverOptions& opt = {}, const RuntimeOptions& ropt = {},
                     const coordinate::Observer& observer = {}) {
  opt.validate();
  RunOutput out;
  out.runtime = ropt;
  if (auto why = coordinate::empty_interior(net); !why.empty()) {
    out.solution.status = coordinate::Status::InfeasibleDiagnostic;
    out.solution.diagnostic = why;
    return out;
  }
  const std::vector<local::RegionAgent> agents = coordinate::make_agents(net, part, opt);
  const coordinate::Layout L = coordinate::make_layout(part, agents);
  std::vector<model::RegionProblem> problems;
  for (const auto& a : agents) problems.push_back(a.problem());

  MessageChannel ch(agents, ropt);
  const coordinate::RunResult res = coordinate::run_baladin(ch, L, opt, observer);

  std::vector<local::LocalIterate> its;
  std::vector<char> active(part.n_regions(), 1);
  for (const auto& h : ch.hosts()) its.push_back(h.agent().decoupled());
  for (int r = 0; r < part.n_regions(); ++r) active[r] = ch.active(r) ? 1 : 0;

  out.solution = coordinate::make_solution(res, problems, its, L, opt, active);
  if (ch.failure_triggered()) {
    const int v = ropt.failure->victim;
    out.degraded = true;
    out.degraded_note = "region " + std::to_string(v) + " stopped responding at iteration " +
                        std::to_string(ropt.failure->at_iteration) + "; E^mu_" + std::to_string(v) + " and E^0_" +
                        std::to_string(v) + " are not certified, its consensus rows use the frozen A x";
    if (res.status == coordinate::Status::Optimal || out.solution.status == coordinate::Status::Optimal)
      out.solution.status = coordinate::Status::Degraded;
    if (out.solution.diagnostic.empty() || out.solution.status == coordinate::Status::Degraded)
      out.solution.diagnostic = out.degraded_note;
  }
  out.ledger = ch.ledger();
  return out;
}

}  // namespace baladin::runtime
