#pragma once

#include <vector>

#include "baladin/coordinate/driver.hpp"
#include "baladin/coordinate/solution.hpp"
#include "baladin/local/agent.hpp"
#include "baladin/model/opf_builder.hpp"
#include "baladin/partition/consensus.hpp"

namespace baladin::coordinate {

/// In-process channel: calls the agents directly, in region order.
class DirectChannel {
 public:
  explicit DirectChannel(std::vector<local::RegionAgent> agents) : agents_(std::move(agents)) {}

  int n_regions() const { return static_cast<int>(agents_.size()); }
  bool active(int) const { return true; }
  void begin_iteration(int) {}

  std::vector<local::CondensedBlock> solve(const local::SolveRequest& q) { return each<local::CondensedBlock>(q); }
  std::vector<local::CondensedBlock> correct(const local::CorrectionRound& q) { return each<local::CondensedBlock>(q); }
  std::vector<local::StepUp> dual_down(const std::vector<local::DualDown>& d) {
    std::vector<local::StepUp> out;
    for (std::size_t r = 0; r < agents_.size(); ++r) out.push_back(agents_[r].handle(d[r]));
    return out;
  }
  std::vector<local::MeritReport> merit(const local::MeritRequest& q) { return each<local::MeritReport>(q); }
  std::vector<local::DualEvalReport> dual_eval(const local::DualEvalRequest& q) { return each<local::DualEvalReport>(q); }
  void sync(const local::StepSync& q) {
    for (auto& a : agents_) a.handle(q);
  }

  const std::vector<local::RegionAgent>& agents() const { return agents_; }

 private:
  template <class Reply, class Request>
  std::vector<Reply> each(const Request& q) {
    std::vector<Reply> out;
    out.reserve(agents_.size());
    for (auto& a : agents_) out.push_back(a.handle(q));
    return out;
  }

  std::vector<local::RegionAgent> agents_;
};

/// Agents at the flat start for every region of the partition.
inline std::vector<local::RegionAgent> make_agents(const netio::PowerNetwork& net, const partition::Partition& part,
                                                   const SolverOptions& opt) {
  std::vector<local::RegionAgent> agents;
  auto problems = model::build_region_problems(net, part);
  for (int r = 0; r < part.n_regions(); ++r)
    agents.emplace_back(std::move(problems[r]), model::flat_start(net, part.regions[r]), opt.mu0, opt.agent_options());
  return agents;
}

inline Layout make_layout(const partition::Partition& part, const std::vector<local::RegionAgent>& agents) {
  std::vector<int> ne;
  for (const auto& a : agents) ne.push_back(a.problem().n_eq());
  return make_layout(part, ne);
}

/// Packs a finished run into a Solution and re-verifies its certificate.
inline Solution make_solution(const RunResult& run, const std::vector<model::RegionProblem>& problems,
                              const std::vector<local::LocalIterate>& its, const Layout& L, const SolverOptions& opt,
                              const std::vector<char>& active = {}) {
  Solution s;
  s.status = run.status;
  s.diagnostic = run.diagnostic;
  s.objective = run.objective;
  s.E0 = run.E0;
  s.consensus = run.consensus;
  s.mu = run.mu;
  s.iterations = run.iterations;
  s.records = run.records;
  s.regions = its;
  s.lambda = run.lambda;
  s.certificate = certify(problems, its, L, run.lambda, run.mu, opt.eps, active);
  if (s.status == Status::Optimal && !s.certificate.verified) {
    s.status = s.certificate.uncertified.empty() ? Status::Diverged : Status::Degraded;
    s.diagnostic = "independent residual pass did not confirm the certificate";
  }
  return s;
}

/// Distributed solve over the given partition, using the in-process channel.
inline Solution baladin_solve(const netio::PowerNetwork& net, const partition::Partition& part,
                              const SolverOptions& opt = {},
                              const std::function<void(const IterationAudit&, const DirectChannel&)>& observer = {}) {
  opt.validate();
  if (auto why = empty_interior(net); !why.empty()) {
    Solution s;
    s.status = Status::InfeasibleDiagnostic;
    s.diagnostic = why;
    return s;
  }
  DirectChannel ch(make_agents(net, part, opt));
  const Layout L = make_layout(part, ch.agents());
  Observer obs;
  if (observer) obs = [&](const IterationAudit& a) { observer(a, ch); };
  const RunResult run = run_baladin(ch, L, opt, obs);
  std::vector<model::RegionProblem> problems;
  std::vector<local::LocalIterate> its;
  for (const auto& a : ch.agents()) {
    problems.push_back(a.problem());
    its.push_back(a.decoupled());
  }
  return make_solution(run, problems, its, L, opt);
}

}  // namespace baladin::coordinate
