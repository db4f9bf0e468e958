#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "baladin/local/payload.hpp"
#include "baladin/runtime/executor.hpp"
#include "baladin/runtime/ledger.hpp"

namespace baladin::runtime {

enum class ExecMode { Sequential, Parallel };

inline const char* to_string(ExecMode m) { return m == ExecMode::Sequential ? "sequential" : "parallel"; }

/// From iteration `at_iteration` on, region `victim` stops responding.
struct FailureSpec {
  int victim = 0;
  int at_iteration = 1;
};

struct RuntimeOptions {
  ExecMode exec = ExecMode::Sequential;
  std::optional<FailureSpec> failure;
  bool promote_coordinator = false;  // region 0 hosts the coordinator
  unsigned schedule_seed = 0;        // sequential mode: shuffled service order when nonzero
};

/**
 * Coordinator end of the message exchange. Implements the channel interface of
 * the distributed driver; it sees only message payloads and keeps the last
 * contribution of a failed region frozen.
 */
class MessageChannel {
 public:
  MessageChannel(std::vector<local::RegionAgent> agents, const RuntimeOptions& ropt) : ropt_(ropt) {
    const int nr = static_cast<int>(agents.size());
    if (ropt.failure) {
      if (ropt.failure->victim < 0 || ropt.failure->victim >= nr)
        throw std::invalid_argument("failure victim " + std::to_string(ropt.failure->victim) + " is not a region");
      if (ropt.failure->at_iteration < 0) throw std::invalid_argument("failure iteration must be nonnegative");
    }
    std::vector<AgentHost> hosts;
    for (auto& a : agents) hosts.emplace_back(std::move(a));
    if (ropt.exec == ExecMode::Parallel) {
      std::vector<int> inl;
      if (ropt.promote_coordinator && nr > 0) inl.push_back(0);
      exec_ = std::make_unique<ParallelExecutor>(std::move(hosts), inl);
    } else {
      exec_ = std::make_unique<SequentialExecutor>(std::move(hosts), ropt.schedule_seed);
    }
    frozen_.resize(nr);
  }

  int n_regions() const { return static_cast<int>(frozen_.size()); }

  bool active(int r) const {
    // a region can be frozen only once a contribution of it exists
    return !(ropt_.failure && r == ropt_.failure->victim && k_ >= ropt_.failure->at_iteration && frozen_[r]);
  }
  bool failure_triggered() const { return triggered_; }
  void begin_iteration(int k) {
    k_ = k;
    for (int r = 0; r < n_regions(); ++r)
      if (!active(r)) triggered_ = true;
  }

  std::vector<local::CondensedBlock> solve(const local::SolveRequest& q) {
    rho_ = q.rho;
    auto replies = broadcast(q, Kind::SolveRequest);
    std::vector<local::CondensedBlock> out(n_regions());
    for (int r = 0; r < n_regions(); ++r) {
      if (active(r)) {
        out[r] = take<local::CondensedBlock>(replies[r]);
        frozen_[r] = out[r];
      } else {
        out[r] = frozen_block(r);
      }
    }
    return out;
  }

  std::vector<local::CondensedBlock> correct(const local::CorrectionRound& q) {
    auto replies = broadcast(q, Kind::CorrectionRound);
    std::vector<local::CondensedBlock> out(n_regions());
    for (int r = 0; r < n_regions(); ++r)
      out[r] = active(r) ? take<local::CondensedBlock>(replies[r]) : frozen_block(r);
    return out;
  }

  std::vector<local::StepUp> dual_down(const std::vector<local::DualDown>& d) {
    std::vector<Message> req;
    for (int r = 0; r < n_regions(); ++r)
      if (active(r)) req.push_back(request(r, Kind::DualDown, d[r]));
    auto replies = send(req);
    std::vector<local::StepUp> out(n_regions());
    for (int r = 0; r < n_regions(); ++r) {
      if (active(r))
        out[r] = take<local::StepUp>(replies[r]);
      else
        out[r].region = r;
    }
    return out;
  }

  std::vector<local::MeritReport> merit(const local::MeritRequest& q) {
    auto replies = broadcast(q, Kind::MeritRequest);
    std::vector<local::MeritReport> out(n_regions());
    for (int r = 0; r < n_regions(); ++r) {
      if (active(r)) {
        out[r] = take<local::MeritReport>(replies[r]);
      } else {
        out[r].region = r;
        out[r].at_z.Ax = out[r].at_x.Ax = out[r].at_trial.Ax = frozen_[r]->Ax;
      }
    }
    return out;
  }

  std::vector<local::DualEvalReport> dual_eval(const local::DualEvalRequest& q) {
    auto replies = broadcast(q, Kind::DualEvalRequest);
    std::vector<local::DualEvalReport> out(n_regions());
    for (int r = 0; r < n_regions(); ++r) {
      if (active(r))
        out[r] = take<local::DualEvalReport>(replies[r]);
      else
        out[r].region = r;
    }
    return out;
  }

  void sync(const local::StepSync& q) { broadcast(q, Kind::StepSync); }

  const Ledger& ledger() const { return ledger_; }
  Ledger& ledger() { return ledger_; }

  /// Agent states at termination; valid once the run has returned.
  const std::vector<AgentHost>& hosts() const { return exec_->hosts(); }

 private:
  template <class Payload>
  Message request(int r, Kind kind, const Payload& p) const {
    Message m;
    m.iteration = k_;
    m.sender = kCoordinator;
    m.receiver = r;
    m.kind = kind;
    m.payload = p;
    return m;
  }

  template <class Payload>
  std::vector<std::optional<Message>> broadcast(const Payload& p, Kind kind) {
    std::vector<Message> req;
    for (int r = 0; r < n_regions(); ++r)
      if (active(r)) req.push_back(request(r, kind, p));
    return send(req);
  }

  std::vector<std::optional<Message>> send(const std::vector<Message>& req) {
    for (const auto& m : req) ledger_.record(m, is_local(m.receiver));
    auto replies = exec_->exchange(req);
    for (const auto& m : replies)
      if (m) ledger_.record(*m, is_local(m->sender));
    return replies;
  }

  bool is_local(int region) const { return ropt_.promote_coordinator && region == 0; }

  template <class T>
  static T take(std::optional<Message>& m) {
    if (!m) throw std::logic_error("missing reply from an active region");
    return std::get<T>(std::move(m->payload));
  }

  /**
   * Last contribution of a silent region: h = A_ℓx_ℓ (no predicted step) and
   * W = −I/ρ, the block of a region whose coupled variables are held by the
   * proximal term alone. A zero block would leave rows singular when the only
   * responding side of a row is fixed by an equality.
   */
  local::CondensedBlock frozen_block(int r) const {
    local::CondensedBlock b = *frozen_[r];
    const auto n = b.W.rows();
    b.W = -Eigen::MatrixXd::Identity(n, n) / rho_;
    b.h0 = b.Ax;
    b.h_mu.setZero();
    b.inertia = {};
    b.singular = false;
    return b;
  }

  RuntimeOptions ropt_;
  std::unique_ptr<Executor> exec_;
  Ledger ledger_;
  std::vector<std::optional<local::CondensedBlock>> frozen_;
  int k_ = 0;
  double rho_ = 1.0;
  bool triggered_ = false;
};

}  // namespace baladin::runtime
