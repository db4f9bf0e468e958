#pragma once

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "baladin/local/agent.hpp"
#include "baladin/runtime/message.hpp"

namespace baladin::runtime {

/// Owns one agent and turns request messages into reply messages.
class AgentHost {
 public:
  explicit AgentHost(local::RegionAgent agent) : agent_(std::move(agent)) {}

  int region() const { return agent_.region(); }

  std::optional<Message> process(const Message& m) {
    Message out;
    out.iteration = m.iteration;
    out.sender = agent_.region();
    out.receiver = kCoordinator;
    // agent state is reached only through the payload handlers
    const bool reply = std::visit(
        [&](const auto& p) -> bool {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, local::SolveRequest>) {
            out.kind = Kind::CondensedUp;
            out.payload = agent_.handle(p);
          } else if constexpr (std::is_same_v<T, local::CorrectionRound>) {
            out.kind = Kind::CorrectionUp;
            out.payload = agent_.handle(p);
          } else if constexpr (std::is_same_v<T, local::DualDown>) {
            out.kind = Kind::StepUp;
            out.payload = agent_.handle(p);
          } else if constexpr (std::is_same_v<T, local::MeritRequest>) {
            out.kind = Kind::MeritUp;
            out.payload = agent_.handle(p);
          } else if constexpr (std::is_same_v<T, local::DualEvalRequest>) {
            out.kind = Kind::DualEvalUp;
            out.payload = agent_.handle(p);
          } else if constexpr (std::is_same_v<T, local::StepSync>) {
            agent_.handle(p);
            return false;
          } else {
            throw std::logic_error("agent received a reply-type message");
          }
          return true;
        },
        m.payload);
    if (!reply) return std::nullopt;
    return out;
  }

  /// Final state, read after the workers have stopped.
  const local::RegionAgent& agent() const { return agent_; }

 private:
  local::RegionAgent agent_;
};

/**
 * Delivers a batch of requests and blocks until every recipient has processed
 * its message (a full barrier). Replies are returned indexed by region.
 */
class Executor {
 public:
  virtual ~Executor() = default;
  virtual std::vector<std::optional<Message>> exchange(const std::vector<Message>& requests) = 0;
  virtual std::vector<AgentHost>& hosts() = 0;
};

/// Runs agents on the calling thread; `schedule_seed` != 0 shuffles the service order.
class SequentialExecutor final : public Executor {
 public:
  SequentialExecutor(std::vector<AgentHost> hosts, unsigned schedule_seed = 0)
      : hosts_(std::move(hosts)), rng_(schedule_seed), shuffle_(schedule_seed != 0) {}

  std::vector<std::optional<Message>> exchange(const std::vector<Message>& requests) override {
    std::vector<std::optional<Message>> out(hosts_.size());
    std::vector<std::size_t> order(requests.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle_) std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t i : order) {
      const Message& m = requests[i];
      out[m.receiver] = hosts_[m.receiver].process(m);
    }
    return out;
  }

  std::vector<AgentHost>& hosts() override { return hosts_; }

 private:
  std::vector<AgentHost> hosts_;
  std::mt19937 rng_;
  bool shuffle_;
};

/**
 * One worker thread per region with a private mailbox. Regions listed in
 * `inline_regions` are served on the calling thread instead (a region that
 * shares its host with the coordinator).
 */
class ParallelExecutor final : public Executor {
 public:
  explicit ParallelExecutor(std::vector<AgentHost> hosts, std::vector<int> inline_regions = {})
      : hosts_(std::move(hosts)), inline_(hosts_.size(), 0) {
    for (int r : inline_regions) inline_.at(r) = 1;
    boxes_.reserve(hosts_.size());
    for (std::size_t r = 0; r < hosts_.size(); ++r) boxes_.push_back(std::make_unique<Mailbox>());
    for (std::size_t r = 0; r < hosts_.size(); ++r)
      if (!inline_[r]) workers_.emplace_back([this, r] { serve(r); });
  }

  ~ParallelExecutor() override {
    for (std::size_t r = 0; r < hosts_.size(); ++r) {
      std::lock_guard<std::mutex> g(boxes_[r]->m);
      boxes_[r]->stop = true;
      boxes_[r]->cv.notify_one();
    }
    for (auto& t : workers_) t.join();
  }

  ParallelExecutor(const ParallelExecutor&) = delete;
  ParallelExecutor& operator=(const ParallelExecutor&) = delete;

  std::vector<std::optional<Message>> exchange(const std::vector<Message>& requests) override {
    std::vector<std::optional<Message>> out(hosts_.size());
    {
      std::lock_guard<std::mutex> g(done_m_);
      pending_ = 0;
      for (const auto& m : requests)
        if (!inline_[m.receiver]) ++pending_;
      replies_ = &out;
    }
    for (const auto& m : requests) {
      if (inline_[m.receiver]) continue;
      Mailbox& b = *boxes_[m.receiver];
      std::lock_guard<std::mutex> g(b.m);
      b.q.push_back(m);
      b.cv.notify_one();
    }
    std::exception_ptr local_err;
    try {
      for (const auto& m : requests)
        if (inline_[m.receiver]) out[m.receiver] = hosts_[m.receiver].process(m);
    } catch (...) {
      local_err = std::current_exception();  // still wait: workers write into `out`
    }
    std::unique_lock<std::mutex> g(done_m_);
    if (local_err && !error_) error_ = local_err;
    done_cv_.wait(g, [&] { return pending_ == 0; });
    replies_ = nullptr;
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
    return out;
  }

  std::vector<AgentHost>& hosts() override { return hosts_; }

 private:
  struct Mailbox {
    std::mutex m;
    std::condition_variable cv;
    std::deque<Message> q;
    bool stop = false;
  };

  void serve(std::size_t r) {
    Mailbox& b = *boxes_[r];
    while (true) {
      Message m;
      {
        std::unique_lock<std::mutex> g(b.m);
        b.cv.wait(g, [&] { return b.stop || !b.q.empty(); });
        if (b.q.empty()) return;
        m = std::move(b.q.front());
        b.q.pop_front();
      }
      std::optional<Message> reply;
      std::exception_ptr err;
      try {
        reply = hosts_[r].process(m);
      } catch (...) {
        err = std::current_exception();
      }
      std::lock_guard<std::mutex> g(done_m_);
      (*replies_)[r] = std::move(reply);  // each worker writes only its own slot
      if (err && !error_) error_ = err;
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }

  std::vector<AgentHost> hosts_;
  std::vector<char> inline_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::vector<std::thread> workers_;
  std::mutex done_m_;
  std::condition_variable done_cv_;
  int pending_ = 0;
  std::exception_ptr error_;
  std::vector<std::optional<Message>>* replies_ = nullptr;
};

}  // namespace baladin::runtime
