#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <vector>

#include "baladin/runtime/message.hpp"

namespace baladin::runtime {

inline constexpr int kBytesPerFloat = 4;  // single precision on the wire

struct LedgerEntry {
  int iteration = 0;
  bool forward = true;  // agent → coordinator
  Kind kind = Kind::SolveRequest;
  int region = 0;       // the agent end of the exchange
  bool local = false;   // coordinator and agent share a host
  FloatCounts floats;
};

/// Per-iteration totals by direction.
struct IterationTraffic {
  int iteration = 0;
  FloatCounts forward;
  FloatCounts backward;
  int correction_rounds = 0;  // correction rounds sent to any one region
};

/// Append-only record of every message the coordinator sends or receives; coordinator thread only.
class Ledger {
 public:
  void record(const Message& m, bool local) {
    LedgerEntry e;
    e.iteration = m.iteration;
    e.forward = m.forward();
    e.kind = m.kind;
    e.region = e.forward ? m.sender : m.receiver;
    e.local = local;
    e.floats = float_counts(m);
    entries_.push_back(e);
  }

  const std::vector<LedgerEntry>& entries() const { return entries_; }

  std::vector<IterationTraffic> by_iteration() const {
    std::map<int, IterationTraffic> it;
    std::map<int, std::map<int, int>> rounds;  // iteration -> region -> CorrectionRound count
    for (const auto& e : entries_) {
      auto& t = it[e.iteration];
      t.iteration = e.iteration;
      (e.forward ? t.forward : t.backward) += e.floats;
      if (e.kind == Kind::CorrectionRound) ++rounds[e.iteration][e.region];
    }
    std::vector<IterationTraffic> out;
    for (auto& [k, t] : it) {
      for (const auto& [r, n] : rounds[k]) t.correction_rounds = std::max(t.correction_rounds, n);
      out.push_back(t);
    }
    return out;
  }

  /// One row per nonzero category of each message.
  void write_csv(std::ostream& os) const {
    os << "iteration,direction,kind,region,category,floats,bytes\n";
    for (const auto& e : entries_) {
      auto row = [&](const char* cat, long n) {
        if (n == 0) return;
        os << e.iteration << ',' << (e.forward ? "forward" : "backward") << ',' << to_string(e.kind) << ','
           << e.region << ',' << cat << ',' << n << ',' << n * kBytesPerFloat << '\n';
      };
      row("algebraic", e.floats.algebraic);
      row("overhead", e.floats.overhead);
      row("step-sync", e.floats.step_sync);
      row("control", e.floats.control);
      row("inertia-correction", e.floats.inertia_correction);
      row("globalization", e.floats.globalization);
    }
  }

 private:
  std::vector<LedgerEntry> entries_;
};

}  // namespace baladin::runtime
