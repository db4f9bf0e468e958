#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace baladin::netio {

inline constexpr double kHalfPi = 1.57079632679489661923;

/// Raised for malformed case text; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Raised when a syntactically valid case violates a model invariant.
/// `record` names the offending record (e.g. "bus 99", "gencost row 3").
class SemanticError : public std::runtime_error {
 public:
  SemanticError(std::string record, const std::string& what)
      : std::runtime_error(record + ": " + what), record_(std::move(record)) {}
  const std::string& record() const noexcept { return record_; }

 private:
  std::string record_;
};

enum class BusType { PQ, PV, Slack };

inline const char* to_string(BusType t) {
  switch (t) {
    case BusType::PQ: return "PQ";
    case BusType::PV: return "PV";
    case BusType::Slack: return "slack";
  }
  return "?";
}

struct Bus {
  int id = 0;
  BusType type = BusType::PQ;
  double p_load = 0.0;  // pu
  double q_load = 0.0;  // pu
  double v_min = 0.9;   // pu
  double v_max = 1.1;   // pu
  double g_shunt = 0.0; // pu at 1 pu voltage
  double b_shunt = 0.0;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_charging = 0.0;  // total line charging
  double tap = 1.0;         // off-nominal ratio, 1 for lines
  double shift = 0.0;       // rad
  std::optional<double> s_max;  // pu; empty means unbounded
  double angle_min = -kHalfPi;  // rad
  double angle_max = kHalfPi;   // rad

  bool operator==(const Branch&) const = default;
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double cost_a2 = 0.0;  // $/pu^2
  double cost_a1 = 0.0;  // $/pu
  double cost_a0 = 0.0;  // $

  bool operator==(const Generator&) const = default;
};

/// Validated per-unit network model.
struct PowerNetwork {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;

  std::size_t bus_count() const { return buses.size(); }

  /// Map from external bus id to position in `buses`.
  std::unordered_map<int, int> bus_index() const {
    std::unordered_map<int, int> idx;
    idx.reserve(buses.size());
    for (std::size_t i = 0; i < buses.size(); ++i) idx.emplace(buses[i].id, static_cast<int>(i));
    return idx;
  }

  int slack_position() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].type == BusType::Slack) return static_cast<int>(i);
    return -1;
  }

  bool operator==(const PowerNetwork&) const = default;
};

/// Checks every structural invariant of the model; throws SemanticError on the
/// first violation.
inline void validate(const PowerNetwork& net) {
  if (!(net.base_mva > 0.0)) throw SemanticError("baseMVA", "must be positive");
  if (net.buses.empty()) throw SemanticError("bus table", "no buses");

  std::unordered_map<int, int> seen;
  int slack_count = 0;
  for (const auto& bus : net.buses) {
    const std::string rec = "bus " + std::to_string(bus.id);
    if (!seen.emplace(bus.id, 1).second) throw SemanticError(rec, "duplicate bus id");
    if (bus.type == BusType::Slack) ++slack_count;
    if (!(bus.v_min <= bus.v_max)) throw SemanticError(rec, "v_min exceeds v_max");
    if (!(bus.v_min >= 0.0)) throw SemanticError(rec, "negative v_min");
  }
  if (slack_count == 0) throw SemanticError("bus table", "no slack bus");
  if (slack_count > 1) throw SemanticError("bus table", "more than one slack bus");

  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    const std::string rec = "branch " + std::to_string(k + 1);
    if (!seen.count(br.from))
      throw SemanticError("bus " + std::to_string(br.from), rec + " references undeclared bus");
    if (!seen.count(br.to))
      throw SemanticError("bus " + std::to_string(br.to), rec + " references undeclared bus");
    if (br.from == br.to) throw SemanticError(rec, "self loop");
    if (!(br.r >= 0.0)) throw SemanticError(rec, "negative resistance");
    if (br.x == 0.0 && br.r == 0.0) throw SemanticError(rec, "zero impedance");
    if (br.x == 0.0) throw SemanticError(rec, "zero reactance");
    if (!(br.tap > 0.0)) throw SemanticError(rec, "non-positive tap ratio");
    if (br.s_max && !(*br.s_max > 0.0)) throw SemanticError(rec, "non-positive flow limit");
    if (!(br.angle_min <= br.angle_max)) throw SemanticError(rec, "angle_min exceeds angle_max");
  }

  for (std::size_t k = 0; k < net.generators.size(); ++k) {
    const auto& g = net.generators[k];
    const std::string rec = "generator " + std::to_string(k + 1);
    if (!seen.count(g.bus))
      throw SemanticError("bus " + std::to_string(g.bus), rec + " references undeclared bus");
    if (!(g.p_min <= g.p_max)) throw SemanticError(rec, "p_min exceeds p_max");
    if (!(g.q_min <= g.q_max)) throw SemanticError(rec, "q_min exceeds q_max");
    if (!(g.cost_a2 >= 0.0)) throw SemanticError(rec, "negative quadratic cost (non-convex objective)");
    if (!std::isfinite(g.cost_a1) || !std::isfinite(g.cost_a0))
      throw SemanticError(rec, "non-finite cost coefficient");
  }
}

}  // namespace baladin::netio
