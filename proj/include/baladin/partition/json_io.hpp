#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "baladin/netio/matpower.hpp"
#include "baladin/partition/consensus.hpp"

namespace baladin::partition {

/**
 * Partition document:
 *
 *   {"format": "baladin-partition/1", "n_regions", "region_of": {bus id: region},
 *    "regions": [{"core_buses": [ids], "copy_buses": [ids], "lines": [branch index],
 *                 "limit_lines", "generators", "nx", "n_cpl",
 *                 "A": [[row, col, value], ...]}],
 *    "b": [...], "metrics": {"zeta", "xi", "xi_mean", "n_lambda", "n_conn", "nx_max"}}
 *
 * Bus sets use external bus ids; A columns use the region's local variable order.
 */
inline nlohmann::json to_json(const Partition& p, const netio::PowerNetwork& net) {
  using nlohmann::json;
  json j;
  j["format"] = "baladin-partition/1";
  j["n_regions"] = p.n_regions();
  json ro = json::object();
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    ro[std::to_string(net.buses[i].id)] = p.assignment.region_of[i];
  j["region_of"] = ro;
  auto ids = [&](const std::vector<int>& pos) {
    json a = json::array();
    for (int v : pos) a.push_back(net.buses[v].id);
    return a;
  };
  j["regions"] = json::array();
  for (const auto& reg : p.regions) {
    json r;
    r["core_buses"] = ids(reg.core_buses);
    r["copy_buses"] = ids(reg.copy_buses);
    r["lines"] = reg.lines;
    r["limit_lines"] = reg.limit_lines;
    r["generators"] = reg.generators;
    r["nx"] = reg.nx;
    r["n_cpl"] = reg.n_cpl();
    json a = json::array();
    for (int row = 0; row < reg.A.outerSize(); ++row)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(reg.A, row); it; ++it)
        a.push_back({row, it.col(), it.value()});
    r["A"] = a;
    j["regions"].push_back(r);
  }
  j["b"] = std::vector<double>(p.b.data(), p.b.data() + p.b.size());
  const auto m = coupling_metrics(p, net);
  j["metrics"] = {{"zeta", m.network_density}, {"xi", m.xi},         {"xi_mean", m.xi_mean},
                  {"n_lambda", m.n_lambda},    {"n_conn", m.n_conn}, {"nx_max", m.nx_max}};
  return j;
}

/// Reads the region assignment back from a partition document.
inline RegionAssignment assignment_from_json(const nlohmann::json& j, const netio::PowerNetwork& net) {
  RegionAssignment asg;
  try {
    if (j.value("format", std::string()) != "baladin-partition/1")
      throw PartitionError("not a baladin-partition/1 document");
    asg.n_regions = j.at("n_regions").get<int>();
    const auto& ro = j.at("region_of");
    for (const auto& b : net.buses) {
      int r = ro.at(std::to_string(b.id)).get<int>();
      if (r < 0 || r >= asg.n_regions) throw PartitionError("bus " + std::to_string(b.id) + ": region out of range");
      asg.region_of.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw PartitionError(std::string("partition json: ") + e.what());
  }
  std::vector<int> count(asg.n_regions, 0);
  for (int r : asg.region_of) ++count[r];
  for (int r = 0; r < asg.n_regions; ++r)
    if (count[r] == 0) throw PartitionError("region " + std::to_string(r) + " is empty");
  return asg;
}

inline RegionAssignment load_assignment(const std::string& path, const netio::PowerNetwork& net) {
  std::ifstream in(path);
  if (!in) throw netio::IoError(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw netio::ParseError(0, std::string("json: ") + e.what());
  }
  return assignment_from_json(j, net);
}

}  // namespace baladin::partition
