#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "baladin/netio/matpower.hpp"
#include "baladin/netio/network.hpp"

namespace baladin::netio {

/**
 * JSON interchange for PowerNetwork. Field names mirror the struct members;
 * all values are per-unit and radians, `s_max` is null when unbounded.
 *
 *   {"format": "baladin-network/1", "base_mva": 100,
 *    "buses": [{"id", "type": "PQ"|"PV"|"slack", "p_load", "q_load", "v_min", "v_max",
 *               "g_shunt", "b_shunt"}],
 *    "branches": [{"from", "to", "r", "x", "b_charging", "tap", "shift", "s_max",
 *                  "angle_min", "angle_max"}],
 *    "generators": [{"bus", "p_min", "p_max", "q_min", "q_max", "cost_a2", "cost_a1", "cost_a0"}]}
 */
inline nlohmann::json to_json(const PowerNetwork& net) {
  using nlohmann::json;
  json j;
  j["format"] = "baladin-network/1";
  j["base_mva"] = net.base_mva;
  j["buses"] = json::array();
  for (const auto& b : net.buses)
    j["buses"].push_back({{"id", b.id},
                          {"type", to_string(b.type)},
                          {"p_load", b.p_load},
                          {"q_load", b.q_load},
                          {"v_min", b.v_min},
                          {"v_max", b.v_max},
                          {"g_shunt", b.g_shunt},
                          {"b_shunt", b.b_shunt}});
  j["branches"] = json::array();
  for (const auto& br : net.branches)
    j["branches"].push_back({{"from", br.from},
                             {"to", br.to},
                             {"r", br.r},
                             {"x", br.x},
                             {"b_charging", br.b_charging},
                             {"tap", br.tap},
                             {"shift", br.shift},
                             {"s_max", br.s_max ? json(*br.s_max) : json(nullptr)},
                             {"angle_min", br.angle_min},
                             {"angle_max", br.angle_max}});
  j["generators"] = json::array();
  for (const auto& g : net.generators)
    j["generators"].push_back({{"bus", g.bus},
                               {"p_min", g.p_min},
                               {"p_max", g.p_max},
                               {"q_min", g.q_min},
                               {"q_max", g.q_max},
                               {"cost_a2", g.cost_a2},
                               {"cost_a1", g.cost_a1},
                               {"cost_a0", g.cost_a0}});
  return j;
}

inline PowerNetwork network_from_json(const nlohmann::json& j) {
  PowerNetwork net;
  try {
    if (j.value("format", std::string()) != "baladin-network/1")
      throw SemanticError("format", "not a baladin-network/1 document");
    net.base_mva = j.at("base_mva").get<double>();
    for (const auto& jb : j.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      const std::string type = jb.at("type").get<std::string>();
      if (type == "PQ") b.type = BusType::PQ;
      else if (type == "PV") b.type = BusType::PV;
      else if (type == "slack") b.type = BusType::Slack;
      else throw SemanticError("bus " + std::to_string(b.id), "unknown type '" + type + "'");
      b.p_load = jb.at("p_load").get<double>();
      b.q_load = jb.at("q_load").get<double>();
      b.v_min = jb.at("v_min").get<double>();
      b.v_max = jb.at("v_max").get<double>();
      b.g_shunt = jb.at("g_shunt").get<double>();
      b.b_shunt = jb.at("b_shunt").get<double>();
      net.buses.push_back(b);
    }
    for (const auto& jr : j.at("branches")) {
      Branch br;
      br.from = jr.at("from").get<int>();
      br.to = jr.at("to").get<int>();
      br.r = jr.at("r").get<double>();
      br.x = jr.at("x").get<double>();
      br.b_charging = jr.at("b_charging").get<double>();
      br.tap = jr.at("tap").get<double>();
      br.shift = jr.at("shift").get<double>();
      if (!jr.at("s_max").is_null()) br.s_max = jr.at("s_max").get<double>();
      br.angle_min = jr.at("angle_min").get<double>();
      br.angle_max = jr.at("angle_max").get<double>();
      net.branches.push_back(br);
    }
    for (const auto& jg : j.at("generators")) {
      Generator g;
      g.bus = jg.at("bus").get<int>();
      g.p_min = jg.at("p_min").get<double>();
      g.p_max = jg.at("p_max").get<double>();
      g.q_min = jg.at("q_min").get<double>();
      g.q_max = jg.at("q_max").get<double>();
      g.cost_a2 = jg.at("cost_a2").get<double>();
      g.cost_a1 = jg.at("cost_a1").get<double>();
      g.cost_a0 = jg.at("cost_a0").get<double>();
      net.generators.push_back(g);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SemanticError("network json", e.what());
  }
  validate(net);
  return net;
}

inline void save_network_json(const PowerNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path);
  out << to_json(net).dump(1) << '\n';
}

/// Loads a network from either a `.json` interchange file or a MATPOWER `.m` file.
inline PowerNetwork load_network(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw IoError(path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(0, std::string("json: ") + e.what());
    }
    return network_from_json(j);
  }
  return load_matpower(path);
}

}  // namespace baladin::netio
