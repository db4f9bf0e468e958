#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <algorithm>
#include <vector>

#include "baladin/netio/matpower.hpp"
#include "baladin/partition/consensus.hpp"
#include "baladin/partition/partitioner.hpp"

namespace fixtures {

inline std::string data_path(const std::string& rel) { return std::string(BALADIN_DATA_DIR) + "/" + rel; }

inline std::string case_path(int n) {
  return data_path("cases/pglib_opf_case" + std::to_string(n) + "_ieee.m");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline baladin::netio::PowerNetwork load_case(int n) { return baladin::netio::load_matpower(case_path(n)); }

inline baladin::netio::PowerNetwork two_bus() {
  return baladin::netio::load_matpower(data_path("fixtures/two_bus.m"));
}

inline baladin::netio::PowerNetwork four_bus() {
  return baladin::netio::load_matpower(data_path("fixtures/four_bus.m"));
}

inline baladin::partition::Partition split(const baladin::netio::PowerNetwork& net, std::vector<int> asg) {
  const int k = *std::max_element(asg.begin(), asg.end()) + 1;
  return baladin::partition::build_consensus(net, baladin::partition::RegionAssignment{std::move(asg), k});
}

/// Graph partition with 10% imbalance and seed 1.
inline baladin::partition::Partition graph_split(const baladin::netio::PowerNetwork& net, int k) {
  return baladin::partition::build_consensus(net, baladin::partition::partition_graph(net, k, 0.1, 1));
}

/// Replaces the first occurrence of `from` in `text`.
inline std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

}  // namespace fixtures
