#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "baladin/partition/consensus.hpp"
#include "baladin/partition/json_io.hpp"
#include "baladin/partition/partitioner.hpp"
#include "fixtures.hpp"

using namespace baladin;
using namespace baladin::partition;

namespace {

netio::PowerNetwork path_network(int n) {
  netio::PowerNetwork net;
  for (int i = 1; i <= n; ++i) {
    netio::Bus b;
    b.id = i;
    b.type = i == 1 ? netio::BusType::Slack : netio::BusType::PQ;
    net.buses.push_back(b);
  }
  for (int i = 1; i < n; ++i) {
    netio::Branch br;
    br.from = i;
    br.to = i + 1;
    br.x = 0.1;
    net.branches.push_back(br);
  }
  netio::Generator g;
  g.bus = 1;
  g.p_max = 1.0;
  net.generators.push_back(g);
  return net;
}

// Smallest cut over all balanced 2-partitions, by enumeration.
int brute_force_cut(const Graph& g, int cap) {
  const int n = g.size();
  int best = -1;
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    std::vector<int> part(n);
    int a = 0;
    for (int v = 0; v < n; ++v) {
      part[v] = (mask >> v) & 1;
      a += part[v];
    }
    if (a > cap || n - a > cap) continue;
    int c = cut_weight(g, part);
    if (best < 0 || c < best) best = c;
  }
  return best;
}

void check_assignment(const Graph& g, const RegionAssignment& asg, int cap) {
  std::vector<int> size(asg.n_regions, 0);
  for (int r : asg.region_of) {
    ASSERT_GE(r, 0);
    ASSERT_LT(r, asg.n_regions);
    ++size[r];
  }
  for (int r = 0; r < asg.n_regions; ++r) {
    EXPECT_GT(size[r], 0);
    EXPECT_LE(size[r], cap);
    // induced subgraph connected
    std::vector<int> verts;
    for (int v = 0; v < g.size(); ++v)
      if (asg.region_of[v] == r) verts.push_back(v);
    std::set<int> seen{verts[0]};
    std::vector<int> stack{verts[0]};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [u, w] : g.adj[v])
        if (asg.region_of[u] == r && seen.insert(u).second) stack.push_back(u);
    }
    EXPECT_EQ(seen.size(), verts.size()) << "region " << r << " disconnected";
  }
}

}  // namespace

TEST(Partition, SingleRegionIsIdentity) {
  auto net = fixtures::load_case(14);
  auto asg = partition_graph(net, 1, 0.05, 3);
  EXPECT_EQ(asg.n_regions, 1);
  for (int r : asg.region_of) EXPECT_EQ(r, 0);
  EXPECT_EQ(cut_weight(bus_graph(net), asg.region_of), 0);
}

TEST(Partition, PathOfFourMatchesBruteForce) {
  auto net = path_network(4);
  auto g = bus_graph(net);
  auto asg = partition_graph(net, 2, 0.0, 1);
  const int cap = balance_cap(4, 2, 0.0);
  EXPECT_EQ(cap, 2);
  EXPECT_EQ(cut_weight(g, asg.region_of), brute_force_cut(g, cap));
  EXPECT_EQ(cut_weight(g, asg.region_of), 1);
  EXPECT_EQ(asg.region_of[0], asg.region_of[1]);
  EXPECT_EQ(asg.region_of[2], asg.region_of[3]);
}

TEST(Partition, Case14TwoWayIsOptimalAgainstEnumeration) {
  auto net = fixtures::load_case(14);
  auto g = bus_graph(net);
  const int cap = balance_cap(14, 2, 0.1);
  auto asg = partition_graph(net, 2, 0.1, 5);
  check_assignment(g, asg, cap);
  // enumeration ignores connectivity, so it bounds the cut from below
  EXPECT_GE(cut_weight(g, asg.region_of), brute_force_cut(g, cap));
  EXPECT_LE(cut_weight(g, asg.region_of), brute_force_cut(g, cap) + 1);
}

TEST(Partition, Case57FourWayBeatsGreedyBaseline) {
  auto net = fixtures::load_case(57);
  auto g = bus_graph(net);
  auto asg = partition_graph(net, 4, 0.05, 11);
  auto base = greedy_baseline(net, 4, 0.05, 11);
  const int cap = balance_cap(57, 4, 0.05);
  EXPECT_EQ(cap, 15);
  check_assignment(g, asg, cap);
  EXPECT_LE(cut_weight(g, asg.region_of), cut_weight(g, base.region_of));
}

TEST(Partition, BalanceHoldsAcrossSeeds) {
  for (int c : {30, 57, 118}) {
    auto net = fixtures::load_case(c);
    auto g = bus_graph(net);
    for (unsigned seed = 0; seed < 20; ++seed) {
      for (int k : {2, 3, 4}) {
        auto asg = partition_graph(net, k, 0.05, seed);
        check_assignment(g, asg, balance_cap(g.size(), k, 0.05));
      }
    }
  }
}

TEST(Partition, DeterministicForSeed) {
  auto net = fixtures::load_case(118);
  EXPECT_EQ(partition_graph(net, 4, 0.05, 9), partition_graph(net, 4, 0.05, 9));
}

TEST(Partition, Errors) {
  auto net = fixtures::two_bus();
  EXPECT_THROW(partition_graph(net, 3, 0.0), PartitionError);
  auto disc = path_network(4);
  disc.branches.erase(disc.branches.begin() + 1);
  EXPECT_THROW(partition_graph(disc, 2, 0.0), PartitionError);
}

TEST(Consensus, SingleRegionHasNoRows) {
  auto net = fixtures::load_case(14);
  auto p = build_consensus(net, partition_graph(net, 1, 0.0));
  EXPECT_EQ(p.n_lambda(), 0);
  EXPECT_EQ(p.n_conn, 0);
  EXPECT_EQ(p.regions[0].n_cpl(), 0);
  EXPECT_EQ(p.regions[0].copy_buses.size(), 0u);
}

TEST(Consensus, TwoBusCut) {
  auto net = fixtures::two_bus();
  RegionAssignment asg{{0, 1}, 2};
  auto p = build_consensus(net, asg);
  EXPECT_EQ(p.n_conn, 1);
  EXPECT_EQ(p.n_lambda(), 4);
  EXPECT_EQ(p.regions[0].n_cpl(), 4);
  EXPECT_EQ(p.regions[1].n_cpl(), 4);
  std::set<int> shared;
  for (const auto& row : p.rows) shared.insert(row.bus);
  EXPECT_EQ(shared.size(), 2u);
  EXPECT_EQ(p.regions[0].lines, std::vector<int>{0});
  EXPECT_EQ(p.regions[1].lines, std::vector<int>{0});
  EXPECT_EQ(p.regions[0].limit_lines, std::vector<int>{0});
  EXPECT_TRUE(p.regions[1].limit_lines.empty());
  EXPECT_EQ(p.regions[0].generators.size(), 1u);
  EXPECT_TRUE(p.regions[1].generators.empty());
}

TEST(Consensus, StructuralInvariants) {
  for (int c : {14, 30, 57, 118}) {
    auto net = fixtures::load_case(c);
    for (int k : {2, 3, 4}) {
      auto p = build_consensus(net, partition_graph(net, k, 0.05, 2));
      // one +1 on a core variable, one −1 on a copy per row
      for (int row = 0; row < p.n_lambda(); ++row) {
        int plus = 0, minus = 0;
        for (int r = 0; r < k; ++r)
          for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(p.regions[r].A, row); it; ++it) {
            if (it.value() == 1.0) {
              ++plus;
              EXPECT_EQ(r, p.rows[row].owner);
            } else if (it.value() == -1.0) {
              ++minus;
              EXPECT_EQ(r, p.rows[row].copy_region);
            }
          }
        EXPECT_EQ(plus, 1);
        EXPECT_EQ(minus, 1);
      }
      // N^cpl equals the number of nonzero rows
      for (const auto& reg : p.regions) {
        int nz = 0;
        for (int row = 0; row < reg.A.rows(); ++row) nz += reg.A.row(row).nonZeros() > 0;
        EXPECT_EQ(reg.n_cpl(), nz);
      }
      // cut lines appear exactly once in each adjacent region, limits once overall
      auto idx = net.bus_index();
      std::vector<int> limit_count(net.branches.size(), 0);
      for (const auto& reg : p.regions)
        for (int e : reg.limit_lines) ++limit_count[e];
      for (std::size_t e = 0; e < net.branches.size(); ++e) {
        EXPECT_EQ(limit_count[e], 1);
        int rf = p.assignment.region_of[idx.at(net.branches[e].from)];
        int rt = p.assignment.region_of[idx.at(net.branches[e].to)];
        for (int r = 0; r < k; ++r) {
          auto n = std::count(p.regions[r].lines.begin(), p.regions[r].lines.end(), static_cast<int>(e));
          EXPECT_EQ(n, (r == rf || r == rt) ? 1 : 0);
        }
      }
      // core sets reconstruct the bus set exactly; generators appear once
      std::vector<int> core_count(net.buses.size(), 0), gen_count(net.generators.size(), 0);
      for (const auto& reg : p.regions) {
        for (int b : reg.core_buses) ++core_count[b];
        for (int g : reg.generators) ++gen_count[g];
      }
      for (int cnt : core_count) EXPECT_EQ(cnt, 1);
      for (int cnt : gen_count) EXPECT_EQ(cnt, 1);
      // consistent voltages satisfy the consensus exactly
      Eigen::VectorXd uv = Eigen::VectorXd::Random(2 * net.buses.size());
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(p.n_lambda());
      for (const auto& reg : p.regions) {
        Eigen::VectorXd x = Eigen::VectorXd::Random(reg.nx);
        for (int l = 0; l < reg.n_local_buses(); ++l) {
          x[reg.u_index(l)] = uv[reg.local_buses[l]];
          x[reg.w_index(l)] = uv[net.buses.size() + reg.local_buses[l]];
        }
        sum += reg.A * x;
      }
      EXPECT_EQ(p.n_lambda() == 0 ? 0.0 : (sum - p.b).cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Consensus, CouplingMetrics) {
  auto net = fixtures::two_bus();
  auto p = build_consensus(net, RegionAssignment{{0, 1}, 2});
  auto m = coupling_metrics(p, net);
  EXPECT_DOUBLE_EQ(m.network_density, 0.5);
  // region 0: buses {1, 2'}, one generator → nx = 6, N^cpl = 4
  EXPECT_DOUBLE_EQ(m.xi[0], 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.xi[1], 1.0);
  EXPECT_EQ(m.n_lambda, 4);
  EXPECT_EQ(m.n_conn, 1);
  for (int c : {57, 118}) {
    auto n2 = fixtures::load_case(c);
    for (int k : {2, 4}) {
      auto m2 = coupling_metrics(build_consensus(n2, partition_graph(n2, k, 0.05, 1)), n2);
      for (double x : m2.xi) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
      }
    }
  }
}

TEST(Consensus, CouplingDensityGrowsWithRegionCount) {
  auto net = fixtures::load_case(118);
  double prev = -1.0;
  for (int k : {2, 4, 8}) {
    double mean = 0.0;
    for (unsigned seed = 0; seed < 20; ++seed)
      mean += coupling_metrics(build_consensus(net, partition_graph(net, k, 0.05, seed)), net).xi_mean;
    mean /= 20.0;
    EXPECT_GT(mean, prev) << "k = " << k;
    prev = mean;
  }
}

TEST(Consensus, JsonAssignmentRoundTrip) {
  auto net = fixtures::load_case(30);
  auto asg = partition_graph(net, 3, 0.05, 4);
  auto p = build_consensus(net, asg);
  auto j = to_json(p, net);
  EXPECT_EQ(assignment_from_json(nlohmann::json::parse(j.dump()), net), asg);
  EXPECT_EQ(j["metrics"]["n_lambda"].get<int>(), p.n_lambda());
}
