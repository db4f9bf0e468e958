#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include <Eigen/Sparse>

#include "baladin/netio/network.hpp"
#include "baladin/partition/partitioner.hpp"

namespace baladin::partition {

/// One region's share of the network and its consensus block.
struct Region {
  std::vector<int> core_buses;   // bus positions owned by this region, ascending
  std::vector<int> copy_buses;   // bus positions copied from neighbors, ascending
  std::vector<int> local_buses;  // core then copies; defines the u/w variable order
  std::vector<int> lines;        // branch indices with at least one core endpoint
  std::vector<int> limit_lines;  // subset whose flow and angle limits this region carries
  std::vector<int> generators;   // generator indices at core buses
  std::vector<int> local_of;     // bus position -> local bus index, or -1

  int nx = 0;  // 2·|local_buses| + 2·|generators|

  /// Consensus block A_ℓ (N^λ × nx).
  Eigen::SparseMatrix<double, Eigen::RowMajor> A;
  /// Global consensus rows where A_ℓ is nonzero, ascending; size is N^cpl_ℓ.
  std::vector<int> coupled_rows;

  int n_local_buses() const { return static_cast<int>(local_buses.size()); }
  int u_index(int local_bus) const { return local_bus; }
  int w_index(int local_bus) const { return n_local_buses() + local_bus; }
  int pg_index(int local_gen) const { return 2 * n_local_buses() + local_gen; }
  int qg_index(int local_gen) const {
    return 2 * n_local_buses() + static_cast<int>(generators.size()) + local_gen;
  }
  int n_cpl() const { return static_cast<int>(coupled_rows.size()); }

  /// Rows of A_ℓ restricted to `coupled_rows` (N^cpl_ℓ × nx), dense.
  Eigen::MatrixXd coupled_block() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_cpl(), nx);
    for (int i = 0; i < n_cpl(); ++i)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, coupled_rows[i]); it; ++it)
        out(i, it.col()) = it.value();
    return out;
  }
};

/// Consensus row descriptor: copy of `bus` held by `copy_region`, component 0 = u, 1 = w.
struct ConsensusRow {
  int bus = 0;
  int owner = 0;
  int copy_region = 0;
  int component = 0;
};

struct Partition {
  RegionAssignment assignment;
  std::vector<Region> regions;
  std::vector<ConsensusRow> rows;
  Eigen::VectorXd b;
  int n_conn = 0;  // interconnecting (cut) lines

  int n_regions() const { return static_cast<int>(regions.size()); }
  int n_lambda() const { return static_cast<int>(rows.size()); }
  int total_nx() const {
    int n = 0;
    for (const auto& r : regions) n += r.nx;
    return n;
  }
};

/**
 * Derives core/copy sets, local line sets and the consensus matrices.
 *
 * Each bus is core in its assigned region. A region copies every neighbor of its
 * core buses that lives elsewhere, and each copy contributes two rows (u, w)
 * with +1 on the owner's core variable and −1 on the copy. Cut-line limits go to
 * the lower-indexed endpoint region.
 */
inline Partition build_consensus(const netio::PowerNetwork& net, const RegionAssignment& asg) {
  const int nb = static_cast<int>(net.buses.size());
  const int k = asg.n_regions;
  const auto idx = net.bus_index();
  Partition p;
  p.assignment = asg;
  p.regions.resize(k);

  std::vector<std::vector<int>> copies(k);
  for (int r = 0; r < k; ++r) {
    auto& reg = p.regions[r];
    reg.local_of.assign(nb, -1);
  }
  for (int i = 0; i < nb; ++i) p.regions[asg.region_of[i]].core_buses.push_back(i);

  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    const int f = idx.at(net.branches[e].from);
    const int t = idx.at(net.branches[e].to);
    const int rf = asg.region_of[f];
    const int rt = asg.region_of[t];
    p.regions[rf].lines.push_back(static_cast<int>(e));
    if (rt != rf) {
      p.regions[rt].lines.push_back(static_cast<int>(e));
      copies[rf].push_back(t);
      copies[rt].push_back(f);
      ++p.n_conn;
      p.regions[std::min(rf, rt)].limit_lines.push_back(static_cast<int>(e));
    } else {
      p.regions[rf].limit_lines.push_back(static_cast<int>(e));
    }
  }

  for (int r = 0; r < k; ++r) {
    auto& reg = p.regions[r];
    auto& c = copies[r];
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    reg.copy_buses = c;
    reg.local_buses = reg.core_buses;
    reg.local_buses.insert(reg.local_buses.end(), c.begin(), c.end());
    for (int l = 0; l < reg.n_local_buses(); ++l) reg.local_of[reg.local_buses[l]] = l;
  }

  for (std::size_t gi = 0; gi < net.generators.size(); ++gi) {
    const int bus = idx.at(net.generators[gi].bus);
    p.regions[asg.region_of[bus]].generators.push_back(static_cast<int>(gi));
  }
  for (auto& reg : p.regions) reg.nx = 2 * reg.n_local_buses() + 2 * static_cast<int>(reg.generators.size());

  // rows ordered by bus position, then copying region, then component
  std::vector<std::vector<int>> copiers(nb);
  for (int r = 0; r < k; ++r)
    for (int bus : p.regions[r].copy_buses) copiers[bus].push_back(r);
  for (int bus = 0; bus < nb; ++bus) {
    std::sort(copiers[bus].begin(), copiers[bus].end());
    for (int r : copiers[bus])
      for (int comp = 0; comp < 2; ++comp) p.rows.push_back({bus, asg.region_of[bus], r, comp});
  }

  const int nl = p.n_lambda();
  std::vector<std::vector<Eigen::Triplet<double>>> trip(k);
  for (int row = 0; row < nl; ++row) {
    const auto& cr = p.rows[row];
    const auto& own = p.regions[cr.owner];
    const auto& cp = p.regions[cr.copy_region];
    const int lo = own.local_of[cr.bus];
    const int lc = cp.local_of[cr.bus];
    trip[cr.owner].emplace_back(row, cr.component == 0 ? own.u_index(lo) : own.w_index(lo), 1.0);
    trip[cr.copy_region].emplace_back(row, cr.component == 0 ? cp.u_index(lc) : cp.w_index(lc), -1.0);
  }
  for (int r = 0; r < k; ++r) {
    auto& reg = p.regions[r];
    reg.A.resize(nl, reg.nx);
    reg.A.setFromTriplets(trip[r].begin(), trip[r].end());
    reg.A.makeCompressed();
    for (int row = 0; row < nl; ++row)
      if (reg.A.outerIndexPtr()[row + 1] > reg.A.outerIndexPtr()[row]) reg.coupled_rows.push_back(row);
  }
  p.b = Eigen::VectorXd::Zero(nl);
  return p;
}

struct CouplingMetrics {
  double network_density = 0.0;  // ζ = N^line / N^bus
  std::vector<double> xi;        // ξ_ℓ = N^cpl_ℓ / N^x_ℓ
  double xi_mean = 0.0;
  int n_lambda = 0;
  int n_conn = 0;
  int nx_max = 0;
  std::vector<int> n_cpl;
  std::vector<int> nx;
};

inline CouplingMetrics coupling_metrics(const Partition& p, const netio::PowerNetwork& net) {
  CouplingMetrics m;
  m.network_density = static_cast<double>(net.branches.size()) / static_cast<double>(net.buses.size());
  for (const auto& reg : p.regions) {
    m.xi.push_back(reg.nx > 0 ? static_cast<double>(reg.n_cpl()) / reg.nx : 0.0);
    m.n_cpl.push_back(reg.n_cpl());
    m.nx.push_back(reg.nx);
    m.nx_max = std::max(m.nx_max, reg.nx);
  }
  for (double x : m.xi) m.xi_mean += x;
  if (!m.xi.empty()) m.xi_mean /= static_cast<double>(m.xi.size());
  m.n_lambda = p.n_lambda();
  m.n_conn = p.n_conn;
  return m;
}

}  // namespace baladin::partition
