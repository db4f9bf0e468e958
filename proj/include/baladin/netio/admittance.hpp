#pragma once

#include <complex>
#include <vector>

#include <Eigen/Sparse>

#include "baladin/netio/network.hpp"

namespace baladin::netio {

using Complex = std::complex<double>;

/// Two-port Π-model admittances of one branch: I_f = yff V_f + yft V_t, I_t = ytf V_f + ytt V_t.
struct BranchAdmittance {
  Complex yff, yft, ytf, ytt;
};

inline BranchAdmittance branch_admittance(const Branch& br) {
  const Complex ys = 1.0 / Complex(br.r, br.x);
  const Complex t = std::polar(br.tap, br.shift);
  const Complex ytt = ys + Complex(0.0, br.b_charging / 2.0);
  BranchAdmittance a;
  a.ytt = ytt;
  a.yff = ytt / (br.tap * br.tap);
  a.yft = -ys / std::conj(t);
  a.ytf = -ys / t;
  return a;
}

struct Admittance {
  Eigen::SparseMatrix<double> G;
  Eigen::SparseMatrix<double> B;
};

/// Nodal admittance Y = G + jB indexed by bus position in `net.buses`.
inline Admittance build_admittance(const PowerNetwork& net) {
  const int n = static_cast<int>(net.buses.size());
  const auto idx = net.bus_index();
  std::vector<Eigen::Triplet<double>> gt, bt;
  for (int i = 0; i < n; ++i) {
    gt.emplace_back(i, i, net.buses[i].g_shunt);
    bt.emplace_back(i, i, net.buses[i].b_shunt);
  }
  for (const auto& br : net.branches) {
    const int f = idx.at(br.from);
    const int t = idx.at(br.to);
    const auto a = branch_admittance(br);
    const int rows[4] = {f, f, t, t};
    const int cols[4] = {f, t, f, t};
    const Complex vals[4] = {a.yff, a.yft, a.ytf, a.ytt};
    for (int k = 0; k < 4; ++k) {
      gt.emplace_back(rows[k], cols[k], vals[k].real());
      bt.emplace_back(rows[k], cols[k], vals[k].imag());
    }
  }
  Admittance y;
  y.G.resize(n, n);
  y.B.resize(n, n);
  y.G.setFromTriplets(gt.begin(), gt.end());
  y.B.setFromTriplets(bt.begin(), bt.end());
  y.G.makeCompressed();
  y.B.makeCompressed();
  return y;
}

}  // namespace baladin::netio
