#pragma once

#include <cmath>
#include <vector>

#include "baladin/model/region_problem.hpp"
#include "baladin/netio/admittance.hpp"
#include "baladin/netio/network.hpp"
#include "baladin/partition/consensus.hpp"

namespace baladin::model {

namespace detail {

/// Quadratic forms of the active and reactive flow leaving end `a` of a branch:
/// P_a = g1|V_a|² + g2·c + b2·d, Q_a = −b1|V_a|² + g2·d − b2·c with
/// c = u_a u_b + w_a w_b, d = w_a u_b − u_a w_b, y_aa = g1 + jb1, y_ab = g2 + jb2.
inline void add_end_flow(QuadraticFunction& P, QuadraticFunction& Q, netio::Complex yaa, netio::Complex yab,
                         int ua, int wa, int ub, int wb, double scale = 1.0) {
  const double g1 = yaa.real(), b1 = yaa.imag(), g2 = yab.real(), b2 = yab.imag();
  // |V_a|²
  P.add_quad(ua, ua, scale * g1);
  P.add_quad(wa, wa, scale * g1);
  Q.add_quad(ua, ua, -scale * b1);
  Q.add_quad(wa, wa, -scale * b1);
  // c terms
  P.add_quad(ua, ub, scale * g2);
  P.add_quad(wa, wb, scale * g2);
  Q.add_quad(ua, ub, -scale * b2);
  Q.add_quad(wa, wb, -scale * b2);
  // d terms
  P.add_quad(wa, ub, scale * b2);
  P.add_quad(ua, wb, -scale * b2);
  Q.add_quad(wa, ub, scale * g2);
  Q.add_quad(ua, wb, -scale * g2);
}

}  // namespace detail

/**
 * Builds region ℓ's OPF subproblem in rectangular voltages.
 *
 * Variables: u for local buses, w for local buses, p^g then q^g for core generators.
 * c^E: P and Q balance per core bus, the slack-bus gauge row w_ref = 0 when the
 * slack is core here, and fixed-output rows for generators with equal bounds.
 * c^I, in this order: flow limits (from, to) and angle rows (upper, lower) for
 * the branches whose limits this region carries, voltage rows per core bus,
 * generator boxes.
 */
inline RegionProblem build_region_problem(const netio::PowerNetwork& net, const partition::Partition& part,
                                          int region) {
  const auto& reg = part.regions[region];
  const auto idx = net.bus_index();
  RegionProblem rp;
  rp.region = region;
  rp.nx = reg.nx;
  rp.local_buses = reg.local_buses;
  rp.generators = reg.generators;
  rp.n_core_buses = static_cast<int>(reg.core_buses.size());
  const int ng = static_cast<int>(reg.generators.size());

  auto u = [&](int bus_pos) { return reg.u_index(reg.local_of[bus_pos]); };
  auto w = [&](int bus_pos) { return reg.w_index(reg.local_of[bus_pos]); };

  for (int k = 0; k < ng; ++k) {
    const auto& g = net.generators[reg.generators[k]];
    rp.objective.add_quad(reg.pg_index(k), reg.pg_index(k), g.cost_a2);
    rp.objective.add_linear(reg.pg_index(k), g.cost_a1);
    rp.objective.constant += g.cost_a0;
  }

  // power balance per core bus
  std::vector<int> core_row(net.buses.size(), -1);
  for (std::size_t c = 0; c < reg.core_buses.size(); ++c) {
    const int i = reg.core_buses[c];
    const auto& bus = net.buses[i];
    ConstraintRow P, Q;
    P.base.constant = bus.p_load;
    Q.base.constant = bus.q_load;
    P.base.add_quad(u(i), u(i), bus.g_shunt);
    P.base.add_quad(w(i), w(i), bus.g_shunt);
    Q.base.add_quad(u(i), u(i), -bus.b_shunt);
    Q.base.add_quad(w(i), w(i), -bus.b_shunt);
    core_row[i] = static_cast<int>(rp.eq.size());
    rp.eq.push_back(P);
    rp.eq_tags.push_back({RowKind::PBalance, i});
    rp.eq.push_back(Q);
    rp.eq_tags.push_back({RowKind::QBalance, i});
  }
  for (int e : reg.lines) {
    const auto& br = net.branches[e];
    const int f = idx.at(br.from), t = idx.at(br.to);
    const auto y = netio::branch_admittance(br);
    if (core_row[f] >= 0)
      detail::add_end_flow(rp.eq[core_row[f]].base, rp.eq[core_row[f] + 1].base, y.yff, y.yft, u(f), w(f), u(t), w(t));
    if (core_row[t] >= 0)
      detail::add_end_flow(rp.eq[core_row[t]].base, rp.eq[core_row[t] + 1].base, y.ytt, y.ytf, u(t), w(t), u(f), w(f));
  }
  for (int k = 0; k < ng; ++k) {
    const auto& g = net.generators[reg.generators[k]];
    const int row = core_row[idx.at(g.bus)];
    rp.eq[row].base.add_linear(reg.pg_index(k), -1.0);
    rp.eq[row + 1].base.add_linear(reg.qg_index(k), -1.0);
  }

  const int slack = net.slack_position();
  if (slack >= 0 && part.assignment.region_of[slack] == region) {
    ConstraintRow gauge;
    gauge.base.add_linear(w(slack), 1.0);
    rp.eq.push_back(gauge);
    rp.eq_tags.push_back({RowKind::Gauge, slack});
  }
  for (int k = 0; k < ng; ++k) {
    const auto& g = net.generators[reg.generators[k]];
    if (g.p_min == g.p_max) {
      ConstraintRow r;
      r.base.add_linear(reg.pg_index(k), 1.0);
      r.base.constant = -g.p_min;
      rp.eq.push_back(r);
      rp.eq_tags.push_back({RowKind::FixedP, reg.generators[k]});
    }
    if (g.q_min == g.q_max) {
      ConstraintRow r;
      r.base.add_linear(reg.qg_index(k), 1.0);
      r.base.constant = -g.q_min;
      rp.eq.push_back(r);
      rp.eq_tags.push_back({RowKind::FixedQ, reg.generators[k]});
    }
  }

  // inequalities
  for (int e : reg.limit_lines) {
    const auto& br = net.branches[e];
    if (!br.s_max) continue;
    const int f = idx.at(br.from), t = idx.at(br.to);
    const auto y = netio::branch_admittance(br);
    const double smax2 = (*br.s_max) * (*br.s_max);
    for (int end = 0; end < 2; ++end) {
      ConstraintRow row;
      row.base.constant = -smax2;
      QuadraticFunction P, Q;
      if (end == 0)
        detail::add_end_flow(P, Q, y.yff, y.yft, u(f), w(f), u(t), w(t));
      else
        detail::add_end_flow(P, Q, y.ytt, y.ytf, u(t), w(t), u(f), w(f));
      row.squares = {P, Q};
      rp.ineq.push_back(row);
      rp.ineq_tags.push_back({end == 0 ? RowKind::FlowFrom : RowKind::FlowTo, e});
    }
  }
  for (int e : reg.limit_lines) {
    const auto& br = net.branches[e];
    const int f = idx.at(br.from), t = idx.at(br.to);
    // c = u_f u_t + w_f w_t, d = w_f u_t − u_f w_t; tan(θ_f − θ_t) = d / c
    if (br.angle_max < netio::kHalfPi) {
      const double tk = std::tan(br.angle_max);
      ConstraintRow row;
      row.base.add_quad(w(f), u(t), 1.0);
      row.base.add_quad(u(f), w(t), -1.0);
      row.base.add_quad(u(f), u(t), -tk);
      row.base.add_quad(w(f), w(t), -tk);
      rp.ineq.push_back(row);
      rp.ineq_tags.push_back({RowKind::AngleUpper, e});
    }
    if (br.angle_min > -netio::kHalfPi) {
      const double tk = std::tan(br.angle_min);
      ConstraintRow row;
      row.base.add_quad(u(f), u(t), tk);
      row.base.add_quad(w(f), w(t), tk);
      row.base.add_quad(w(f), u(t), -1.0);
      row.base.add_quad(u(f), w(t), 1.0);
      rp.ineq.push_back(row);
      rp.ineq_tags.push_back({RowKind::AngleLower, e});
    }
  }
  for (int i : reg.core_buses) {
    const auto& bus = net.buses[i];
    ConstraintRow vmax;
    vmax.base.add_quad(u(i), u(i), 1.0);
    vmax.base.add_quad(w(i), w(i), 1.0);
    vmax.base.constant = -bus.v_max * bus.v_max;
    rp.ineq.push_back(vmax);
    rp.ineq_tags.push_back({RowKind::VoltageMax, i});
    if (bus.v_min > 0.0) {
      ConstraintRow vmin;
      vmin.base.add_quad(u(i), u(i), -1.0);
      vmin.base.add_quad(w(i), w(i), -1.0);
      vmin.base.constant = bus.v_min * bus.v_min;
      rp.ineq.push_back(vmin);
      rp.ineq_tags.push_back({RowKind::VoltageMin, i});
    }
  }
  for (int k = 0; k < ng; ++k) {
    const auto& g = net.generators[reg.generators[k]];
    const int gi = reg.generators[k];
    auto bound = [&](int var, double sign, double value, RowKind kind) {
      if (!std::isfinite(value)) return;
      ConstraintRow r;
      r.base.add_linear(var, sign);
      r.base.constant = -sign * value;
      rp.ineq.push_back(r);
      rp.ineq_tags.push_back({kind, gi});
    };
    if (g.p_min != g.p_max) {
      bound(reg.pg_index(k), 1.0, g.p_max, RowKind::PMax);
      bound(reg.pg_index(k), -1.0, g.p_min, RowKind::PMin);
    }
    if (g.q_min != g.q_max) {
      bound(reg.qg_index(k), 1.0, g.q_max, RowKind::QMax);
      bound(reg.qg_index(k), -1.0, g.q_min, RowKind::QMin);
    }
  }

  rp.coupled_rows = reg.coupled_rows;
  rp.A_cpl = reg.coupled_block();
  rp.finalize();
  return rp;
}

inline std::vector<RegionProblem> build_region_problems(const netio::PowerNetwork& net,
                                                       const partition::Partition& part) {
  std::vector<RegionProblem> out;
  out.reserve(part.regions.size());
  for (int r = 0; r < part.n_regions(); ++r) out.push_back(build_region_problem(net, part, r));
  return out;
}

/// Flat start: u = 1, w = 0, generator outputs at the midpoint of their bounds.
inline Eigen::VectorXd flat_start(const netio::PowerNetwork& net, const partition::Region& reg) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(reg.nx);
  for (int l = 0; l < reg.n_local_buses(); ++l) x[reg.u_index(l)] = 1.0;
  for (int k = 0; k < static_cast<int>(reg.generators.size()); ++k) {
    const auto& g = net.generators[reg.generators[k]];
    x[reg.pg_index(k)] = 0.5 * (g.p_min + g.p_max);
    x[reg.qg_index(k)] = 0.5 * (g.q_min + g.q_max);
  }
  return x;
}

}  // namespace baladin::model
