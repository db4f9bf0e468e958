#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "baladin/kkt/ldl.hpp"
#include "baladin/local/payload.hpp"
#include "baladin/partition/consensus.hpp"

namespace baladin::coordinate {

/// What the coordinator knows about the decomposition: dimensions and row maps only.
struct Layout {
  int n_lambda = 0;
  Eigen::VectorXd b;
  std::vector<std::vector<int>> coupled_rows;  // per region, global consensus rows
  std::vector<int> nx;
  std::vector<int> ne;

  int n_regions() const { return static_cast<int>(nx.size()); }
};

inline Layout make_layout(const partition::Partition& p, const std::vector<int>& n_eq) {
  Layout L;
  L.n_lambda = p.n_lambda();
  L.b = p.b;
  for (const auto& reg : p.regions) {
    L.coupled_rows.push_back(reg.coupled_rows);
    L.nx.push_back(reg.nx);
  }
  L.ne = n_eq;
  return L;
}

/// W = ΣW_ℓ scattered into N^λ × N^λ, in region order.
inline Eigen::MatrixXd assemble_W(const Layout& L, const std::vector<local::CondensedBlock>& blocks) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(L.n_lambda, L.n_lambda);
  for (int r = 0; r < L.n_regions(); ++r) {
    const auto& rows = L.coupled_rows[r];
    const auto& Wl = blocks[r].W;
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t c = 0; c < rows.size(); ++c) W(rows[a], rows[c]) += Wl(a, c);
  }
  return W;
}

/// Scatters per-region vectors over coupled rows and sums them in region order.
inline Eigen::VectorXd scatter_sum(const Layout& L, const std::vector<Eigen::VectorXd>& parts) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(L.n_lambda);
  for (int r = 0; r < L.n_regions(); ++r)
    for (std::size_t a = 0; a < L.coupled_rows[r].size(); ++a) v[L.coupled_rows[r][a]] += parts[r][a];
  return v;
}

/// h = −b + Σ(h_ℓ,0 + μ h_ℓ,μ).
inline Eigen::VectorXd assemble_h(const Layout& L, const std::vector<local::CondensedBlock>& blocks, double mu) {
  std::vector<Eigen::VectorXd> parts;
  parts.reserve(blocks.size());
  for (const auto& b : blocks) parts.push_back(b.h0 + mu * b.h_mu);
  return scatter_sum(L, parts) - L.b;
}

/// Rows all of whose regions are responding; the others cannot be certified.
inline std::vector<char> certifiable_rows(const Layout& L, const std::vector<char>& active) {
  std::vector<char> keep(L.n_lambda, 1);
  for (int r = 0; r < L.n_regions(); ++r)
    if (!active.empty() && !active[r])
      for (int row : L.coupled_rows[r]) keep[row] = 0;
  return keep;
}

/// Copy of v with the rows outside `keep` set to zero.
inline Eigen::VectorXd mask_rows(Eigen::VectorXd v, const std::vector<char>& keep) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!keep[i]) v[i] = 0.0;
  return v;
}

inline Eigen::VectorXd restrict_rows(const Eigen::VectorXd& v, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) out[a] = v[rows[a]];
  return out;
}

struct CoordinationResult {
  Eigen::VectorXd dlambda;
  kkt::Inertia inertia;
};

/// Solves WΔλ = −h and reports inertia(W).
inline CoordinationResult coordination_solve(const Eigen::MatrixXd& W, const Eigen::VectorXd& h) {
  CoordinationResult r;
  kkt::LdlFactor f(W);
  r.inertia = f.inertia();
  if (W.rows() == 0) {
    r.dlambda = Eigen::VectorXd::Zero(0);
    return r;
  }
  if (f.singular()) throw kkt::SingularFactorError("coordination matrix is singular");
  r.dlambda = f.solve(Eigen::VectorXd(-h));
  return r;
}

/// Target inertia(W) = (N^x, N^E + N^λ, 0) − Σ inertia(H̄_ℓ), over the listed regions.
inline kkt::Inertia required_w_inertia(const Layout& L, const std::vector<local::CondensedBlock>& blocks,
                                       const std::vector<char>& active) {
  kkt::Inertia target{0, L.n_lambda, 0};
  for (int r = 0; r < L.n_regions(); ++r) {
    if (!active[r]) continue;
    target.pos += L.nx[r];
    target.neg += L.ne[r];
    target = target - blocks[r].inertia;
  }
  return target;
}

/// Distributed inertia condition; a singular H̄_ℓ fails it.
inline bool inertia_condition(const Layout& L, const std::vector<local::CondensedBlock>& blocks,
                              const std::vector<char>& active, const kkt::Inertia& w_inertia) {
  for (int r = 0; r < L.n_regions(); ++r)
    if (active[r] && blocks[r].singular) return false;
  return w_inertia == required_w_inertia(L, blocks, active);
}

}  // namespace baladin::coordinate
