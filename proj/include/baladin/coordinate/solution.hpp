#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "baladin/coordinate/barrier.hpp"
#include "baladin/coordinate/coordination.hpp"
#include "baladin/coordinate/driver.hpp"
#include "baladin/local/iterate.hpp"
#include "baladin/local/residual.hpp"
#include "baladin/model/region_problem.hpp"
#include "baladin/netio/network.hpp"

namespace baladin::coordinate {

/// Independently recomputed termination certificate.
struct Certificate {
  double E0 = 0.0;
  double E_mu = 0.0;
  double consensus = 0.0;
  bool interior = true;  // s > 0 and κ > 0 in every certified region
  bool verified = false;  // E^0 ≤ ε and interior
  std::vector<int> uncertified;  // regions excluded from the certificate
  int uncertified_rows = 0;      // consensus rows of those regions
};

struct Solution {
  Status status = Status::Running;
  std::string diagnostic;
  double objective = 0.0;
  double E0 = 0.0;
  double consensus = 0.0;
  double mu = 0.0;
  int iterations = 0;
  std::vector<IterationRecord> records;
  std::vector<local::LocalIterate> regions;  // decoupled iterates at termination
  Eigen::VectorXd lambda;
  Certificate certificate;
};

/**
 * Re-evaluates residuals from the primal-dual iterates and the problem data
 * alone, without any quantity reported during the run.
 */
inline Certificate certify(const std::vector<model::RegionProblem>& problems,
                           const std::vector<local::LocalIterate>& its, const Layout& L,
                           const Eigen::VectorXd& lambda, double mu, double eps,
                           const std::vector<char>& active = {}) {
  Certificate c;
  std::vector<double> Emu, E0;
  std::vector<Eigen::VectorXd> ax;
  for (std::size_t r = 0; r < problems.size(); ++r) {
    ax.push_back(problems[r].consensus_value(its[r].x));
    if (!active.empty() && !active[r]) {
      c.uncertified.push_back(static_cast<int>(r));
      continue;
    }
    const auto res = local::local_residual(problems[r], its[r], restrict_rows(lambda, L.coupled_rows[r]), mu);
    Emu.push_back(res.E_mu);
    E0.push_back(res.E0);
    c.interior = c.interior && its[r].positive();
  }
  const std::vector<char> keep = certifiable_rows(L, active);
  for (char k : keep) c.uncertified_rows += k ? 0 : 1;
  const GlobalResidual gr = global_residual(Emu, E0, mask_rows(scatter_sum(L, ax), keep), mask_rows(L.b, keep));
  c.E0 = gr.E0;
  c.E_mu = gr.E_mu;
  c.consensus = gr.consensus;
  c.verified = c.interior && c.E0 <= eps && c.uncertified.empty();
  return c;
}

/// Reason the barrier interior is empty, or an empty string.
inline std::string empty_interior(const netio::PowerNetwork& net) {
  for (const auto& b : net.buses)
    if (b.v_min >= b.v_max)
      return "bus " + std::to_string(b.id) + " has v_min >= v_max; the barrier interior is empty";
  return {};
}

inline double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace baladin::coordinate
