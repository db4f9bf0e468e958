#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

#include <json.hpp>

#include "baladin/coordinate/options.hpp"
#include "baladin/coordinate/solution.hpp"
#include "baladin/runtime/comm_report.hpp"

namespace baladin::report {

using nlohmann::json;

/// Non-finite values become null instead of invalid JSON.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json options_json(const coordinate::SolverOptions& o) {
  return {{"eps", o.eps},
          {"eta_minus", o.eta_minus},
          {"mu0", o.mu0},
          {"rho", o.rho},
          {"tau_min", o.tau_min},
          {"mode", coordinate::to_string(o.mode)},
          {"auto_globalize", o.auto_globalize},
          {"fallback_window", o.fallback_window},
          {"max_iter", o.max_iter},
          {"inner_max_iter", o.inner_max_iter},
          {"delta_x0", o.reg.delta_x0},
          {"delta_x_min", o.reg.delta_x_min},
          {"eta_fast", o.reg.eta_fast},
          {"eta_slow", o.reg.eta_slow},
          {"eta_red", o.reg.eta_red},
          {"delta_gamma_factor", o.reg.delta_gamma_factor},
          {"max_correction_rounds", o.reg.max_rounds},
          {"stagnation_rel", o.stagnation_rel},
          {"stagnation_consensus", o.stagnation_consensus},
          {"stagnation_window", o.stagnation_window},
          {"divergence_factor", o.divergence_factor},
          {"kappa_step", o.kappa_step == local::KappaStep::Dual ? "dual" : "primal"},
          {"merit_eta", o.merit_eta}};
}

inline json record_json(const coordinate::IterationRecord& r, bool timing) {
  json j = {{"iteration", r.iteration},
            {"mu", num(r.mu)},
            {"E_mu", num(r.E_mu)},
            {"E0", num(r.E0)},
            {"objective", num(r.objective)},
            {"consensus", num(r.consensus)},
            {"alpha1", r.alpha1},
            {"alpha2", r.alpha2},
            {"alpha3", r.alpha3},
            {"beta_p", r.beta_p},
            {"beta_d", r.beta_d},
            {"delta_x", r.delta_x},
            {"delta_gamma", r.delta_gamma},
            {"correction_rounds", r.correction_rounds},
            {"mode", coordinate::to_string(r.mode)},
            {"stage", std::string(1, r.stage)},
            {"inner_iterations", r.inner_iterations},
            {"forward_floats", r.forward_floats},
            {"backward_floats", r.backward_floats}};
  const double z = 0.0;
  j["time"] = {{"local", timing ? r.timing.local : z},
               {"condense", timing ? r.timing.condense : z},
               {"coordinate", timing ? r.timing.coordinate : z},
               {"recover", timing ? r.timing.recover : z},
               {"sync", timing ? r.timing.sync : z}};
  return j;
}

inline json certificate_json(const coordinate::Certificate& c) {
  return {{"E0", num(c.E0)},
          {"E_mu", num(c.E_mu)},
          {"consensus", num(c.consensus)},
          {"interior", c.interior},
          {"verified", c.verified},
          {"uncertified_regions", c.uncertified},
          {"uncertified_rows", c.uncertified_rows}};
}

inline json solution_json(const coordinate::Solution& s, bool timing = true) {
  json j = {{"status", coordinate::to_string(s.status)},
            {"diagnostic", s.diagnostic},
            {"objective", num(s.objective)},
            {"E0", num(s.E0)},
            {"consensus", num(s.consensus)},
            {"mu", num(s.mu)},
            {"iterations", s.iterations},
            {"certificate", certificate_json(s.certificate)}};
  j["records"] = json::array();
  for (const auto& r : s.records) j["records"].push_back(record_json(r, timing));
  return j;
}

inline void write_iterations_csv(std::ostream& os, const std::vector<coordinate::IterationRecord>& recs,
                                 bool timing = true) {
  os << "iteration,mu,E_mu,E0,objective,consensus,alpha1,alpha2,alpha3,beta_p,beta_d,delta_x,correction_rounds,"
        "mode,stage,forward_floats,backward_floats,t_local,t_condense,t_coordinate,t_recover,t_sync\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : recs) {
    os << r.iteration << ',' << r.mu << ',' << r.E_mu << ',' << r.E0 << ',' << r.objective << ',' << r.consensus
       << ',' << r.alpha1 << ',' << r.alpha2 << ',' << r.alpha3 << ',' << r.beta_p << ',' << r.beta_d << ','
       << r.delta_x << ',' << r.correction_rounds << ',' << coordinate::to_string(r.mode) << ',' << r.stage << ','
       << r.forward_floats << ',' << r.backward_floats;
    const coordinate::Timing t = timing ? r.timing : coordinate::Timing{};
    os << ',' << t.local << ',' << t.condense << ',' << t.coordinate << ',' << t.recover << ',' << t.sync << '\n';
  }
}

inline json counts_json(const runtime::FloatCounts& c) {
  return {{"algebraic", c.algebraic},
          {"overhead", c.overhead},
          {"step_sync", c.step_sync},
          {"control", c.control},
          {"inertia_correction", c.inertia_correction},
          {"globalization", c.globalization},
          {"total", c.total()}};
}

inline json closed_form_json(const runtime::ClosedForm& f) {
  return {{"forward", {{"expr", f.forward_expr}, {"floats", f.forward}, {"MB", f.mb_forward()}}},
          {"backward", {{"expr", f.backward_expr}, {"floats", f.backward}, {"MB", f.mb_backward()}}},
          {"total", {{"expr", f.total_expr}, {"floats", f.total}, {"MB", f.mb_total()}}}};
}

inline json comm_report_json(const runtime::CommReport& rep) {
  json j;
  j["bytes_per_float"] = runtime::kBytesPerFloat;
  j["regions"] = json::array();
  for (const auto& r : rep.regions)
    j["regions"].push_back({{"region", r.region}, {"nx", r.nx}, {"n_cpl", r.ncpl}, {"xi", r.xi}});
  j["xi_mean"] = rep.xi_mean;
  j["per_iteration_closed_form"] = {{"admm", closed_form_json(rep.admm)},
                                    {"aladin", closed_form_json(rep.aladin)},
                                    {"baladin_tabulated", closed_form_json(rep.baladin)},
                                    {"baladin_derived", closed_form_json(rep.baladin_derived)}};
  j["iterations"] = json::array();
  for (const auto& it : rep.iterations)
    j["iterations"].push_back({{"iteration", it.measured.iteration},
                               {"forward", counts_json(it.measured.forward)},
                               {"backward", counts_json(it.measured.backward)},
                               {"correction_rounds", it.measured.correction_rounds},
                               {"predicted_forward", it.predicted_forward},
                               {"predicted_backward", it.predicted_backward},
                               {"forward_exact", it.forward_exact},
                               {"backward_exact", it.backward_exact}});
  j["total"] = {{"forward", counts_json(rep.total_forward)},
                {"backward", counts_json(rep.total_backward)},
                {"MB", static_cast<double>(rep.total_forward.total() + rep.total_backward.total()) *
                           runtime::kBytesPerFloat / 1e6}};
  j["exact"] = rep.exact;
  return j;
}

}  // namespace baladin::report
