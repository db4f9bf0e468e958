#pragma once

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "baladin/coordinate/options.hpp"
#include "baladin/runtime/channel.hpp"

namespace baladin::cli {

struct RunConfig {
  std::string case_path;
  std::vector<int> regions{2};
  unsigned seed = 1;
  double imbalance = 0.1;
  std::string partition_file;  // optional assignment document instead of the partitioner
  coordinate::SolverOptions solver;
  runtime::ExecMode exec = runtime::ExecMode::Sequential;
  bool promote_coordinator = false;
  int fail_region = -1;  // -1: no failure injection
  int fail_at = 1;
  std::string output_dir = "out";
  bool timing = true;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return out;
}

inline long parse_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(static_cast<int>(parse_long(key, tok)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// One configurable key: the same table drives the config file and the command-line flags.
struct Field {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<Field>& fields() {
  using namespace detail;
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    auto dbl = [&v](std::string key, std::string help, double coordinate::SolverOptions::*m) {
      v.push_back({key, std::move(help), [m](const RunConfig& c) { return fmt(c.solver.*m); },
                   [m, key](RunConfig& c, const std::string& s) { c.solver.*m = parse_double(key, s); }});
    };
    auto integer = [&v](std::string key, std::string help, int coordinate::SolverOptions::*m) {
      v.push_back({key, std::move(help), [m](const RunConfig& c) { return std::to_string(c.solver.*m); },
                   [m, key](RunConfig& c, const std::string& s) {
                     c.solver.*m = static_cast<int>(parse_long(key, s));
                   }});
    };
    auto reg = [&v](std::string key, std::string help, double kkt::RegularizationParams::*m) {
      v.push_back({key, std::move(help), [m](const RunConfig& c) { return fmt(c.solver.reg.*m); },
                   [m, key](RunConfig& c, const std::string& s) { c.solver.reg.*m = parse_double(key, s); }});
    };

    v.push_back({"case", "MATPOWER case file", [](const RunConfig& c) { return c.case_path; },
                 [](RunConfig& c, const std::string& s) { c.case_path = s; }});
    v.push_back({"regions", "number of regions; compare accepts a list such as 2,4,8",
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.regions.size(); ++i) s += (i ? "," : "") + std::to_string(c.regions[i]);
                   return s;
                 },
                 [](RunConfig& c, const std::string& s) { c.regions = parse_int_list("regions", s); }});
    v.push_back({"seed", "partitioner seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& s) { c.seed = static_cast<unsigned>(parse_long("seed", s)); }});
    v.push_back({"imbalance", "allowed region weight imbalance", [](const RunConfig& c) { return fmt(c.imbalance); },
                 [](RunConfig& c, const std::string& s) { c.imbalance = parse_double("imbalance", s); }});
    v.push_back({"partition-file", "region assignment JSON used instead of the partitioner",
                 [](const RunConfig& c) { return c.partition_file; },
                 [](RunConfig& c, const std::string& s) { c.partition_file = s; }});

    dbl("eps", "termination tolerance on E^0", &coordinate::SolverOptions::eps);
    dbl("eta-minus", "barrier acceptance factor: mu is reduced once E^mu <= eta_minus * mu",
        &coordinate::SolverOptions::eta_minus);
    dbl("mu0", "initial barrier parameter", &coordinate::SolverOptions::mu0);
    dbl("rho", "proximal weight of the decoupled problems", &coordinate::SolverOptions::rho);
    dbl("tau-min", "lower bound of the fraction-to-boundary factor tau = max(tau_min, 1 - mu)",
        &coordinate::SolverOptions::tau_min);
    v.push_back({"mode", "full-step or globalized",
                 [](const RunConfig& c) { return std::string(coordinate::to_string(c.solver.mode)); },
                 [](RunConfig& c, const std::string& s) {
                   if (s == "full-step")
                     c.solver.mode = coordinate::Mode::FullStep;
                   else if (s == "globalized")
                     c.solver.mode = coordinate::Mode::Globalized;
                   else
                     throw ConfigError("mode: expected full-step or globalized, got '" + s + "'");
                 }});
    v.push_back({"auto-globalize", "switch to globalized mode after fallback-window E^0 increases",
                 [](const RunConfig& c) { return std::string(c.solver.auto_globalize ? "true" : "false"); },
                 [](RunConfig& c, const std::string& s) { c.solver.auto_globalize = parse_bool("auto-globalize", s); }});
    integer("fallback-window", "consecutive E^0 increases before the switch", &coordinate::SolverOptions::fallback_window);
    integer("max-iter", "outer iteration cap", &coordinate::SolverOptions::max_iter);
    integer("inner-max-iter", "iteration cap of each decoupled solve", &coordinate::SolverOptions::inner_max_iter);
    reg("delta-x0", "first primal regularization of an inertia correction", &kkt::RegularizationParams::delta_x0);
    reg("delta-x-min", "smallest primal regularization", &kkt::RegularizationParams::delta_x_min);
    reg("eta-fast", "growth of delta_x when no previous value exists", &kkt::RegularizationParams::eta_fast);
    reg("eta-slow", "growth of delta_x after a previous correction", &kkt::RegularizationParams::eta_slow);
    reg("eta-red", "reduction of the previous delta_x for the first trial", &kkt::RegularizationParams::eta_red);
    reg("delta-gamma-factor", "dual regularization delta_gamma = factor * mu when zero pivots appear",
        &kkt::RegularizationParams::delta_gamma_factor);
    v.push_back({"max-correction-rounds", "inertia-correction round cap",
                 [](const RunConfig& c) { return std::to_string(c.solver.reg.max_rounds); },
                 [](RunConfig& c, const std::string& s) {
                   c.solver.reg.max_rounds = static_cast<int>(parse_long("max-correction-rounds", s));
                 }});
    dbl("stagnation-rel", "relative objective change counted as stagnant", &coordinate::SolverOptions::stagnation_rel);
    dbl("stagnation-consensus", "consensus level below which stagnation may be declared",
        &coordinate::SolverOptions::stagnation_consensus);
    integer("stagnation-window", "stagnant iterations before stopping", &coordinate::SolverOptions::stagnation_window);
    dbl("divergence-factor", "E^0 growth over its first value declared divergence",
        &coordinate::SolverOptions::divergence_factor);
    v.push_back({"kappa-step", "dual (per-region beta^d) or primal (alpha2 beta^p) step for kappa",
                 [](const RunConfig& c) {
                   return std::string(c.solver.kappa_step == local::KappaStep::Dual ? "dual" : "primal");
                 },
                 [](RunConfig& c, const std::string& s) {
                   if (s == "dual")
                     c.solver.kappa_step = local::KappaStep::Dual;
                   else if (s == "primal")
                     c.solver.kappa_step = local::KappaStep::Primal;
                   else
                     throw ConfigError("kappa-step: expected dual or primal, got '" + s + "'");
                 }});
    dbl("merit-eta", "sufficient-decrease fraction of the merit test", &coordinate::SolverOptions::merit_eta);

    v.push_back({"exec", "sequential or parallel agent execution",
                 [](const RunConfig& c) { return std::string(runtime::to_string(c.exec)); },
                 [](RunConfig& c, const std::string& s) {
                   if (s == "sequential")
                     c.exec = runtime::ExecMode::Sequential;
                   else if (s == "parallel")
                     c.exec = runtime::ExecMode::Parallel;
                   else
                     throw ConfigError("exec: expected sequential or parallel, got '" + s + "'");
                 }});
    v.push_back({"promote-coordinator", "run the coordinator on region 0's host",
                 [](const RunConfig& c) { return std::string(c.promote_coordinator ? "true" : "false"); },
                 [](RunConfig& c, const std::string& s) {
                   c.promote_coordinator = parse_bool("promote-coordinator", s);
                 }});
    v.push_back({"fail-region", "region that stops responding (-1: none)",
                 [](const RunConfig& c) { return std::to_string(c.fail_region); },
                 [](RunConfig& c, const std::string& s) { c.fail_region = static_cast<int>(parse_long("fail-region", s)); }});
    v.push_back({"fail-at", "iteration at which it stops", [](const RunConfig& c) { return std::to_string(c.fail_at); },
                 [](RunConfig& c, const std::string& s) { c.fail_at = static_cast<int>(parse_long("fail-at", s)); }});
    v.push_back({"output", "output directory", [](const RunConfig& c) { return c.output_dir; },
                 [](RunConfig& c, const std::string& s) { c.output_dir = s; }});
    v.push_back({"timing", "record wall times (false gives byte-identical reports)",
                 [](const RunConfig& c) { return std::string(c.timing ? "true" : "false"); },
                 [](RunConfig& c, const std::string& s) { c.timing = parse_bool("timing", s); }});
    return v;
  }();
  return f;
}

inline const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown configuration key '" + key + "'");
}

inline void set(RunConfig& c, const std::string& key, const std::string& value) { field(key).set(c, value); }

/// `key = value` lines, one per field, in table order.
inline std::string to_text(const RunConfig& c) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(c) + "\n";
  return out;
}

/// Applies `key = value` lines to `c`; '#' starts a comment.
inline void apply_text(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(n) + ": expected key = value");
    set(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

inline RunConfig from_text(const std::string& text) {
  RunConfig c;
  apply_text(c, text);
  return c;
}

inline runtime::RuntimeOptions runtime_options(const RunConfig& c) {
  runtime::RuntimeOptions r;
  r.exec = c.exec;
  r.promote_coordinator = c.promote_coordinator;
  if (c.fail_region >= 0) r.failure = runtime::FailureSpec{c.fail_region, c.fail_at};
  return r;
}

}  // namespace baladin::cli
