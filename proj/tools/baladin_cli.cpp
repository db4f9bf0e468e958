#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "baladin/cli/config.hpp"
#include "baladin/coordinate/centralized.hpp"
#include "baladin/netio/matpower.hpp"
#include "baladin/partition/json_io.hpp"
#include "baladin/partition/partitioner.hpp"
#include "baladin/report/report.hpp"
#include "baladin/runtime/comm_report.hpp"
#include "baladin/runtime/run.hpp"

using namespace baladin;
using nlohmann::json;

namespace {

// exit codes
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitParse = 3;
constexpr int kExitPartition = 4;
constexpr int kExitSolverBase = 10;  // + status offset below

int status_exit(coordinate::Status s) {
  switch (s) {
    case coordinate::Status::Optimal: return kExitOk;
    case coordinate::Status::Stagnation: return kExitSolverBase + 0;
    case coordinate::Status::IterationCap: return kExitSolverBase + 1;
    case coordinate::Status::Diverged: return kExitSolverBase + 2;
    case coordinate::Status::InfeasibleDiagnostic: return kExitSolverBase + 3;
    case coordinate::Status::Degraded: return kExitSolverBase + 4;
    case coordinate::Status::Running: return kExitSolverBase + 5;
  }
  return kExitSolverBase + 5;
}

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flags collected per subcommand, applied on top of the config file after parsing.
struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
};

void add_fields(CLI::App* sub, Overrides& ov) {
  sub->add_option("--config", ov.config_path, "flat key = value file; flags given here override it");
  const cli::RunConfig defaults;
  for (const auto& f : cli::fields()) {
    auto* o = sub->add_option_function<std::string>(
        "--" + f.key, [&ov, key = f.key](const std::string& v) { ov.values[key] = v; }, f.help);
    const std::string d = f.get(defaults);
    o->type_name("VALUE");
    if (!d.empty()) o->default_str(d);
  }
}

cli::RunConfig resolve(const Overrides& ov) {
  cli::RunConfig c;
  if (!ov.config_path.empty()) {
    std::ifstream in(ov.config_path);
    if (!in) throw IoFailure("cannot open config '" + ov.config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    cli::apply_text(c, ss.str());
  }
  for (const auto& [k, v] : ov.values) cli::set(c, k, v);
  if (c.case_path.empty()) throw cli::ConfigError("no case given (--case or 'case =' in the config)");
  c.solver.validate();
  return c;
}

std::filesystem::path out_dir(const cli::RunConfig& c) {
  std::filesystem::path p(c.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw IoFailure("cannot create output directory '" + c.output_dir + "'");
  return p;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw IoFailure("cannot write '" + p.string() + "'");
  out << text;
}

partition::Partition make_partition(const netio::PowerNetwork& net, const cli::RunConfig& c, int k) {
  if (!c.partition_file.empty()) {
    std::ifstream probe(c.partition_file);
    if (!probe) throw IoFailure("cannot open partition file '" + c.partition_file + "'");
    return partition::build_consensus(net, partition::load_assignment(c.partition_file, net));
  }
  return partition::build_consensus(net, partition::partition_graph(net, k, c.imbalance, c.seed));
}

json config_json(const cli::RunConfig& c) {
  json j = json::object();
  for (const auto& f : cli::fields()) j[f.key] = f.get(c);
  return j;
}

double wall(const coordinate::Solution& s, double coordinate::Timing::*m) {
  double t = 0.0;
  for (const auto& r : s.records) t += r.timing.*m;
  return t;
}

json timing_json(const coordinate::Solution& s, bool timing) {
  if (!timing) return nullptr;
  return {{"local", wall(s, &coordinate::Timing::local)},
          {"condense", wall(s, &coordinate::Timing::condense)},
          {"coordinate", wall(s, &coordinate::Timing::coordinate)},
          {"recover", wall(s, &coordinate::Timing::recover)},
          {"sync", wall(s, &coordinate::Timing::sync)}};
}

int cmd_solve(const cli::RunConfig& c) {
  if (c.regions.size() != 1) throw cli::ConfigError("solve takes a single region count");
  const int k = c.regions[0];
  const auto net = netio::load_matpower(c.case_path);
  const auto part = make_partition(net, c, k);
  const auto out = runtime::run(net, part, c.solver, cli::runtime_options(c));
  const auto dir = out_dir(c);

  json rep;
  rep["config"] = config_json(c);
  rep["options"] = report::options_json(c.solver);
  rep["n_regions"] = part.n_regions();
  rep["centralized_equivalent"] = part.n_regions() == 1;
  rep["degraded"] = {{"triggered", out.degraded}, {"note", out.degraded_note}};
  rep["solution"] = report::solution_json(out.solution, c.timing);
  write_file(dir / "report.json", rep.dump(2) + "\n");
  std::ostringstream it, led;
  report::write_iterations_csv(it, out.solution.records, c.timing);
  out.ledger.write_csv(led);
  write_file(dir / "iterations.csv", it.str());
  write_file(dir / "ledger.csv", led.str());

  const auto& s = out.solution;
  std::printf("status %s%s\n", coordinate::to_string(s.status), part.n_regions() == 1 ? " (centralized-equivalent)" : "");
  if (!s.diagnostic.empty()) std::printf("  %s\n", s.diagnostic.c_str());
  std::printf("objective %.10g  E0 %.3e  consensus %.3e  iterations %d\n", s.objective, s.E0, s.consensus,
              s.iterations);
  std::printf("reports in %s\n", dir.string().c_str());
  return status_exit(s.status);
}

int cmd_partition(const cli::RunConfig& c) {
  if (c.regions.size() != 1) throw cli::ConfigError("partition takes a single region count");
  const auto net = netio::load_matpower(c.case_path);
  const auto part = make_partition(net, c, c.regions[0]);
  const auto dir = out_dir(c);
  const json j = partition::to_json(part, net);
  write_file(dir / "partition.json", j.dump(2) + "\n");
  const auto m = partition::coupling_metrics(part, net);
  std::printf("regions %d  N^lambda %d  connections %d  xi_mean %.4f  nx_max %d\n", part.n_regions(), m.n_lambda,
              m.n_conn, m.xi_mean, m.nx_max);
  for (int r = 0; r < part.n_regions(); ++r)
    std::printf("  region %d: %zu core buses, %zu copies, nx %d, n_cpl %d\n", r, part.regions[r].core_buses.size(),
                part.regions[r].copy_buses.size(), m.nx[r], m.n_cpl[r]);
  return kExitOk;
}

int cmd_compare(const cli::RunConfig& c) {
  const auto net = netio::load_matpower(c.case_path);
  const auto dir = out_dir(c);
  auto t0 = std::chrono::steady_clock::now();
  coordinate::Solution cen;
  std::string cen_error;
  try {
    cen = coordinate::centralized_solve(net, c.solver);
  } catch (const std::exception& e) {
    cen_error = e.what();
  }
  const double cen_wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json rep;
  rep["config"] = config_json(c);
  rep["centralized"] = {{"status", cen_error.empty() ? coordinate::to_string(cen.status) : "error"},
                        {"error", cen_error},
                        {"objective", report::num(cen.objective)},
                        {"E0", report::num(cen.E0)},
                        {"iterations", cen.iterations},
                        {"wall", c.timing ? json(cen_wall) : json(nullptr)}};
  rep["rows"] = json::array();
  std::ostringstream csv;
  csv << "regions,status,objective,centralized_objective,relative_gap,E0,centralized_E0,iterations,"
         "centralized_iterations,t_local,t_condense,t_coordinate,t_recover,t_sync\n";
  std::printf("%-4s %-14s %-18s %-18s %-10s %-10s %-10s %s\n", "|R|", "status", "objective", "centralized", "gap",
              "E0", "E0 cen", "iters");
  for (int k : c.regions) {
    json row = {{"regions", k}};
    std::string status, err;
    coordinate::Solution s;
    try {
      const auto part = make_partition(net, c, k);
      s = runtime::run(net, part, c.solver, cli::runtime_options(c)).solution;
      status = coordinate::to_string(s.status);
    } catch (const std::exception& e) {
      status = "error";
      err = e.what();
    }
    const double gap = cen_error.empty() && err.empty() ? coordinate::relative_gap(s.objective, cen.objective)
                                                        : std::numeric_limits<double>::quiet_NaN();
    row["status"] = status;
    row["error"] = err;
    row["objective"] = report::num(s.objective);
    row["relative_gap"] = report::num(gap);
    row["E0"] = report::num(s.E0);
    row["iterations"] = s.iterations;
    row["time"] = timing_json(s, c.timing);
    rep["rows"].push_back(row);
    auto t = [&](double coordinate::Timing::*m) { return c.timing ? wall(s, m) : 0.0; };
    char line[512];
    std::snprintf(line, sizeof line, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.6g,%.6g,%.6g,%.6g,%.6g\n", k,
                  status.c_str(), s.objective, cen.objective, gap, s.E0, cen.E0, s.iterations, cen.iterations,
                  t(&coordinate::Timing::local), t(&coordinate::Timing::condense), t(&coordinate::Timing::coordinate),
                  t(&coordinate::Timing::recover), t(&coordinate::Timing::sync));
    csv << line;
    std::printf("%-4d %-14s %-18.10g %-18.10g %-10.2e %-10.2e %-10.2e %d/%d\n", k, status.c_str(), s.objective,
                cen.objective, gap, s.E0, cen.E0, s.iterations, cen.iterations);
    if (!err.empty()) std::printf("     %s\n", err.c_str());
  }
  write_file(dir / "compare.json", rep.dump(2) + "\n");
  write_file(dir / "compare.csv", csv.str());
  return kExitOk;
}

int cmd_comm_report(const cli::RunConfig& c) {
  if (c.regions.size() != 1) throw cli::ConfigError("comm-report takes a single region count");
  const auto net = netio::load_matpower(c.case_path);
  const auto part = make_partition(net, c, c.regions[0]);
  const auto out = runtime::run(net, part, c.solver, cli::runtime_options(c));
  const auto rep = runtime::comm_report(out.ledger, part, net);
  const auto dir = out_dir(c);
  json j = report::comm_report_json(rep);
  j["status"] = coordinate::to_string(out.solution.status);
  write_file(dir / "comm_report.json", j.dump(2) + "\n");
  std::ostringstream led;
  out.ledger.write_csv(led);
  write_file(dir / "ledger.csv", led.str());

  std::printf("status %s, %zu iterations ledgered, measured = predicted: %s\n", coordinate::to_string(out.solution.status),
              rep.iterations.size(), rep.exact ? "yes" : "NO");
  std::printf("per-iteration floats (MB at %d bytes/float)\n", runtime::kBytesPerFloat);
  auto row = [](const char* name, const runtime::ClosedForm& f) {
    std::printf("  %-18s fwd %-12.0f bwd %-10.0f total %-12.0f (%.6f MB)\n", name, f.forward, f.backward, f.total,
                f.mb_total());
    std::printf("  %-18s   %s | %s\n", "", f.forward_expr.c_str(), f.backward_expr.c_str());
  };
  row("ADMM", rep.admm);
  row("ALADIN", rep.aladin);
  row("BALADIN (table)", rep.baladin);
  row("BALADIN (derived)", rep.baladin_derived);
  std::printf("measured totals: forward %ld algebraic + %ld overhead + %ld correction + %ld globalization\n",
              rep.total_forward.algebraic, rep.total_forward.overhead, rep.total_forward.inertia_correction,
              rep.total_forward.globalization);
  std::printf("                 backward %ld algebraic + %ld step-sync + %ld control + %ld correction\n",
              rep.total_backward.algebraic, rep.total_backward.step_sync, rep.total_backward.control,
              rep.total_backward.inertia_correction);
  return status_exit(out.solution.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed AC optimal power flow by barrier-ALADIN"};
  app.require_subcommand(1);
  Overrides ov;
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const cli::RunConfig&);
  };
  const Cmd cmds[] = {
      {"solve", "distributed solve; writes report.json, iterations.csv and ledger.csv", cmd_solve},
      {"partition", "partition the network; writes partition.json", cmd_partition},
      {"compare", "distributed against centralized for each region count", cmd_compare},
      {"comm-report", "measured communication against the closed-form counts", cmd_comm_report},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_fields(sub, ov);
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (auto& [sub, c] : subs)
      if (sub->parsed()) return c->run(resolve(ov));
  } catch (const netio::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const IoFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const netio::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitParse;
  } catch (const netio::SemanticError& e) {
    std::fprintf(stderr, "invalid case: %s\n", e.what());
    return kExitParse;
  } catch (const partition::PartitionError& e) {
    std::fprintf(stderr, "partition error: %s\n", e.what());
    return kExitPartition;
  } catch (const cli::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
