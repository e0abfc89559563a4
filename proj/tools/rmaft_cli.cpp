#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmaft/daly.hpp"
#include "rmaft/errors.hpp"
#include "rmaft/json_io.hpp"
#include "rmaft/simulator.hpp"
#include "rmaft/topology.hpp"

using namespace rmaft;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

std::string num(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(9) << v;
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Writes to the file when a path is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ScenarioError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct SimArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 1;
  std::string out;
  std::string report;
  int threads = 0;
};

int cmd_sim(const SimArgs& a) {
  const auto base = load_scenario(a.scenario);
  const auto first = a.seed.value_or(base.seed);
  std::vector<Scenario> batch;
  for (std::size_t i = 0; i < a.trials; ++i) {
    auto s = base;
    s.seed = first + i;
    batch.push_back(std::move(s));
  }
  const auto reports = run_batch(batch, a.threads);

  Output out(a.out);
  auto& os = out.stream();
  os << "seed,digest,fallbacks,cf,event_count\n";
  bool ok = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    os << batch[i].seed << ',' << hex64(r.digest) << ',' << r.fallbacks << ',' << (r.cf ? 1 : 0) << ','
       << r.event_count << '\n';
    auto failures = r.failures();
    if (auto mismatch = check_against_reference(batch[i], r)) failures.push_back(*mismatch);
    for (const auto& f : failures) std::cerr << "seed " << batch[i].seed << ": " << f << '\n';
    ok = ok && failures.empty();
  }
  if (!a.report.empty() && !reports.empty()) {
    Output rep(a.report);
    rep.stream() << report_to_json(reports.front()) << '\n';
  }
  return ok ? kOk : kFailed;
}

std::size_t topo_level_index(const FdHierarchy& h, const std::string& name) {
  if (name == "none") return 0;
  return h.level_index(name);
}

struct PcfArgs {
  std::string machine = "tsubame2";
  std::size_t n_procs = 4000;
  std::vector<double> fractions{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
  std::vector<std::string> levels{"none", "node", "psu", "switch", "rack"};
  std::string out;
};

int cmd_pcf(const PcfArgs& a) {
  const auto hier = load_profile(a.machine);
  std::vector<std::pair<std::string, std::size_t>> levels;
  for (const auto& name : a.levels) levels.emplace_back(name, topo_level_index(hier, name));
  std::ostringstream rows;
  rows.imbue(std::locale::classic());
  rows << "topo_level,ch_fraction,p_cf\n";
  for (const auto& [name, level] : levels) {
    for (double f : a.fractions) {
      PcfQuery q;
      q.processes = a.n_procs;
      q.groups = groups_for_fraction(a.n_procs, f);
      q.taware_level = level;
      q.hierarchy = hier;
      rows << name << ',' << num(f) << ',' << num(p_cf(q)) << '\n';
    }
  }
  Output out(a.out);
  out.stream() << rows.str();
  return kOk;
}

int cmd_daly(double delta, double mtbf) {
  std::cout << num(daly_interval({delta, mtbf})) << '\n';
  return kOk;
}

struct PlacementArgs {
  std::string machine = "tsubame2";
  std::size_t n_procs = 0;
  std::size_t groups = 0;
  std::optional<double> fraction;
  std::string level = "none";
  std::string out;
};

int cmd_placement(const PlacementArgs& a) {
  const auto hier = load_profile(a.machine);
  std::size_t g = a.groups;
  if (a.fraction) g = groups_for_fraction(a.n_procs, *a.fraction);
  if (g == 0) throw ArgumentError("give --groups or --ch-fraction");
  const auto groups = make_groups(a.n_procs, g);
  const auto n = topo_level_index(hier, a.level);
  const auto placement = make_taware_placement(hier, groups, n);
  if (auto v = validate_taware(placement, groups, n)) {
    std::cerr << "group " << v->group << " shares element " << v->element << " of level " << v->level << '\n';
    return kFailed;
  }
  Output out(a.out);
  auto& os = out.stream();
  os << "process,group";
  for (const auto& l : hier.levels()) os << ',' << l.name;
  os << '\n';
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (auto p : groups[gi]) {
      os << p.value() << ',' << gi;
      for (std::size_t j = 1; j <= hier.height(); ++j) os << ',' << placement.at(p, j);
      os << '\n';
    }
  }
  return kOk;
}

struct DumpArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> steps;
  std::string out;
  std::string trace;
  std::string replay;
  std::string checkpoints;
};

int cmd_dump_logs(const DumpArgs& a) {
  auto s = load_scenario(a.scenario);
  if (a.seed) s.seed = *a.seed;
  Simulation sim(s);
  if (a.steps) {
    sim.advance(*a.steps);
  } else {
    sim.run();
  }
  Output out(a.out);
  write_logs_jsonl(out.stream(), sim.log());
  if (!a.trace.empty()) {
    Output t(a.trace);
    write_trace_jsonl(t.stream(), sim.machine().graph());
  }
  if (!a.replay.empty()) {
    Output r(a.replay);
    for (const auto& rec : sim.report().recoveries_log) write_replay_jsonl(r.stream(), rec.replay_trace);
  }
  if (!a.checkpoints.empty()) {
    std::filesystem::create_directories(a.checkpoints);
    for (std::uint32_t p = 0; p < s.processes; ++p) {
      const auto& c = sim.store().latest(ProcessId{p});
      std::ofstream f(std::filesystem::path(a.checkpoints) / ("p" + std::to_string(p) + ".bin"), std::ios::binary);
      write_payload(f, c.payload);
    }
  }
  return sim.report().ok() ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault-tolerance protocols for RMA programs: simulation and resilience model"};
  app.require_subcommand(1);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "run a scenario for several seeds and print one CSV row per trial");
  sim_cmd->add_option("--scenario", sim.scenario, "scenario JSON file")->required();
  sim_cmd->add_option("--seed", sim.seed, "seed of the first trial (default: the scenario's)");
  sim_cmd->add_option("--trials", sim.trials, "number of trials")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sim.out, "CSV file (default stdout)");
  sim_cmd->add_option("--report", sim.report, "JSON report of the first trial");
  sim_cmd->add_option("--threads", sim.threads, "worker threads (default: RMAFT_THREADS or all)");

  PcfArgs pcf;
  auto* pcf_cmd = app.add_subcommand("pcf", "catastrophic-failure probability grid as CSV");
  pcf_cmd->add_option("--machine", pcf.machine, "profile JSON file or 'tsubame2'");
  pcf_cmd->add_option("--n-procs", pcf.n_procs, "computing processes")->check(CLI::PositiveNumber);
  pcf_cmd->add_option("--ch-fraction", pcf.fractions, "checksum processes as a fraction of N")->delimiter(',');
  pcf_cmd->add_option("--topo-level", pcf.levels, "none or a level name")->delimiter(',');
  pcf_cmd->add_option("--out", pcf.out, "CSV file (default stdout)");

  double delta = 0.0, mtbf = 0.0;
  auto* daly_cmd = app.add_subcommand("daly", "near-optimal checkpoint interval");
  daly_cmd->add_option("--delta", delta, "checkpoint cost, seconds")->required();
  daly_cmd->add_option("--mtbf", mtbf, "mean time between failures, seconds")->required();

  PlacementArgs place;
  auto* place_cmd = app.add_subcommand("placement", "topology-aware placement of checksum groups as CSV");
  place_cmd->add_option("--machine", place.machine, "profile JSON file or 'tsubame2'");
  place_cmd->add_option("--n-procs", place.n_procs, "computing processes")->required()->check(CLI::PositiveNumber);
  place_cmd->add_option("--groups", place.groups, "number of groups");
  place_cmd->add_option("--ch-fraction", place.fraction, "groups as a fraction of N");
  place_cmd->add_option("--topo-level", place.level, "none or a level name");
  place_cmd->add_option("--out", place.out, "CSV file (default stdout)");

  DumpArgs dump;
  auto* dump_cmd = app.add_subcommand("dump-logs", "run a scenario and dump the logs as JSON lines");
  dump_cmd->add_option("--scenario", dump.scenario, "scenario JSON file")->required();
  dump_cmd->add_option("--seed", dump.seed, "override the scenario seed");
  dump_cmd->add_option("--steps", dump.steps, "stop after this many scheduler steps");
  dump_cmd->add_option("--out", dump.out, "JSON lines file (default stdout)");
  dump_cmd->add_option("--trace", dump.trace, "also dump the event trace");
  dump_cmd->add_option("--replay", dump.replay, "also dump every replay trace");
  dump_cmd->add_option("--checkpoints", dump.checkpoints, "directory for the latest checkpoint payloads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*sim_cmd) return cmd_sim(sim);
    if (*pcf_cmd) return cmd_pcf(pcf);
    if (*daly_cmd) return cmd_daly(delta, mtbf);
    if (*place_cmd) return cmd_placement(place);
    if (*dump_cmd) return cmd_dump_logs(dump);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const LookupError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InfeasiblePlacement& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
