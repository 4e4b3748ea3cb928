// lri: scenario-driven front end for the simulator, risk engine, campaign
// planner, optimizer and monitor.
//
// Exit codes: 0 ok, 1 usage, 2 scenario error, 3 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "lri/apex.hpp"
#include "lri/hydra.hpp"
#include "lri/raven.hpp"
#include "lri/report.hpp"
#include "lri/riskcore.hpp"
#include "lri/scenario.hpp"
#include "lri/simengine.hpp"

namespace fs = std::filesystem;
using namespace lri;

namespace {

enum Exit { kOk = 0, kUsage = 1, kScenario = 2, kRuntime = 3 };

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string scenario;
  std::string format = "json";
  std::string out;
  std::optional<std::uint64_t> seed;
};

// Output is written to a sibling temp file and renamed into place, so a
// failed run never leaves a partial file behind.
void emit(const Common& c, const std::string& data) {
  if (c.out.empty()) {
    std::cout << data;
    std::cout.flush();
    return;
  }
  const fs::path target(c.out);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << data;
    f.close();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into " + target.string());
  }
}

Scenario load(const Common& c) {
  try {
    return load_scenario(c.scenario);
  } catch (const std::exception& e) {
    throw ScenarioError(e.what());
  }
}

std::uint64_t master_seed(const Common& c, const Scenario& s) { return c.seed.value_or(s.seed); }

report::Provenance provenance(const Scenario& s, std::uint64_t seed) { return {scenario_hash(s), seed}; }

bool csv(const Common& c) { return c.format == "csv"; }

int cmd_validate(const Common& c) {
  const Scenario s = load(c);
  std::ostringstream out;
  out << "ok " << s.graph.components.size() << " components, " << s.graph.edges.size() << " edges, hash "
      << scenario_hash(s) << "\n";
  emit(c, out.str());
  return kOk;
}

int cmd_simulate(const Common& c, std::int64_t duration) {
  const Scenario s = load(c);
  const std::uint64_t seed = master_seed(c, s);
  TelemetryTrace trace = run_simulation(s.topology(), s.traffic, duration, seed);
  trace.metadata.scenario_hash = scenario_hash(s);
  emit(c, csv(c) ? report::trace_csv(trace) : report::trace_ndjson(trace));
  return kOk;
}

int cmd_assess(const Common& c, bool measure, std::int64_t window) {
  const Scenario s = load(c);
  const std::uint64_t seed = master_seed(c, s);
  const ValidatedTopology topo = s.topology();
  const AmplificationMap amap = build_amplification_map(topo, s.traffic, seed, {measure, window});
  const RiskReport r = assess_system_risk(topo, amap, s.failure_modes);
  emit(c, csv(c) ? report::risk_report_csv(r) : report::risk_report_json(r, amap, provenance(s, seed)));
  return kOk;
}

int cmd_measure(const Common& c, const std::string& edge, std::int64_t window) {
  const Scenario s = load(c);
  const auto comma = edge.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("--edge", "expected FROM,TO");
  const std::string from = edge.substr(0, comma), to = edge.substr(comma + 1);
  const std::uint64_t seed = master_seed(c, s);
  const AmplificationEntry e = measure_amplification(s.topology(), s.traffic, from, to, window, seed);
  emit(c, csv(c) ? report::amplification_entry_csv(from, to, e)
                 : report::amplification_entry_json(from, to, e, provenance(s, seed)));
  return kOk;
}

int cmd_campaign(const Common& c) {
  const Scenario s = load(c);
  const CampaignSection section = s.campaign.value_or(CampaignSection{});
  const std::uint64_t seed = c.seed ? *c.seed : section.seed.value_or(s.seed);
  const ValidatedTopology topo = s.topology();

  PlanOptions plan_opts;
  plan_opts.whitelist = section.strategies;
  plan_opts.escalation = section.escalation;
  plan_opts.step_ticks = section.execution.step_ticks;
  const CampaignPlan plan = plan_campaign(topo, {}, section.budget, seed, plan_opts);

  CampaignOptions opts;
  opts.max_risk_threshold = section.max_risk_threshold;
  opts.execution = section.execution;
  const CampaignReport rep = run_campaign(topo, s.traffic, plan, {}, opts);
  const RiskReport after = assess_system_risk(topo, rep.amplification, s.failure_modes);
  emit(c, csv(c) ? report::campaign_csv(rep) : report::campaign_json(plan, rep, after, provenance(s, seed)));
  return kOk;
}

int cmd_optimize(const Common& c, unsigned threads) {
  const Scenario s = load(c);
  if (!s.optimizer) throw ScenarioError("SchemaError(optimizer): section required for optimize");
  ApexConfig cfg = s.optimizer->config;
  cfg.seed = master_seed(c, s);
  if (threads) cfg.threads = threads;
  const ParetoFront front = optimize(s.topology(), s.traffic, s.optimizer->variables, cfg);
  emit(c, csv(c) ? report::front_csv(front) : report::front_json(front, provenance(s, cfg.seed)));
  return kOk;
}

int cmd_monitor(const Common& c, std::optional<std::int64_t> duration) {
  const Scenario s = load(c);
  const std::uint64_t seed = master_seed(c, s);
  MonitorSection m = s.monitor.value_or(MonitorSection{});
  std::vector<ConfigVariable> vars;
  ApexConfig cfg;
  if (s.optimizer) {
    vars = s.optimizer->variables;
    cfg = s.optimizer->config;
  } else {
    m.policy.optimize = false;
  }
  cfg.seed = seed;
  const OptimizationLog log =
      continuous_loop(s.topology(), s.traffic, vars, m.policy, cfg, duration.value_or(m.duration_s), seed);
  emit(c, csv(c) ? report::loop_csv(log) : report::loop_jsonl(log, provenance(s, seed)));
  return kOk;
}

void add_common(CLI::App* sub, Common& c, bool with_format = true) {
  sub->add_option("scenario", c.scenario, "Scenario JSON file")->required();
  sub->add_option("--out", c.out, "Write output here instead of standard output");
  sub->add_option("--seed", c.seed, "Master seed (overrides the scenario's)");
  if (with_format) {
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent risk simulator and optimizer"};
  app.require_subcommand(1);

  Common common;
  std::int64_t sim_duration = 300;
  std::int64_t window = kDefaultBypassDurationS;
  bool measure = false;
  std::string edge;
  unsigned threads = 0;
  std::optional<std::int64_t> monitor_duration;

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  add_common(validate, common, false);

  auto* simulate = app.add_subcommand("simulate", "Run the simulator and export telemetry");
  add_common(simulate, common);
  simulate->add_option("--duration", sim_duration, "Ticks (seconds) to simulate")->check(CLI::PositiveNumber);

  auto* assess = app.add_subcommand("assess", "System-wide latent risk report");
  add_common(assess, common);
  assess->add_flag("--measure", measure, "Measure every bypassable edge, overriding declared values");
  assess->add_option("--duration", window, "Bypass measurement window in ticks")->check(CLI::PositiveNumber);

  auto* measure_amp = app.add_subcommand("measure-amp", "Measure one edge's load amplification");
  add_common(measure_amp, common);
  measure_amp->add_option("--edge", edge, "FROM,TO")->required();
  measure_amp->add_option("--duration", window, "Bypass measurement window in ticks")->check(CLI::PositiveNumber);

  auto* campaign = app.add_subcommand("campaign", "Plan and run a perturbation campaign");
  add_common(campaign, common);

  auto* optimize_cmd = app.add_subcommand("optimize", "Risk-constrained configuration search");
  add_common(optimize_cmd, common);
  optimize_cmd->add_option("--threads", threads, "Evaluation threads (results do not depend on it)");

  auto* monitor = app.add_subcommand("monitor", "Run the continuous monitoring loop");
  add_common(monitor, common);
  monitor->add_option("--duration", monitor_duration, "Ticks to run")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(common);
    if (*simulate) return cmd_simulate(common, sim_duration);
    if (*assess) return cmd_assess(common, measure, window);
    if (*measure_amp) return cmd_measure(common, edge, window);
    if (*campaign) return cmd_campaign(common);
    if (*optimize_cmd) return cmd_optimize(common, threads);
    if (*monitor) return cmd_monitor(common, monitor_duration);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kScenario;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
