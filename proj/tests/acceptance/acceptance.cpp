// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lri/apex.hpp"
#include "lri/hydra.hpp"
#include "lri/raven.hpp"
#include "lri/riskcore.hpp"
#include "lri/scenario.hpp"
#include "../test_support.hpp"

using namespace lri;
using namespace lri::testing;
namespace fs = std::filesystem;

namespace {

const std::string kDir = LRI_SCENARIO_DIR;
const std::string kCli = LRI_CLI_PATH;

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages; any failure fails the criterion.
struct Check {
  Verdict out;
  int failures = 0;
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    out.pass = false;
    if (++failures <= 3) out.detail += (out.detail.empty() ? "" : "; ") + what;
  }
};

TrafficProfile constant(double rps) {
  TrafficProfile t;
  t.base_rps = rps;
  return t;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

ValidatedTopology chain(double h, double beta, double obs, double mttr, double db_capacity = 1e5) {
  auto g = cache_db_graph(h, db_capacity);
  g.components[2].criticality = beta;
  g.components[2].observability_coverage = obs;
  g.components[2].mttr_minutes = mttr;
  return validate_topology(g);
}

// ---------------------------------------------------------------------------

Verdict amplification_oracle() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  for (double h : {0.5, 0.9, 0.99}) {
    const auto topo = validate_topology(cache_db_graph(h));
    const double alpha = measure_amplification(topo, constant(1000.0), "cache", "db", 300, 1).alpha;
    const double expected = 1.0 / (1.0 - h);
    c.expect(std::abs(alpha - expected) <= 0.10 * expected, "h=" + fmt(h) + " alpha " + fmt(alpha));
  }
  const double s = seconds_since(t0);
  c.expect(s < 5.0, "took " + fmt(s) + "s");
  if (c.out.pass) c.out.detail = "3 hit rates within 10%, " + fmt(s) + "s";
  return c.out;
}

Verdict lri_suite() {
  Check c;
  struct Case {
    bool through_cache;  // entry -> cache -> db (depth 3) or entry -> db (depth 2)
    double alpha, beta, obs, mttr;
    RiskLevel level;
  };
  using L = RiskLevel;
  const std::vector<Case> cases{
      {true, 1.0, 1.0, 1.0, 0.5, L::Low},        {true, 10.0, 3.0, 0.6, 10.0, L::High},
      {true, 2.0, 1.0, 0.9, 1.0, L::Medium},     {true, 1.5, 1.2, 0.8, 0.2, L::Low},
      {true, 100.0, 1.0, 1.0, 1.0, L::High},     {true, 1.1, 1.0, 0.95, 0.6, L::Medium},
      {true, 3.0, 2.0, 0.5, 0.25, L::Medium},    {true, 4.0, 2.0, 0.5, 0.25, L::High},
      {true, 1.0, 1.0, 1.0, 0.6, L::Low},        {true, 7.5, 1.8, 0.35, 45.0, L::High},
      {true, 1.25, 1.0, 0.75, 0.3, L::Low},      {true, 50.0, 1.0, 0.1, 0.02, L::High},
      {true, 1.9, 1.0, 1.0, 1.7, L::Medium},     {false, 1.0, 1.0, 1.0, 1.0, L::Medium},
      {false, 1.0, 5.0, 1.0, 1.0, L::High},      {false, 1.0, 2.5, 0.5, 1.0, L::High},
      {false, 1.0, 1.0, 0.5, 0.5, L::Medium},    {false, 1.0, 1.0, 1.0, 0.75, L::Low},
      {false, 1.0, 4.9, 1.0, 1.0, L::Medium},    {false, 1.0, 1.0, 1.0, 0.999, L::Low},
  };
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Case& k_case = cases[k];
    TopologyGraph g;
    if (k_case.through_cache) {
      g = cache_db_graph(0.5);
    } else {
      g.components = {component("entry", ComponentKind::entry, 1e6), component("db", ComponentKind::database)};
      g.edges = {edge("entry", "db")};
      g.entry_ids = {"entry"};
    }
    ComponentSpec& db = g.components.back();
    db.criticality = k_case.beta;
    db.observability_coverage = k_case.obs;
    db.mttr_minutes = k_case.mttr;
    const auto topo = validate_topology(g);
    AmplificationMap amap = prior_amplification_map(topo);
    if (k_case.through_cache) amap.set_declared("cache", "db", k_case.alpha);
    const double depth = k_case.through_cache ? 3.0 : 2.0;
    const double longhand = k_case.alpha * depth * k_case.beta / (k_case.obs * (1.0 / k_case.mttr));
    const double got = compute_lri(topo, amap, "db");
    c.expect(std::abs(got - longhand) <= 1e-9, "case " + std::to_string(k) + " lri " + fmt(got));
    c.expect(classify_risk(got) == k_case.level, "case " + std::to_string(k) + " level");
  }
  c.expect(classify_risk(2.0) == L::Medium && classify_risk(std::nextafter(2.0, 0.0)) == L::Low, "boundary 2.0");
  c.expect(classify_risk(10.0) == L::High && classify_risk(std::nextafter(10.0, 0.0)) == L::Medium, "boundary 10.0");
  if (c.out.pass) c.out.detail = "20 cases to 1e-9, boundaries exact";
  return c.out;
}

void expect_restored(Check& c, const RiskTrace& trace, const std::string& name) {
  if (!trace.rollback_tick) return;
  for (std::size_t t = 0; t < trace.telemetry.ticks.size(); ++t) {
    if (trace.telemetry.ticks[t].tick_s >= *trace.rollback_tick) {
      c.expect(trace.active_after_tick[t] == 0, name + ": action retained after rollback");
    }
  }
}

Verdict escalation_conformance() {
  Check c;
  const auto schedule = escalation_schedule(Strategy::cache_bypass, default_escalation(Strategy::cache_bypass));
  c.expect(schedule.size() == 11, "schedule has " + std::to_string(schedule.size()) + " steps");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    c.expect(schedule[k] == 0.005 * std::pow(1.4, static_cast<double>(k)) && schedule[k] <= 0.20,
             "step " + std::to_string(k));
  }

  struct Fixture {
    const char* name;
    ValidatedTopology topo;
    Termination expected;
  };
  const auto odds = [](double g) { return g / (1.0 + g); };
  const std::vector<Fixture> fixtures{
      // LRI 8.08, 9.71, then 12 on the third step.
      {"high_risk", chain(odds(2.0 / 0.0098), 1.0, 0.75, 1.0), Termination::high_risk},
      // LRI 6.5 then 8.7: gradient 2.2.
      {"rapid_escalation", chain(odds(1100.0), 1.0, 1.0, 1.0 / 3.0), Termination::rapid_escalation},
      // The db runs at 50%; the bypass eventually doubles its latency.
      {"safety_rollback", chain(0.9, 1.0, 1.0, 1.0 / 3.0, 200.0), Termination::safety_rollback},
  };
  std::string seen;
  for (const auto& f : fixtures) {
    Simulator sim(f.topo, constant(1000.0), 3);
    const auto trace = execute_cache_bypass(sim, prior_amplification_map(f.topo), "cache", 100.0);
    c.expect(trace.termination == f.expected, std::string(f.name) + " ended with " +
                                                  std::string(to_string(trace.termination)));
    c.expect(sim.active_perturbations().empty(), std::string(f.name) + " left perturbations active");
    expect_restored(c, trace, f.name);
    seen += (seen.empty() ? "" : ", ") + std::string(f.name) + "@" + std::to_string(trace.steps.size());
  }
  if (c.out.pass) c.out.detail = "11-step schedule; " + seen;
  return c.out;
}

Verdict safety_suite() {
  Check c;
  TopologyGraph single;
  single.components = {component("entry", ComponentKind::entry, 1e6), component("db", ComponentKind::database, 1000.0)};
  single.edges = {edge("entry", "db")};
  single.entry_ids = {"entry"};
  TopologyGraph split;
  split.components = {component("entry", ComponentKind::entry, 1e6), component("svc", ComponentKind::service, 1e5),
                      component("dba", ComponentKind::database, 1000.0),
                      component("dbb", ComponentKind::database, 1e5)};
  split.edges = {edge("entry", "svc"), edge("svc", "dba", 0.5), edge("svc", "dbb", 0.5)};
  split.entry_ids = {"entry"};

  struct Case {
    const char* name;
    TopologyGraph graph;
    double rps;
    PerturbationAction action;
    EscalationParams escalation;
    SafetySignal expected;
  };
  const std::vector<Case> cases{
      // Utilization 800/900 with latency only 1.8x baseline and no errors.
      {"utilization", single, 800.0, {Strategy::resource_constraint, "db", 0.1, 0, ""}, {0.1, 2.0, 0.1},
       SafetySignal::utilization},
      {"latency", single, 100.0, {Strategy::latency_injection, "db", 30.0, 0, ""}, {30.0, 2.0, 30.0},
       SafetySignal::p95_latency},
      // Isolating one of two backends fails half of svc's calls.
      {"error", split, 100.0, {Strategy::dependency_isolation, "dbb", 1.0, 0, "svc"}, {}, SafetySignal::error_rate},
  };
  for (const auto& k : cases) {
    const auto topo = validate_topology(k.graph);
    Simulator sim(topo, constant(k.rps), 9);
    const ExecutionOptions opts;
    const auto trace = execute_strategy(sim, prior_amplification_map(topo), k.action, k.escalation, 1e9, opts);
    const std::string name = k.name;
    c.expect(trace.termination == Termination::safety_rollback, name + ": no rollback");
    c.expect(trace.verdict.violations.size() == 1 && trace.verdict.violations[0].signal == k.expected,
             name + ": expected exactly one " + std::string(to_string(k.expected)) + " violation");
    // The first perturbed tick violates and is rolled back on that tick.
    c.expect(trace.rollback_tick == opts.baseline_ticks, name + ": rollback tick");
    c.expect(!trace.telemetry.ticks.empty() && trace.telemetry.ticks.back().tick_s == opts.baseline_ticks,
             name + ": ran past the violation");
    c.expect(sim.active_perturbations().empty(), name + ": perturbation still active");
    expect_restored(c, trace, name);
  }
  if (c.out.pass) c.out.detail = "error, latency, utilization each roll back on the violation tick";
  return c.out;
}

double spearman(std::vector<double> a, std::vector<double> b) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// Each scenario: entry -> cache -> db with a random declared alpha (the cache's
// hit rate matches it) and the db sized with random headroom over its normal
// load. Severity is the worst db error fraction during a full bypass.
Verdict severity_correlation() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> lri, severity;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng gen = make_stream(seed, "acceptance.severity");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double alpha = std::exp(std::log(1.5) + (std::log(200.0) - std::log(1.5)) * u(gen));
    const double headroom = 1.5 + 2.0 * u(gen);
    const double rps = 1000.0;
    auto g = cache_db_graph(1.0 - 1.0 / alpha, headroom * rps / alpha);
    g.edges[1].declared_amplification = alpha;
    g.components[2].criticality = 2.0;
    g.components[2].observability_coverage = 0.7;
    g.components[2].mttr_minutes = 5.0;
    const auto topo = validate_topology(g);
    TrafficProfile traffic = constant(rps);
    traffic.noise_fraction = 0.05;

    lri.push_back(system_lri(topo, build_amplification_map(topo, traffic, seed)));
    Simulator sim(topo, traffic, seed);
    for (int t = 0; t < 60; ++t) sim.step();
    sim.set_forced_bypass("cache", 1.0);
    double peak = 0.0;
    const auto db = topo.index_of("db");
    for (int t = 0; t < 120; ++t) {
      const auto snap = sim.step();
      const auto& m = snap.components[db];
      if (m.offered_rps > 0.0) peak = std::max(peak, m.error_rps / m.offered_rps);
    }
    severity.push_back(peak);
  }
  const double rho = spearman(lri, severity);
  const double s = seconds_since(t0);
  c.expect(rho >= 0.7, "spearman " + fmt(rho));
  c.expect(s < 120.0, "took " + fmt(s) + "s");
  if (c.out.pass) c.out.detail = "spearman " + fmt(rho) + " over 30 scenarios, " + fmt(s) + "s";
  return c.out;
}

Verdict apex_oracle() {
  Check c;
  const Scenario s = load_scenario(kDir + "/apex_toy.json");
  const auto topo = s.topology();
  const auto& vars = s.optimizer->variables;
  ApexConfig cfg = s.optimizer->config;
  cfg.seed = s.seed;
  c.expect(cfg.population == 100 && cfg.generations == 40, "fixture is not pop 100 / 40 gens");
  const auto t0 = std::chrono::steady_clock::now();
  const ParetoFront front = optimize(topo, s.traffic, vars, cfg);
  const double secs = seconds_since(t0);

  for (const auto& m : front.members) {
    c.expect(m.f.feasible && m.f.lri <= cfg.tau_risk, "infeasible member, lri " + fmt(m.f.lri));
  }
  std::vector<FrontMember> grid;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double cache = vars[0].lo + (vars[0].hi - vars[0].lo) * i / 49.0;
      const double pool = vars[1].lo + (vars[1].hi - vars[1].lo) * j / 49.0;
      ConfigurationVector x{{cache, std::round(pool)}};
      grid.push_back({x, evaluate(topo, s.traffic, vars, x, 0, cfg.eval_options()), 0.0});
    }
  }
  const auto oracle = detail::feasible_front(grid);
  int missed = 0;
  for (const auto& p : oracle) {
    const bool covered = std::any_of(front.members.begin(), front.members.end(), [&](const FrontMember& q) {
      for (std::size_t k = 0; k < p.f.values.size(); ++k) {
        if (q.f.values[k] < p.f.values[k] - 0.02 * std::abs(p.f.values[k])) return false;
      }
      return true;
    });
    if (!covered) ++missed;
  }
  c.expect(!oracle.empty(), "empty grid front");
  c.expect(missed == 0, std::to_string(missed) + " of " + std::to_string(oracle.size()) + " grid points uncovered");
  c.expect(secs < 300.0, "took " + fmt(secs) + "s");
  if (c.out.pass) {
    c.out.detail = std::to_string(front.members.size()) + " members cover " + std::to_string(oracle.size()) +
                   " grid front points within 2%, " + fmt(secs) + "s";
  }
  return c.out;
}

Verdict fitness_and_allocation() {
  Check c;
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const FitnessWeights w{0.01 + u(gen), 0.01 + u(gen), 0.01 + u(gen), 0.001 + 0.1 * u(gen)};
    const double perf = u(gen), lri = 50.0 * u(gen), stab = u(gen);
    const double f = fitness(perf, lri, stab, w);
    c.expect(fitness(perf + 0.01 + u(gen), lri, stab, w) > f, "not increasing in performance");
    c.expect(fitness(perf, lri + 0.01 + u(gen), stab, w) < f, "not decreasing in lri");
    c.expect(fitness(perf, lri, stab + 0.01 + u(gen), w) > f, "not increasing in stability");
  }
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 6;
    std::vector<CacheLayer> layers(n);
    double sum = 0.0;
    for (auto& l : layers) {
      l = {0.05 + u(gen), 0.1 + 10.0 * u(gen), 3.0 * u(gen)};
      sum += l.baseline_share;
    }
    double check = 0.0;
    for (auto& l : layers) check += (l.baseline_share /= sum);
    layers.back().baseline_share += 1.0 - check;
    const double total = 1.0 + 1e4 * u(gen), lri = 60.0 * u(gen);
    const auto base = allocate_cache(total, layers, lri);
    c.expect(std::abs(std::accumulate(base.begin(), base.end(), 0.0) - total) <= 1e-9, "allocation does not sum");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<CacheLayer> shuffled;
    for (auto p : perm) shuffled.push_back(layers[p]);
    const auto moved = allocate_cache(total, shuffled, lri);
    for (int k = 0; k < n; ++k) c.expect(std::abs(moved[k] - base[perm[k]]) <= 1e-9 * total, "not equivariant");
  }
  const std::vector<CacheLayer> twins{{0.5, 3.0, 1.0}, {0.5, 3.0, 1.0}};
  const auto even = allocate_cache(1000.0, twins, 25.0);
  c.expect(std::abs(even[0] - 500.0) <= 1e-9 && std::abs(even[1] - 500.0) <= 1e-9, "symmetric case not 50/50");
  if (c.out.pass) c.out.detail = "1000 triples monotone; 200 allocations sum and permute; 50/50 split";
  return c.out;
}

Verdict raven_efficacy() {
  Check c;
  const Scenario s = load_scenario(kDir + "/drift.json");
  ApexConfig cfg = s.optimizer->config;
  cfg.seed = s.seed;
  LoopPolicy policy = s.monitor->policy;
  const std::int64_t duration = s.monitor->duration_s;
  const auto on = continuous_loop(s.topology(), s.traffic, s.optimizer->variables, policy, cfg, duration, s.seed);
  LoopPolicy off_policy = policy;
  off_policy.optimize = false;
  off_policy.apply_mitigations = false;
  const auto off = continuous_loop(s.topology(), s.traffic, {}, off_policy, cfg, duration, s.seed);

  const double lri_on = on.final_lri().value_or(NAN), lri_off = off.final_lri().value_or(NAN);
  c.expect(lri_on < lri_off, "final LRI " + fmt(lri_on) + " vs control " + fmt(lri_off));
  c.expect(off.reconfigurations() == 0, "control reconfigured");
  c.expect(on.reconfigurations() > 0, "loop never reconfigured");
  std::optional<std::int64_t> last;
  for (const auto& r : on.records) {
    for (const auto& step : r.steps) {
      c.expect(!step.applied || step.verdict.passed, "step applied without a passing safety check");
    }
    if (r.applied_steps > 0) {
      if (last) c.expect(r.tick - *last >= policy.cooldown_ticks, "cooldown violated at " + std::to_string(r.tick));
      last = r.tick;
    }
  }
  if (c.out.pass) {
    c.out.detail = "final LRI " + fmt(lri_on) + " vs " + fmt(lri_off) + " disabled, " +
                   std::to_string(on.reconfigurations()) + " reconfigurations";
  }
  return c.out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / "lri_acceptance_golden";
  fs::remove_all(dir);
  fs::create_directories(dir);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(kDir)) {
    const fs::path file = entry.path();
    if (file.extension() != ".json" || file.stem() == "cyclic") continue;
    const Scenario s = load_scenario(file.string());
    std::vector<std::string> commands{"validate", "simulate", "assess", "assess --measure", "campaign", "monitor"};
    const auto topo = s.topology();
    for (const auto& e : s.graph.edges) {
      if (topo.component(e.from).kind == ComponentKind::cache) {
        commands.push_back("measure-amp --edge " + e.from + "," + e.to);
        break;
      }
    }
    if (s.optimizer) commands.push_back("optimize");
    for (std::size_t k = 0; k < commands.size(); ++k) {
      for (const char* format : {"json", "csv"}) {
        if (commands[k] == "validate" && std::string(format) == "csv") continue;
        std::string outputs[2];
        for (int run = 0; run < 2; ++run) {
          const fs::path out = dir / (file.stem().string() + "_" + std::to_string(k) + "_" + format + "_" +
                                      std::to_string(run));
          std::string cmd = kCli + " " + commands[k] + " " + file.string() + " --out " + out.string();
          if (commands[k] != "validate") cmd += std::string(" --format ") + format;
          const int status = std::system((cmd + " 2>/dev/null").c_str());
          c.expect(status == 0, "failed: " + cmd);
          outputs[run] = slurp(out);
        }
        c.expect(!outputs[0].empty() && outputs[0] == outputs[1], "differs: " + file.stem().string() + " " +
                                                                      commands[k] + " " + format);
        ++compared;
      }
    }
  }
  fs::remove_all(dir);
  if (c.out.pass) c.out.detail = std::to_string(compared) + " output pairs byte-identical";
  return c.out;
}

// Entry -> svc fanning out to several cache -> db branches, some one hop
// deeper. One branch hides a very effective cache in front of a poorly
// observed db. With alpha 1 everywhere the victim rarely ranks first, since
// the decoys have slower recovery, so the ranking depends on what the
// campaign measures.
Verdict discovery_ranking() {
  Check c;
  int first = 0, first_prior = 0;
  std::string misses;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng gen = make_stream(seed, "acceptance.discovery");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int branches = 3 + static_cast<int>(3 * u(gen));
    const int planted = static_cast<int>(branches * u(gen)) % branches;
    TopologyGraph g;
    g.components.push_back(component("entry", ComponentKind::entry, 1e7));
    g.components.push_back(component("svc", ComponentKind::service, 1e7));
    g.edges.push_back(edge("entry", "svc"));
    g.entry_ids = {"entry"};
    std::string victim;
    for (int b = 0; b < branches; ++b) {
      const std::string n = std::to_string(b);
      std::string head = "svc";
      if (u(gen) < 0.4) {
        g.components.push_back(component("mid" + n, ComponentKind::service, 1e7));
        g.edges.push_back(edge(head, "mid" + n, 1.0 / branches));
        head = "mid" + n;
      }
      const bool is_victim = b == planted;
      g.components.push_back(cache("cache" + n, is_victim ? 0.97 + 0.025 * u(gen) : 0.2 + 0.5 * u(gen), 1e7));
      ComponentSpec db = component("db" + n, ComponentKind::database, 1e7);
      db.criticality = is_victim ? 1.0 : 1.0 + u(gen);
      db.observability_coverage = is_victim ? 0.25 + 0.15 * u(gen) : 0.6 + 0.4 * u(gen);
      db.mttr_minutes = is_victim ? 1.0 : 1.0 + 2.0 * u(gen);
      g.components.push_back(db);
      g.edges.push_back(edge(head, "cache" + n, head == "svc" ? 1.0 / branches : 1.0));
      g.edges.push_back(edge("cache" + n, "db" + n));
      if (is_victim) victim = "db" + n;
    }
    const auto topo = validate_topology(g);
    TrafficProfile traffic = constant(2000.0);
    traffic.noise_fraction = 0.05;
    PlanOptions opts;
    opts.whitelist = {Strategy::cache_bypass};
    // Room for about four draws per cache.
    const auto plan = plan_campaign(topo, {}, 4 * branches * 11 * kStepTicks, seed, opts);
    const auto rep = run_campaign(topo, traffic, plan);
    if (assess_system_risk(topo, prior_amplification_map(topo), {}).ranked.front().id == victim) ++first_prior;
    const auto risk = assess_system_risk(topo, rep.amplification, {});
    if (!risk.ranked.empty() && risk.ranked.front().id == victim) {
      ++first;
    } else {
      misses += " seed " + std::to_string(seed);
    }
  }
  c.expect(first >= 9, "victim first in " + std::to_string(first) + "/10;" + misses);
  if (c.out.pass) c.out.detail = "victim ranked first in " + std::to_string(first) + "/10 (" +
                                std::to_string(first_prior) + "/10 before the campaign)";
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"amplification oracle", amplification_oracle},
      {"LRI and thresholds", lri_suite},
      {"escalation conformance", escalation_conformance},
      {"safety suite", safety_suite},
      {"LRI-severity correlation", severity_correlation},
      {"APEX grid oracle", apex_oracle},
      {"fitness and allocation", fitness_and_allocation},
      {"RAVEN loop efficacy", raven_efficacy},
      {"determinism", determinism},
      {"discovery ranking", discovery_ranking},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (k + 1) << " (" << criteria[k].first
              << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
