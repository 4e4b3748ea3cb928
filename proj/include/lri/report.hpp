#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lri/apex.hpp"
#include "lri/hydra.hpp"
#include "lri/raven.hpp"
#include "lri/riskcore.hpp"
#include "lri/simengine.hpp"

// Report writers. JSON uses insertion-ordered objects so field order is part
// of the format; CSV numbers use shortest round-trip formatting.

namespace lri::report {

using ojson = nlohmann::ordered_json;

struct Provenance {
  std::string scenario_hash;
  std::uint64_t seed = 0;
};

inline std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += escape(cells[i]);
    }
    out_ += '\n';
  }
  [[nodiscard]] const std::string& str() const noexcept { return out_; }

 private:
  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  std::string out_;
};

inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

inline ojson provenance(const Provenance& p) { return {{"scenario_hash", p.scenario_hash}, {"seed", p.seed}}; }

// ---------------------------------------------------------------------------
// Telemetry

inline ojson tick_record(const TelemetryTrace& trace, const TickSnapshot& snap, std::size_t c) {
  const auto& m = snap.components[c];
  ojson r = {{"tick_s", snap.tick_s},
             {"component", trace.component_ids[c]},
             {"offered_rps", m.offered_rps},
             {"served_rps", m.served_rps},
             {"error_rps", m.error_rps},
             {"utilization", m.utilization},
             {"latency_ms", m.latency_ms}};
  if (m.hit_rate) r["hit_rate"] = *m.hit_rate;
  if (m.breaker_state) r["breaker_state"] = to_string(*m.breaker_state);
  return r;
}

/// Newline-delimited: a metadata line, then one record per tick per component.
inline std::string trace_ndjson(const TelemetryTrace& trace) {
  ojson meta = {{"metadata",
                 {{"scenario_hash", trace.metadata.scenario_hash},
                  {"seed", trace.metadata.seed},
                  {"duration_s", trace.metadata.duration_s}}}};
  std::string out = meta.dump() + "\n";
  for (const auto& snap : trace.ticks) {
    for (std::size_t c = 0; c < trace.component_ids.size(); ++c) out += tick_record(trace, snap, c).dump() + "\n";
  }
  return out;
}

inline std::string trace_csv(const TelemetryTrace& trace) {
  Csv csv({"tick_s", "component", "offered_rps", "served_rps", "error_rps", "utilization", "latency_ms", "hit_rate",
           "breaker_state"});
  for (const auto& snap : trace.ticks) {
    for (std::size_t c = 0; c < trace.component_ids.size(); ++c) {
      const auto& m = snap.components[c];
      csv.row({std::to_string(snap.tick_s), trace.component_ids[c], num(m.offered_rps), num(m.served_rps),
               num(m.error_rps), num(m.utilization), num(m.latency_ms), m.hit_rate ? num(*m.hit_rate) : "",
               m.breaker_state ? std::string(to_string(*m.breaker_state)) : ""});
    }
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// Risk

inline ojson amplification_json(const AmplificationMap& amap) {
  ojson out = ojson::array();
  for (const auto& [key, e] : amap.entries()) {
    out.push_back({{"from", key.first},
                   {"to", key.second},
                   {"alpha", e.alpha},
                   {"source", to_string(e.source)},
                   {"measurement_window_s", e.measurement_window_s}});
  }
  return out;
}

inline ojson risk_json(const RiskReport& r) {
  ojson out = ojson::array();
  for (const auto& c : r.ranked) {
    ojson j = {{"component", c.id},
               {"rank", c.rank},
               {"lri", c.lri},
               {"level", to_string(c.level)},
               {"band", to_string(c.band)},
               {"alpha_max", c.inputs.alpha_max},
               {"depth", c.inputs.depth},
               {"criticality", c.inputs.criticality},
               {"observability", c.inputs.observability},
               {"recovery", c.inputs.recovery},
               {"latent_accumulation", c.latent_accumulation}};
    j["ros"] = c.ros ? ojson(*c.ros) : ojson(nullptr);
    out.push_back(j);
  }
  return out;
}

inline std::string risk_report_json(const RiskReport& r, const AmplificationMap& amap, const Provenance& p) {
  ojson j = provenance(p);
  j["system_lri"] = r.ranked.empty() ? 0.0 : r.ranked.front().lri;
  j["components"] = risk_json(r);
  j["amplification"] = amplification_json(amap);
  return dump(j);
}

inline std::string risk_report_csv(const RiskReport& r) {
  Csv csv({"component", "lri", "level", "rank", "alpha_max", "depth", "criticality", "observability", "recovery", "L_i",
           "ros"});
  for (const auto& c : r.ranked) {
    csv.row({c.id, num(c.lri), std::string(to_string(c.level)), std::to_string(c.rank), num(c.inputs.alpha_max),
             std::to_string(c.inputs.depth), num(c.inputs.criticality), num(c.inputs.observability),
             num(c.inputs.recovery), num(c.latent_accumulation), c.ros ? num(*c.ros) : ""});
  }
  return csv.str();
}

inline std::string amplification_entry_json(std::string_view from, std::string_view to, const AmplificationEntry& e,
                                            const Provenance& p) {
  ojson j = provenance(p);
  j["from"] = from;
  j["to"] = to;
  j["alpha"] = e.alpha;
  j["source"] = to_string(e.source);
  j["measurement_window_s"] = e.measurement_window_s;
  return dump(j);
}

inline std::string amplification_entry_csv(std::string_view from, std::string_view to, const AmplificationEntry& e) {
  Csv csv({"from", "to", "alpha", "source", "measurement_window_s"});
  csv.row({std::string(from), std::string(to), num(e.alpha), std::string(to_string(e.source)),
           num(e.measurement_window_s)});
  return csv.str();
}

// ---------------------------------------------------------------------------
// Campaign

inline ojson action_json(const PerturbationAction& a) {
  ojson j = {{"strategy", to_string(a.strategy)}, {"target", a.target}, {"magnitude", a.magnitude}};
  if (!a.peer.empty()) j["peer"] = a.peer;
  return j;
}

inline ojson verdict_json(const SafetyVerdict& v) {
  ojson violations = ojson::array();
  for (const auto& x : v.violations) {
    violations.push_back({{"signal", to_string(x.signal)},
                          {"component", x.component},
                          {"observed", x.observed},
                          {"threshold", x.threshold}});
  }
  return {{"passed", v.passed}, {"violations", violations}};
}

/// Raw telemetry stays out of the report; `simulate` exports it.
inline ojson trace_json(const RiskTrace& t) {
  ojson steps = ojson::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"magnitude", s.magnitude},
                     {"amplification", s.amplification},
                     {"lri", s.lri},
                     {"observed", s.observed},
                     {"first_tick", s.first_tick},
                     {"last_tick", s.last_tick}});
  }
  ojson edges = ojson::array();
  for (const auto& e : t.edge_alpha) edges.push_back({{"to", e.to}, {"alpha", e.alpha}});
  ojson j = {{"action", action_json(t.action)},
             {"termination", to_string(t.termination)},
             {"steps", steps},
             {"verdict", verdict_json(t.verdict)},
             {"edge_alpha", edges}};
  j["rollback_tick"] = t.rollback_tick ? ojson(*t.rollback_tick) : ojson(nullptr);
  return j;
}

inline std::string campaign_json(const CampaignPlan& plan, const CampaignReport& c, const RiskReport& after,
                                 const Provenance& p) {
  ojson j = provenance(p);
  ojson steps = ojson::array();
  for (const auto& s : plan.steps) {
    ojson step = {{"strategy", to_string(s.strategy)}, {"target", s.target}, {"cost_ticks", s.cost_ticks}};
    if (!s.peer.empty()) step["peer"] = s.peer;
    steps.push_back(step);
  }
  j["plan"] = {{"budget", plan.budget}, {"seed", plan.seed}, {"steps", steps}};
  ojson traces = ojson::array();
  for (const auto& t : c.traces) traces.push_back(trace_json(t));
  j["traces"] = traces;
  ojson discovered = ojson::array();
  for (const auto& d : c.discovered) {
    discovered.push_back({{"component", d.id},
                          {"lri", d.lri},
                          {"level", to_string(d.level)},
                          {"prior_lri", d.prior_lri},
                          {"prior_level", to_string(d.prior_level)},
                          {"step", d.step}});
  }
  j["discovered"] = discovered;
  ojson stats = ojson::array();
  for (const auto& [key, arm] : c.stats.entries()) {
    stats.push_back({{"strategy", to_string(key.first)},
                     {"kind", to_string(key.second)},
                     {"successes", arm.successes},
                     {"failures", arm.failures}});
  }
  j["stats"] = stats;
  j["amplification"] = amplification_json(c.amplification);
  j["assessment"] = risk_json(after);
  return dump(j);
}

/// One row per escalation step.
inline std::string campaign_csv(const CampaignReport& c) {
  Csv csv({"trace", "strategy", "target", "peer", "step", "magnitude", "amplification", "lri", "observed",
           "termination", "rollback_tick"});
  for (std::size_t t = 0; t < c.traces.size(); ++t) {
    const auto& tr = c.traces[t];
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
      const auto& s = tr.steps[k];
      csv.row({std::to_string(t), std::string(to_string(tr.action.strategy)), tr.action.target, tr.action.peer,
               std::to_string(k), num(s.magnitude), num(s.amplification), num(s.lri), s.observed,
               std::string(to_string(tr.termination)), tr.rollback_tick ? std::to_string(*tr.rollback_tick) : ""});
    }
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// Optimizer

inline ojson config_json(std::span<const ConfigVariable> vars, const ConfigurationVector& x) {
  ojson j = ojson::object();
  for (std::size_t k = 0; k < vars.size() && k < x.values.size(); ++k) j[vars[k].name()] = x.values[k];
  return j;
}

inline std::string front_json(const ParetoFront& f, const Provenance& p) {
  ojson j = provenance(p);
  ojson vars = ojson::array();
  for (const auto& v : f.variables) {
    vars.push_back({{"name", v.name()}, {"lo", v.lo}, {"hi", v.hi}, {"integer", v.is_integer}});
  }
  j["variables"] = vars;
  j["generations"] = f.generations;
  j["evaluations"] = f.evaluations;
  ojson members = ojson::array();
  for (const auto& m : f.members) {
    members.push_back({{"config", config_json(f.variables, m.x)},
                       {"throughput_rps", m.f.values.at(0)},
                       {"latency_ms", -m.f.values.at(1)},
                       {"efficiency", m.f.values.at(2)},
                       {"lri", m.f.lri},
                       {"performance", m.f.performance},
                       {"stability", m.f.stability},
                       {"fitness", m.fitness}});
  }
  j["members"] = members;
  return dump(j);
}

inline std::string front_csv(const ParetoFront& f) {
  std::vector<std::string> header;
  for (const auto& v : f.variables) header.push_back(v.name());
  for (const char* h : {"throughput_rps", "latency_ms", "efficiency", "lri", "fitness"}) header.emplace_back(h);
  Csv csv(header);
  for (const auto& m : f.members) {
    std::vector<std::string> row;
    for (double x : m.x.values) row.push_back(num(x));
    row.push_back(num(m.f.values.at(0)));
    row.push_back(num(-m.f.values.at(1)));
    row.push_back(num(m.f.values.at(2)));
    row.push_back(num(m.f.lri));
    row.push_back(num(m.fitness));
    csv.row(row);
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// Monitor

inline ojson mitigation_json(const MitigationAction& a) {
  ojson j = {{"kind", to_string(a.kind)}};
  if (a.kind == MitigationKind::increase_shadow_traffic) j["shadow_fraction_delta"] = a.shadow_fraction_delta;
  if (a.kind == MitigationKind::degrade_performance) j["shed_fraction"] = a.shed_fraction;
  if (a.snapshot_id) j["snapshot_id"] = *a.snapshot_id;
  return j;
}

/// JSON lines, one record per decision.
inline std::string loop_jsonl(const OptimizationLog& log, const Provenance& p) {
  std::string out;
  for (const auto& r : log.records) {
    ojson j = {{"tick", r.tick}, {"lri", r.lri}, {"trigger", to_string(r.trigger)}};
    j["chosen_config"] = r.chosen_config ? config_json(log.variables, *r.chosen_config) : ojson(nullptr);
    j["fitness"] = r.fitness ? ojson(*r.fitness) : ojson(nullptr);
    j["applied_steps"] = r.applied_steps;
    j["mitigation"] = mitigation_json(r.mitigation);
    j["level"] = to_string(r.level);
    j["outcome"] = to_string(r.outcome);
    j["detector_fired"] = r.detector_fired;
    j["current_config"] = config_json(log.variables, r.current_config);
    ojson steps = ojson::array();
    for (const auto& s : r.steps) {
      steps.push_back({{"config", config_json(log.variables, s.config)},
                       {"applied", s.applied},
                       {"verdict", verdict_json(s.verdict)}});
    }
    j["steps"] = steps;
    j["scenario_hash"] = p.scenario_hash;
    j["seed"] = p.seed;
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string loop_csv(const OptimizationLog& log) {
  Csv csv({"tick", "lri", "level", "trigger", "outcome", "applied_steps", "fitness", "mitigation"});
  for (const auto& r : log.records) {
    csv.row({std::to_string(r.tick), num(r.lri), std::string(to_string(r.level)), std::string(to_string(r.trigger)),
             std::string(to_string(r.outcome)), std::to_string(r.applied_steps), r.fitness ? num(*r.fitness) : "",
             std::string(to_string(r.mitigation.kind))});
  }
  return csv.str();
}

}  // namespace lri::report
