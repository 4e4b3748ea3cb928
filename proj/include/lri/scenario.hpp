#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lri/apex.hpp"
#include "lri/error.hpp"
#include "lri/hydra.hpp"
#include "lri/raven.hpp"
#include "lri/riskcore.hpp"
#include "lri/simengine.hpp"
#include "lri/topology.hpp"

namespace lri {

struct CampaignSection {
  /// Empty means every strategy.
  std::vector<Strategy> strategies;
  std::map<Strategy, EscalationParams> escalation;
  std::int64_t budget = 3000;
  double max_risk_threshold = 100.0;
  std::optional<std::uint64_t> seed;
  ExecutionOptions execution;

  bool operator==(const CampaignSection&) const = default;
};

struct OptimizerSection {
  std::vector<ConfigVariable> variables;
  ApexConfig config;

  bool operator==(const OptimizerSection&) const = default;
};

struct MonitorSection {
  LoopPolicy policy;
  std::int64_t duration_s = 3600;

  bool operator==(const MonitorSection&) const = default;
};

struct Scenario {
  TopologyGraph graph;
  TrafficProfile traffic;
  std::optional<CampaignSection> campaign;
  std::optional<OptimizerSection> optimizer;
  std::optional<MonitorSection> monitor;
  FailureModeCatalog failure_modes;
  std::uint64_t seed = 0;

  [[nodiscard]] ValidatedTopology topology() const { return validate_topology(graph); }
  bool operator==(const Scenario&) const = default;
};

namespace detail {

using nlohmann::json;

template <class E, std::size_t N>
std::optional<E> enum_from_string(std::string_view s, const E (&values)[N]) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

inline constexpr ComponentKind kKinds[] = {ComponentKind::cache,   ComponentKind::load_balancer,
                                           ComponentKind::circuit_breaker, ComponentKind::queue,
                                           ComponentKind::service, ComponentKind::database,
                                           ComponentKind::entry};
inline constexpr LatencyModel kModels[] = {LatencyModel::mm1, LatencyModel::linear, LatencyModel::table};
inline constexpr TrafficPattern kPatterns[] = {TrafficPattern::constant, TrafficPattern::diurnal,
                                               TrafficPattern::spike};
inline constexpr ChangeAlgorithm kAlgorithms[] = {ChangeAlgorithm::cusum, ChangeAlgorithm::page_hinkley};
inline constexpr ConfigParameter kParameters[] = {ConfigParameter::cache_size, ConfigParameter::pool_size,
                                                  ConfigParameter::trip_threshold, ConfigParameter::queue_depth,
                                                  ConfigParameter::replicas};

/// A JSON object being consumed field by field. Every key must be claimed
/// before `finish()`, which is what makes the schema strict.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(Errc::SchemaError, path_.empty() ? "<root>" : path_, "expected an object");
  }

  [[nodiscard]] std::string at(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }
  [[nodiscard]] bool has(std::string_view key) const { return j_.contains(key); }

  const json& need(std::string_view key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw Error(Errc::SchemaError, at(key), "required field missing");
    seen_.insert(std::string(key));
    return *it;
  }
  const json* maybe(std::string_view key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(std::string(key));
    return &*it;
  }

  template <class T>
  T req(std::string_view key) {
    return as<T>(need(key), at(key));
  }
  template <class T>
  void opt(std::string_view key, T& out) {
    if (const json* v = maybe(key)) out = as<T>(*v, at(key));
  }
  template <class T>
  void opt(std::string_view key, std::optional<T>& out) {
    if (const json* v = maybe(key)) out = as<T>(*v, at(key));
  }
  template <class E, std::size_t N>
  void opt_enum(std::string_view key, E& out, const E (&values)[N]) {
    if (const json* v = maybe(key)) out = as_enum(*v, at(key), values);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw Error(Errc::SchemaError, at(key), "unknown field");
    }
  }

  template <class T>
  static T as(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(Errc::SchemaError, path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw Error(Errc::SchemaError, path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw Error(Errc::SchemaError, path, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned()) {
        throw Error(Errc::SchemaError, path, "expected a non-negative integer");
      }
      return v.get<T>();
    } else {
      if (!v.is_number()) throw Error(Errc::SchemaError, path, "expected a number");
      return v.get<T>();
    }
  }

  template <class E, std::size_t N>
  static E as_enum(const json& v, const std::string& path, const E (&values)[N]) {
    const auto name = as<std::string>(v, path);
    if (auto e = enum_from_string(name, values)) return *e;
    throw Error(Errc::SchemaError, path, "unknown value '" + name + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline const json& array_at(const json& v, const std::string& path) {
  if (!v.is_array()) throw Error(Errc::SchemaError, path, "expected an array");
  return v;
}

inline std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline LatencyProfile read_latency(const json& j, const std::string& path) {
  Reader r(j, path);
  LatencyProfile p;
  r.opt("base_latency_ms", p.base_latency_ms);
  r.opt_enum("model", p.model, kModels);
  r.opt("saturation_cap_ms", p.saturation_cap_ms);
  if (const json* pts = r.maybe("table_points")) {
    const std::string at = r.at("table_points");
    array_at(*pts, at);
    for (std::size_t i = 0; i < pts->size(); ++i) {
      const json& pt = (*pts)[i];
      const std::string ip = index_path(at, i);
      if (!pt.is_array() || pt.size() != 2) throw Error(Errc::SchemaError, ip, "expected [utilization, latency_ms]");
      p.table_points.emplace_back(Reader::as<double>(pt[0], ip), Reader::as<double>(pt[1], ip));
    }
  }
  r.finish();
  return p;
}

inline OptimizationParams read_params(const json& j, const std::string& path, ComponentKind kind) {
  Reader r(j, path);
  OptimizationParams out;
  switch (kind) {
    case ComponentKind::cache: {
      CacheParams p;
      r.opt("hit_rate", p.hit_rate);
      r.opt("cache_size", p.cache_size);
      r.opt("hit_max", p.hit_max);
      r.opt("size_scale", p.size_scale);
      r.opt("hit_degradation_per_tick", p.hit_degradation_per_tick);
      out = p;
      break;
    }
    case ComponentKind::circuit_breaker: {
      BreakerParams p;
      r.opt("trip_threshold", p.trip_threshold);
      r.opt("recovery_ticks", p.recovery_ticks);
      r.opt("half_open_probe_fraction", p.half_open_probe_fraction);
      out = p;
      break;
    }
    case ComponentKind::load_balancer: {
      LoadBalancerParams p;
      r.opt("replicas", p.replicas);
      out = p;
      break;
    }
    case ComponentKind::queue: {
      QueueParams p;
      r.opt("queue_depth", p.queue_depth);
      out = p;
      break;
    }
    case ComponentKind::service:
    case ComponentKind::database: {
      PoolParams p;
      r.opt("pool_size", p.pool_size);
      r.opt("rps_per_connection", p.rps_per_connection);
      out = p;
      break;
    }
    case ComponentKind::entry: break;
  }
  r.finish();
  return out;
}

inline ComponentSpec read_component(const json& j, const std::string& path) {
  Reader r(j, path);
  ComponentSpec c;
  c.id = r.req<std::string>("id");
  c.kind = Reader::as_enum(r.need("kind"), r.at("kind"), kKinds);
  c.capacity_rps = r.req<double>("capacity_rps");
  if (const json* lp = r.maybe("latency_profile")) c.latency_profile = read_latency(*lp, r.at("latency_profile"));
  r.opt("mttr_minutes", c.mttr_minutes);
  r.opt("observability_coverage", c.observability_coverage);
  r.opt("criticality", c.criticality);
  r.opt("bypass_probability", c.bypass_probability);
  if (const json* op = r.maybe("optimization_params")) {
    if (c.kind == ComponentKind::entry) {
      throw Error(Errc::SchemaError, r.at("optimization_params"), "entry components take no parameters");
    }
    c.optimization_params = read_params(*op, r.at("optimization_params"), c.kind);
  }
  r.finish();
  return c;
}

inline DependencyEdge read_edge(const json& j, const std::string& path) {
  Reader r(j, path);
  DependencyEdge e;
  e.from = r.req<std::string>("from");
  e.to = r.req<std::string>("to");
  r.opt("load_fraction", e.load_fraction);
  r.opt("declared_amplification", e.declared_amplification);
  r.opt("edge_observability", e.edge_observability);
  r.finish();
  return e;
}

inline TrafficProfile read_traffic(const json& j, const std::string& path) {
  Reader r(j, path);
  TrafficProfile t;
  r.opt_enum("pattern", t.pattern, kPatterns);
  r.opt("base_rps", t.base_rps);
  r.opt("spike_multiplier", t.spike_multiplier);
  r.opt("spike_start_s", t.spike_start_s);
  r.opt("spike_duration_s", t.spike_duration_s);
  r.opt("diurnal_period_s", t.diurnal_period_s);
  r.opt("diurnal_amplitude", t.diurnal_amplitude);
  r.opt("noise_fraction", t.noise_fraction);
  r.finish();
  return t;
}

inline SafetyThresholds read_safety(const json& j, const std::string& path) {
  Reader r(j, path);
  SafetyThresholds s;
  r.opt("max_error_fraction", s.max_error_fraction);
  r.opt("max_latency_ratio", s.max_latency_ratio);
  r.opt("max_utilization", s.max_utilization);
  r.finish();
  return s;
}

inline Strategy read_strategy(const json& v, const std::string& path) {
  const auto name = Reader::as<std::string>(v, path);
  if (auto s = strategy_from_string(name)) return *s;
  throw Error(Errc::SchemaError, path, "unknown strategy '" + name + "'");
}

inline CampaignSection read_campaign(const json& j, const std::string& path) {
  Reader r(j, path);
  CampaignSection c;
  if (const json* s = r.maybe("strategies")) {
    const std::string at = r.at("strategies");
    array_at(*s, at);
    for (std::size_t i = 0; i < s->size(); ++i) c.strategies.push_back(read_strategy((*s)[i], index_path(at, i)));
  }
  if (const json* esc = r.maybe("escalation")) {
    Reader er(*esc, r.at("escalation"));
    for (Strategy s : kAllStrategies) {
      if (const json* p = er.maybe(to_string(s))) {
        Reader pr(*p, er.at(to_string(s)));
        EscalationParams e;
        pr.opt("start", e.start);
        pr.opt("factor", e.factor);
        pr.opt("cap", e.cap);
        pr.finish();
        c.escalation[s] = e;
      }
    }
    er.finish();
  }
  r.opt("budget", c.budget);
  r.opt("max_risk_threshold", c.max_risk_threshold);
  r.opt("seed", c.seed);
  r.opt("baseline_ticks", c.execution.baseline_ticks);
  r.opt("step_ticks", c.execution.step_ticks);
  if (const json* s = r.maybe("safety")) c.execution.safety = read_safety(*s, r.at("safety"));
  r.finish();
  return c;
}

inline void read_apex_fields(Reader& r, ApexConfig& c) {
  r.opt("population", c.population);
  r.opt("generations", c.generations);
  r.opt("crossover_rate", c.crossover_rate);
  r.opt("mutation_rate", c.mutation_rate);
  r.opt("tau_risk", c.tau_risk);
  if (const json* w = r.maybe("weights")) {
    Reader wr(*w, r.at("weights"));
    wr.opt("alpha", c.weights.alpha);
    wr.opt("beta", c.weights.beta);
    wr.opt("gamma", c.weights.gamma);
    wr.opt("epsilon", c.weights.epsilon);
    wr.finish();
  }
  r.opt("resilience_reserve_fraction", c.resilience_reserve_fraction);
  r.opt("eval_duration_s", c.eval_duration_s);
  r.opt("amplification_duration_s", c.amplification_duration_s);
  r.opt("eta_crossover", c.eta_crossover);
  r.opt("eta_mutation", c.eta_mutation);
  r.opt("threads", c.threads);
  r.opt("seed", c.seed);
}

inline OptimizerSection read_optimizer(const json& j, const std::string& path) {
  Reader r(j, path);
  OptimizerSection o;
  const std::string at = r.at("variables");
  const json& vars = array_at(r.need("variables"), at);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    Reader vr(vars[i], index_path(at, i));
    ConfigVariable v;
    v.component = vr.req<std::string>("component");
    v.parameter = Reader::as_enum(vr.need("parameter"), vr.at("parameter"), kParameters);
    v.lo = vr.req<double>("lo");
    v.hi = vr.req<double>("hi");
    vr.opt("integer", v.is_integer);
    vr.finish();
    o.variables.push_back(v);
  }
  read_apex_fields(r, o.config);
  r.finish();
  return o;
}

inline MonitorSection read_monitor(const json& j, const std::string& path) {
  Reader r(j, path);
  MonitorSection m;
  LoopPolicy& p = m.policy;
  r.opt("duration_s", m.duration_s);
  r.opt("lri_trigger", p.lri_trigger);
  r.opt("cooldown_ticks", p.cooldown_ticks);
  r.opt("gradual_steps", p.gradual_steps);
  r.opt("step_interval_ticks", p.step_interval_ticks);
  r.opt("trial_ticks", p.trial_ticks);
  if (const json* w = r.maybe("window")) {
    Reader wr(*w, r.at("window"));
    wr.opt("duration_ticks", p.window.duration_ticks);
    wr.opt("overlap_fraction", p.window.overlap_fraction);
    wr.finish();
  }
  if (const json* d = r.maybe("detector")) {
    Reader dr(*d, r.at("detector"));
    DetectorConfig det;
    dr.opt_enum("algorithm", det.algorithm, kAlgorithms);
    dr.opt("delta", det.delta);
    det.lambda = dr.req<double>("lambda");
    dr.opt("mu0", det.mu0);
    dr.finish();
    p.detector = det;
  }
  if (const json* s = r.maybe("safety")) p.safety = read_safety(*s, r.at("safety"));
  if (const json* mi = r.maybe("mitigation")) {
    Reader mr(*mi, r.at("mitigation"));
    mr.opt("shadow_step", p.mitigation.shadow_step);
    mr.opt("shed_fraction", p.mitigation.shed_fraction);
    mr.finish();
  }
  r.opt("apply_mitigations", p.apply_mitigations);
  r.opt("optimize", p.optimize);
  r.finish();
  return m;
}

inline json write_latency(const LatencyProfile& p) {
  json j = {{"base_latency_ms", p.base_latency_ms},
            {"model", to_string(p.model)},
            {"saturation_cap_ms", p.saturation_cap_ms}};
  if (!p.table_points.empty()) {
    json pts = json::array();
    for (const auto& [u, l] : p.table_points) pts.push_back({u, l});
    j["table_points"] = pts;
  }
  return j;
}

inline std::optional<json> write_params(const OptimizationParams& params) {
  return std::visit(
      [](const auto& p) -> std::optional<json> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, CacheParams>) {
          json j = {{"hit_max", p.hit_max},
                    {"size_scale", p.size_scale},
                    {"hit_degradation_per_tick", p.hit_degradation_per_tick}};
          if (p.hit_rate) j["hit_rate"] = *p.hit_rate;
          if (p.cache_size) j["cache_size"] = *p.cache_size;
          return j;
        } else if constexpr (std::is_same_v<T, BreakerParams>) {
          return json{{"trip_threshold", p.trip_threshold},
                      {"recovery_ticks", p.recovery_ticks},
                      {"half_open_probe_fraction", p.half_open_probe_fraction}};
        } else if constexpr (std::is_same_v<T, LoadBalancerParams>) {
          return json{{"replicas", p.replicas}};
        } else if constexpr (std::is_same_v<T, QueueParams>) {
          return json{{"queue_depth", p.queue_depth}};
        } else {
          return json{{"pool_size", p.pool_size}, {"rps_per_connection", p.rps_per_connection}};
        }
      },
      params);
}

inline json write_safety(const SafetyThresholds& s) {
  return {{"max_error_fraction", s.max_error_fraction},
          {"max_latency_ratio", s.max_latency_ratio},
          {"max_utilization", s.max_utilization}};
}

inline json write_apex(const ApexConfig& c) {
  return {{"population", c.population},
          {"generations", c.generations},
          {"crossover_rate", c.crossover_rate},
          {"mutation_rate", c.mutation_rate},
          {"tau_risk", c.tau_risk},
          {"weights",
           {{"alpha", c.weights.alpha},
            {"beta", c.weights.beta},
            {"gamma", c.weights.gamma},
            {"epsilon", c.weights.epsilon}}},
          {"resilience_reserve_fraction", c.resilience_reserve_fraction},
          {"eval_duration_s", c.eval_duration_s},
          {"amplification_duration_s", c.amplification_duration_s},
          {"eta_crossover", c.eta_crossover},
          {"eta_mutation", c.eta_mutation},
          {"threads", c.threads},
          {"seed", c.seed}};
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using detail::json;
  json components = json::array();
  for (const auto& c : s.graph.components) {
    json j = {{"id", c.id},
              {"kind", to_string(c.kind)},
              {"capacity_rps", c.capacity_rps},
              {"latency_profile", detail::write_latency(c.latency_profile)},
              {"mttr_minutes", c.mttr_minutes},
              {"observability_coverage", c.observability_coverage},
              {"criticality", c.criticality},
              {"bypass_probability", c.bypass_probability}};
    if (auto p = detail::write_params(c.optimization_params)) j["optimization_params"] = *p;
    components.push_back(j);
  }
  json edges = json::array();
  for (const auto& e : s.graph.edges) {
    json j = {{"from", e.from},
              {"to", e.to},
              {"load_fraction", e.load_fraction},
              {"edge_observability", e.edge_observability}};
    if (e.declared_amplification) j["declared_amplification"] = *e.declared_amplification;
    edges.push_back(j);
  }
  const TrafficProfile& t = s.traffic;
  json out = {{"components", components},
              {"edges", edges},
              {"entries", s.graph.entry_ids},
              {"traffic",
               {{"pattern", to_string(t.pattern)},
                {"base_rps", t.base_rps},
                {"spike_multiplier", t.spike_multiplier},
                {"spike_start_s", t.spike_start_s},
                {"spike_duration_s", t.spike_duration_s},
                {"diurnal_period_s", t.diurnal_period_s},
                {"diurnal_amplitude", t.diurnal_amplitude},
                {"noise_fraction", t.noise_fraction}}},
              {"seed", s.seed}};
  if (s.campaign) {
    const auto& c = *s.campaign;
    json strategies = json::array();
    for (Strategy st : c.strategies) strategies.push_back(to_string(st));
    json esc = json::object();
    for (const auto& [st, e] : c.escalation) {
      esc[std::string(to_string(st))] = {{"start", e.start}, {"factor", e.factor}, {"cap", e.cap}};
    }
    json j = {{"strategies", strategies},
              {"escalation", esc},
              {"budget", c.budget},
              {"max_risk_threshold", c.max_risk_threshold},
              {"baseline_ticks", c.execution.baseline_ticks},
              {"step_ticks", c.execution.step_ticks},
              {"safety", detail::write_safety(c.execution.safety)}};
    if (c.seed) j["seed"] = *c.seed;
    out["campaign"] = j;
  }
  if (s.optimizer) {
    json vars = json::array();
    for (const auto& v : s.optimizer->variables) {
      vars.push_back({{"component", v.component},
                      {"parameter", to_string(v.parameter)},
                      {"lo", v.lo},
                      {"hi", v.hi},
                      {"integer", v.is_integer}});
    }
    json j = detail::write_apex(s.optimizer->config);
    j["variables"] = vars;
    out["optimizer"] = j;
  }
  if (s.monitor) {
    const LoopPolicy& p = s.monitor->policy;
    json j = {{"duration_s", s.monitor->duration_s},
              {"lri_trigger", p.lri_trigger},
              {"cooldown_ticks", p.cooldown_ticks},
              {"gradual_steps", p.gradual_steps},
              {"step_interval_ticks", p.step_interval_ticks},
              {"trial_ticks", p.trial_ticks},
              {"window", {{"duration_ticks", p.window.duration_ticks}, {"overlap_fraction", p.window.overlap_fraction}}},
              {"safety", detail::write_safety(p.safety)},
              {"mitigation", {{"shadow_step", p.mitigation.shadow_step}, {"shed_fraction", p.mitigation.shed_fraction}}},
              {"apply_mitigations", p.apply_mitigations},
              {"optimize", p.optimize}};
    if (p.detector) {
      json d = {{"algorithm", to_string(p.detector->algorithm)},
                {"delta", p.detector->delta},
                {"lambda", p.detector->lambda}};
      if (p.detector->mu0) d["mu0"] = *p.detector->mu0;
      j["detector"] = d;
    }
    out["monitor"] = j;
  }
  if (!s.failure_modes.empty()) {
    json fm = json::object();
    for (const auto& [id, modes] : s.failure_modes) {
      json list = json::array();
      for (const auto& m : modes) list.push_back({{"name", m.name}, {"detection_probability", m.detection_probability}});
      fm[id] = list;
    }
    out["failure_modes"] = fm;
  }
  return out;
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

/// Strict parse plus topology validation. Section cross-references (campaign
/// strategies, optimizer components) are checked against the graph.
inline Scenario parse_scenario(std::string_view text) {
  using detail::json;
  using detail::Reader;
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col), e.what());
  }

  Reader r(root, "");
  Scenario s;
  const json& comps = detail::array_at(r.need("components"), "components");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    s.graph.components.push_back(detail::read_component(comps[i], detail::index_path("components", i)));
  }
  const json& edges = detail::array_at(r.need("edges"), "edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    s.graph.edges.push_back(detail::read_edge(edges[i], detail::index_path("edges", i)));
  }
  const json& entries = detail::array_at(r.need("entries"), "entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    s.graph.entry_ids.push_back(Reader::as<std::string>(entries[i], detail::index_path("entries", i)));
  }
  s.traffic = detail::read_traffic(r.need("traffic"), "traffic");
  r.opt("seed", s.seed);
  if (const json* c = r.maybe("campaign")) s.campaign = detail::read_campaign(*c, "campaign");
  if (const json* o = r.maybe("optimizer")) s.optimizer = detail::read_optimizer(*o, "optimizer");
  if (const json* m = r.maybe("monitor")) s.monitor = detail::read_monitor(*m, "monitor");
  if (const json* fm = r.maybe("failure_modes")) {
    Reader fr(*fm, "failure_modes");
    for (const auto& [id, list] : fm->items()) {
      const std::string at = fr.at(id);
      detail::array_at(fr.need(id), at);
      auto& modes = s.failure_modes[id];
      for (std::size_t i = 0; i < list.size(); ++i) {
        Reader mr(list[i], detail::index_path(at, i));
        FailureMode m;
        m.name = mr.req<std::string>("name");
        m.detection_probability = mr.req<double>("detection_probability");
        mr.finish();
        modes.push_back(m);
      }
    }
    fr.finish();
  }
  r.finish();

  const ValidatedTopology topo = s.topology();
  validate_traffic(s.traffic);
  if (s.optimizer) check_bounds(topo, s.optimizer->variables);
  for (const auto& [id, modes] : s.failure_modes) (void)topo.index_of(id);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, path, "cannot read file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

/// FNV-1a over the canonical serialization, as 16 hex digits.
inline std::string scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scenario_to_json(s).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

}  // namespace lri
