#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lri/error.hpp"
#include "lri/rng.hpp"
#include "lri/simengine.hpp"
#include "lri/topology.hpp"

namespace lri {

// ---------------------------------------------------------------------------
// Amplification measurement

/// Bypass window used when none is given: five minutes of one-second ticks.
inline constexpr std::int64_t kDefaultBypassDurationS = 300;
/// Below this baseline load at the dependency, alpha is undefined.
inline constexpr double kZeroBaselineRps = 1e-9;

namespace detail {

// Puts `sim` into full-bypass mode for the optimization at `from` towards edge `e`.
inline void engage_full_bypass(Simulator& sim, const ComponentSpec& from, std::size_t edge) {
  switch (from.kind) {
    case ComponentKind::cache: sim.set_forced_bypass(from.id, 1.0); break;
    case ComponentKind::circuit_breaker: sim.set_forced_closed(from.id, true); break;
    case ComponentKind::load_balancer: sim.set_concentrate(from.id, edge); break;
    default: throw Error(Errc::NotBypassable, from.id, std::string(to_string(from.kind)));
  }
}

inline double mean_offered(Simulator& sim, std::size_t target, std::int64_t ticks) {
  double sum = 0.0;
  for (std::int64_t t = 0; t < ticks; ++t) sum += sim.step().components[target].offered_rps;
  return sum / static_cast<double>(ticks);
}

}  // namespace detail

/// Baseline run, then a run with `from`'s optimization fully bypassed; alpha is
/// the ratio of mean offered load at `to` over the same window.
inline AmplificationEntry measure_amplification(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                                std::string_view from, std::string_view to,
                                                std::int64_t bypass_duration_s = kDefaultBypassDurationS,
                                                std::uint64_t seed = 0) {
  const auto edge = topo.edge_index(from, to);
  if (!edge) throw Error(Errc::UnknownEdge, std::string(from) + "->" + std::string(to));
  if (bypass_duration_s < 1) throw Error(Errc::InvalidField, "bypass_duration_s", "must be >= 1");
  const ComponentSpec& source = topo.component(from);
  if (!is_bypassable(source.kind)) throw Error(Errc::NotBypassable, source.id, std::string(to_string(source.kind)));
  const std::size_t target = topo.index_of(to);

  Simulator baseline(topo, traffic, seed);
  const double base = detail::mean_offered(baseline, target, bypass_duration_s);
  if (base < kZeroBaselineRps) throw Error(Errc::ZeroBaseline, std::string(to));

  Simulator stressed(topo, traffic, seed);
  detail::engage_full_bypass(stressed, source, *edge);
  const double load = detail::mean_offered(stressed, target, bypass_duration_s);
  return {load / base, AmplificationSource::measured, static_cast<double>(bypass_duration_s)};
}

struct AmplificationOptions {
  /// Measure every bypassable edge, overriding declared values.
  bool measure_all = false;
  std::int64_t bypass_duration_s = kDefaultBypassDurationS;
};

/// Declared alphas where given; measured where the source is bypassable and no
/// value was declared (or `measure_all`); 1.0 (assumed) otherwise.
inline AmplificationMap build_amplification_map(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                                std::uint64_t seed, const AmplificationOptions& opts = {}) {
  AmplificationMap map;
  for (std::size_t e = 0; e < topo.edges().size(); ++e) {
    const auto& edge = topo.edge(e);
    const bool bypassable = is_bypassable(topo.component(edge.from).kind);
    if (bypassable && (opts.measure_all || !edge.declared_amplification)) {
      map.set(edge.from, edge.to,
              measure_amplification(topo, traffic, edge.from, edge.to, opts.bypass_duration_s,
                                    derive_seed(seed, "riskcore.measure", e)));
    } else if (edge.declared_amplification) {
      map.set_declared(edge.from, edge.to, *edge.declared_amplification);
    } else {
      map.set(edge.from, edge.to, {1.0, AmplificationSource::assumed, 0.0});
    }
  }
  return map;
}

/// What an operator knows before any perturbation: declared alphas, 1.0 elsewhere.
inline AmplificationMap prior_amplification_map(const ValidatedTopology& topo) {
  AmplificationMap map;
  for (const auto& edge : topo.edges()) {
    if (edge.declared_amplification) {
      map.set_declared(edge.from, edge.to, *edge.declared_amplification);
    } else {
      map.set(edge.from, edge.to, {1.0, AmplificationSource::assumed, 0.0});
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Latent accumulation, LRI, classification

/// L_i = sum over predecessors j of alpha_ji * P(bypass_j) * (1 - O_ji).
inline double compute_latent_accumulation(const ValidatedTopology& topo, const AmplificationMap& amap,
                                          std::string_view id) {
  const std::size_t i = topo.index_of(id);
  double total = 0.0;
  for (std::size_t e : topo.incoming(i)) {
    const auto& edge = topo.edge(e);
    const auto* entry = amap.find(edge.from, edge.to);
    if (!entry) throw Error(Errc::MissingAmplification, edge.from + "->" + edge.to);
    total += entry->alpha * topo.component(edge.from).bypass_probability * (1.0 - edge.edge_observability);
  }
  return total;
}

/// Inputs of the LRI formula for one component.
struct LriInputs {
  double alpha_max = 1.0;
  int depth = 1;
  double criticality = 1.0;
  double observability = 1.0;
  double recovery = 1.0;

  bool operator==(const LriInputs&) const = default;
};

inline LriInputs lri_inputs(const ValidatedTopology& topo, const AmplificationMap& amap, std::string_view id) {
  const ComponentSpec& c = topo.component(id);
  return {max_upstream_amplification(topo, amap, id), dependency_depth(topo, id), c.criticality,
          c.observability_coverage, c.recovery_rate()};
}

/// (alpha_max * d * beta) / (O * R). Units are minutes since R is per minute.
inline double lri_from_inputs(const LriInputs& in) {
  return (in.alpha_max * in.depth * in.criticality) / (in.observability * in.recovery);
}

inline double compute_lri(const ValidatedTopology& topo, const AmplificationMap& amap, std::string_view id) {
  const ComponentSpec& c = topo.component(id);
  if (c.observability_coverage <= 0.0) throw Error(Errc::ZeroObservability, c.id);
  return lri_from_inputs(lri_inputs(topo, amap, id));
}

enum class RiskLevel { Low, Medium, High };

constexpr std::string_view to_string(RiskLevel l) noexcept {
  switch (l) {
    case RiskLevel::Low: return "Low";
    case RiskLevel::Medium: return "Medium";
    case RiskLevel::High: return "High";
  }
  return "unknown";
}

inline constexpr double kMediumRiskThreshold = 2.0;
inline constexpr double kHighRiskThreshold = 10.0;

inline RiskLevel classify_risk(double lri) {
  if (!(lri >= 0.0)) throw Error(Errc::InvalidField, "lri", "must be a non-negative number");
  if (lri < kMediumRiskThreshold) return RiskLevel::Low;
  if (lri < kHighRiskThreshold) return RiskLevel::Medium;
  return RiskLevel::High;
}

/// Finer six-way banding, reported as an annotation next to the three-level class.
enum class RiskBand { Low, MediumLow, Medium, High, VeryHigh, Critical };

constexpr std::string_view to_string(RiskBand b) noexcept {
  switch (b) {
    case RiskBand::Low: return "Low";
    case RiskBand::MediumLow: return "Medium-Low";
    case RiskBand::Medium: return "Medium";
    case RiskBand::High: return "High";
    case RiskBand::VeryHigh: return "Very High";
    case RiskBand::Critical: return "Critical";
  }
  return "unknown";
}

inline RiskBand risk_band(double lri) {
  if (!(lri >= 0.0)) throw Error(Errc::InvalidField, "lri", "must be a non-negative number");
  if (lri < 2.0) return RiskBand::Low;
  if (lri < 5.0) return RiskBand::MediumLow;
  if (lri < 10.0) return RiskBand::Medium;
  if (lri < 20.0) return RiskBand::High;
  if (lri <= 50.0) return RiskBand::VeryHigh;
  return RiskBand::Critical;
}

// ---------------------------------------------------------------------------
// Resilience observability

struct FailureMode {
  std::string name;
  double detection_probability = 0.0;

  bool operator==(const FailureMode&) const = default;
};

using FailureModeCatalog = std::map<std::string, std::vector<FailureMode>>;

/// Mean detection probability over the component's failure modes.
inline double compute_ros(const FailureModeCatalog& catalog, std::string_view id) {
  auto it = catalog.find(std::string(id));
  if (it == catalog.end() || it->second.empty()) throw Error(Errc::EmptyCatalog, std::string(id));
  double sum = 0.0;
  for (const auto& mode : it->second) {
    if (!(mode.detection_probability >= 0.0 && mode.detection_probability <= 1.0)) {
      throw Error(Errc::InvalidField, "detection_probability", std::string(id) + "/" + mode.name);
    }
    sum += mode.detection_probability;
  }
  return sum / static_cast<double>(it->second.size());
}

enum class Metric { offered_rps, served_rps, error_rps, error_fraction, utilization, latency_ms, hit_rate };

constexpr std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::offered_rps: return "offered_rps";
    case Metric::served_rps: return "served_rps";
    case Metric::error_rps: return "error_rps";
    case Metric::error_fraction: return "error_fraction";
    case Metric::utilization: return "utilization";
    case Metric::latency_ms: return "latency_ms";
    case Metric::hit_rate: return "hit_rate";
  }
  return "unknown";
}

inline std::optional<Metric> metric_from_string(std::string_view name) {
  for (Metric m : {Metric::offered_rps, Metric::served_rps, Metric::error_rps, Metric::error_fraction,
                   Metric::utilization, Metric::latency_ms, Metric::hit_rate}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

inline double metric_value(const ComponentMetrics& m, Metric metric) noexcept {
  switch (metric) {
    case Metric::offered_rps: return m.offered_rps;
    case Metric::served_rps: return m.served_rps;
    case Metric::error_rps: return m.error_rps;
    case Metric::error_fraction: return m.offered_rps > 0.0 ? m.error_rps / m.offered_rps : 0.0;
    case Metric::utilization: return m.utilization;
    case Metric::latency_ms: return m.latency_ms;
    case Metric::hit_rate: return m.hit_rate.value_or(0.0);
  }
  return 0.0;
}

/// Fires when `metric` of `component` is above (or below) `threshold`.
struct MonitorRule {
  std::string component;
  Metric metric = Metric::utilization;
  bool fire_above = true;
  double threshold = 0.0;

  [[nodiscard]] bool fires(const TickSnapshot& snap, const ValidatedTopology& topo) const {
    const double v = metric_value(snap.components[topo.index_of(component)], metric);
    return fire_above ? v > threshold : v < threshold;
  }

  bool operator==(const MonitorRule&) const = default;
};

struct DetectionOptions {
  /// Onsets are drawn uniformly from [onset_min_s, onset_max_s].
  std::int64_t onset_min_s = 60;
  std::int64_t onset_max_s = 240;
  /// Ticks simulated after onset.
  std::int64_t horizon_s = 120;
  /// The failure reaches full magnitude linearly over this many ticks (0 = at once).
  std::int64_t ramp_ticks = 0;
};

/// Magnitude of a ramped failure `elapsed` ticks after onset (elapsed >= 0).
inline double ramped_magnitude(const PerturbationAction& failure, std::int64_t elapsed, std::int64_t ramp_ticks) {
  if (ramp_ticks <= 0 || failure.strategy == Strategy::lb_manipulation) return failure.magnitude;
  const double progress = std::min(1.0, static_cast<double>(elapsed + 1) / static_cast<double>(ramp_ticks));
  if (failure.strategy == Strategy::resource_constraint) return 1.0 - (1.0 - failure.magnitude) * progress;
  return failure.magnitude * progress;
}

/// Onset ticks used by estimate_detection_probability, in trial order.
inline std::vector<std::int64_t> detection_onsets(std::uint64_t seed, int trials, const DetectionOptions& opts) {
  Rng gen = make_stream(seed, "riskcore.detection_onset");
  std::uniform_int_distribution<std::int64_t> onset(opts.onset_min_s, opts.onset_max_s);
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(std::max(trials, 0)));
  for (int k = 0; k < trials; ++k) out.push_back(onset(gen));
  return out;
}

/// Fraction of trials in which some rule fires at or before the first tick on
/// which the failure drives any component's error_rps above zero. Rules only
/// count from the onset tick on.
inline double estimate_detection_probability(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                             const PerturbationAction& failure,
                                             std::span<const MonitorRule> rules, int trials, std::uint64_t seed,
                                             const DetectionOptions& opts = {}) {
  if (trials < 1) throw Error(Errc::InvalidField, "trials", "must be >= 1");
  if (opts.onset_min_s < 0 || opts.onset_max_s < opts.onset_min_s || opts.horizon_s < 1) {
    throw Error(Errc::InvalidField, "detection_options");
  }
  check_action(topo, failure);
  for (const auto& r : rules) (void)topo.index_of(r.component);

  const auto onsets = detection_onsets(seed, trials, opts);
  int detected = 0;
  for (int k = 0; k < trials; ++k) {
    const std::int64_t onset = onsets[static_cast<std::size_t>(k)];
    Simulator sim(topo, traffic, derive_seed(seed, "riskcore.detection_trial", static_cast<std::uint64_t>(k)));
    std::optional<std::int64_t> detect_tick, fail_tick;
    for (std::int64_t t = 0; t < onset + opts.horizon_s; ++t) {
      if (t >= onset) {
        PerturbationAction a = failure;
        a.magnitude = ramped_magnitude(failure, t - onset, opts.ramp_ticks);
        a.started_tick = onset;
        sim.apply(std::move(a));
      }
      const TickSnapshot snap = sim.step();
      if (t < onset) continue;
      if (!detect_tick && std::any_of(rules.begin(), rules.end(),
                                      [&](const MonitorRule& r) { return r.fires(snap, topo); })) {
        detect_tick = t;
      }
      if (!fail_tick && std::any_of(snap.components.begin(), snap.components.end(),
                                    [](const ComponentMetrics& m) { return m.error_rps > 1e-9; })) {
        fail_tick = t;
      }
      if (detect_tick || fail_tick) break;
    }
    if (detect_tick && (!fail_tick || *detect_tick <= *fail_tick)) ++detected;
  }
  return static_cast<double>(detected) / static_cast<double>(trials);
}

// ---------------------------------------------------------------------------
// System-wide assessment

struct ComponentRisk {
  std::string id;
  int rank = 0;
  double lri = 0.0;
  RiskLevel level = RiskLevel::Low;
  RiskBand band = RiskBand::Low;
  double latent_accumulation = 0.0;
  std::optional<double> ros;
  LriInputs inputs;

  bool operator==(const ComponentRisk&) const = default;
};

struct RiskReport {
  /// Sorted by lri descending, ties by id ascending; rank is 1-based.
  std::vector<ComponentRisk> ranked;

  [[nodiscard]] const ComponentRisk& at(std::string_view id) const {
    for (const auto& r : ranked) {
      if (r.id == id) return r;
    }
    throw Error(Errc::UnknownComponent, std::string(id));
  }

  bool operator==(const RiskReport&) const = default;
};

inline RiskReport assess_system_risk(const ValidatedTopology& topo, const AmplificationMap& amap,
                                     const FailureModeCatalog& catalog = {}) {
  RiskReport report;
  for (const auto& c : topo.components()) {
    ComponentRisk r;
    r.id = c.id;
    try {
      r.lri = compute_lri(topo, amap, c.id);
      r.inputs = lri_inputs(topo, amap, c.id);
      r.latent_accumulation = compute_latent_accumulation(topo, amap, c.id);
    } catch (const Error& e) {
      throw Error(e.code(), e.subject(), "while assessing '" + c.id + "'");
    }
    r.level = classify_risk(r.lri);
    r.band = risk_band(r.lri);
    auto it = catalog.find(c.id);
    if (it != catalog.end() && !it->second.empty()) r.ros = compute_ros(catalog, c.id);
    report.ranked.push_back(std::move(r));
  }
  std::sort(report.ranked.begin(), report.ranked.end(), [](const ComponentRisk& a, const ComponentRisk& b) {
    if (a.lri != b.lri) return a.lri > b.lri;
    return a.id < b.id;
  });
  for (std::size_t k = 0; k < report.ranked.size(); ++k) report.ranked[k].rank = static_cast<int>(k + 1);
  return report;
}

/// Highest LRI over all components.
inline double system_lri(const ValidatedTopology& topo, const AmplificationMap& amap) {
  double best = 0.0;
  for (const auto& c : topo.components()) best = std::max(best, compute_lri(topo, amap, c.id));
  return best;
}

}  // namespace lri
