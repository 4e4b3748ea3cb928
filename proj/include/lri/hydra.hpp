#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lri/error.hpp"
#include "lri/riskcore.hpp"
#include "lri/rng.hpp"
#include "lri/simengine.hpp"
#include "lri/topology.hpp"

namespace lri {

// ---------------------------------------------------------------------------
// Escalation schedules

struct EscalationParams {
  double start = 0.005;
  double factor = 1.4;
  double cap = kMaxCacheBypass;

  bool operator==(const EscalationParams&) const = default;
};

inline constexpr std::int64_t kStepTicks = 90;
inline constexpr double kRapidEscalationGradient = 2.0;

/// Strategies applied once at full strength instead of escalated.
constexpr bool is_single_step(Strategy s) noexcept {
  return s == Strategy::breaker_bypass || s == Strategy::lb_manipulation || s == Strategy::dependency_isolation;
}

inline EscalationParams default_escalation(Strategy s) {
  switch (s) {
    case Strategy::cache_bypass: return {0.005, 1.4, kMaxCacheBypass};
    case Strategy::latency_injection: return {10.0, 2.0, 80.0};
    // Escalates the capacity *reduction*; the simulator sees 1 - r.
    case Strategy::resource_constraint: return {0.1, 2.0, 0.8};
    default: return {1.0, 1.0, 1.0};
  }
}

/// start * factor^k for k = 0, 1, ... while the value stays within cap.
inline std::vector<double> escalation_schedule(Strategy s, const EscalationParams& p) {
  if (is_single_step(s)) return {p.start};
  if (!(p.start > 0.0) || !(p.factor > 1.0) || !(p.cap >= p.start) || !std::isfinite(p.cap)) {
    throw Error(Errc::InvalidField, "escalation", std::string(to_string(s)));
  }
  if (s == Strategy::resource_constraint && p.cap >= 1.0) {
    throw Error(Errc::InvalidField, "escalation", "resource_constraint reduction must stay below 1");
  }
  if (s == Strategy::cache_bypass && p.cap > kMaxCacheBypass) {
    throw Error(Errc::InvalidField, "escalation", "cache bypass is capped at 0.20");
  }
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double v = p.start * std::pow(p.factor, k);
    if (v > p.cap) break;
    out.push_back(v);
  }
  return out;
}

/// Schedule value -> simulator magnitude.
constexpr double action_magnitude(Strategy s, double value) noexcept {
  return s == Strategy::resource_constraint ? 1.0 - value : value;
}

// ---------------------------------------------------------------------------
// Safety

enum class SafetySignal { error_rate, p95_latency, utilization };

constexpr std::string_view to_string(SafetySignal s) noexcept {
  switch (s) {
    case SafetySignal::error_rate: return "error_rate";
    case SafetySignal::p95_latency: return "p95_latency";
    case SafetySignal::utilization: return "utilization";
  }
  return "unknown";
}

struct SafetyThresholds {
  double max_error_fraction = 0.05;
  double max_latency_ratio = 2.0;
  double max_utilization = 0.85;

  bool operator==(const SafetyThresholds&) const = default;
};

struct SafetyViolation {
  SafetySignal signal = SafetySignal::error_rate;
  std::string component;
  double observed = 0.0;
  double threshold = 0.0;

  bool operator==(const SafetyViolation&) const = default;
};

struct SafetyVerdict {
  bool passed = true;
  std::vector<SafetyViolation> violations;

  bool operator==(const SafetyVerdict&) const = default;
};

/// Per component: window-mean error fraction, latency against twice the
/// baseline mean (the fluid model's P95 proxy), and utilization.
inline SafetyVerdict safety_check(std::span<const std::string> component_ids, std::span<const TickSnapshot> window,
                                  std::span<const TickSnapshot> baseline, const SafetyThresholds& limits = {}) {
  if (window.empty() || baseline.empty()) throw Error(Errc::InvalidField, "window", "must be non-empty");
  SafetyVerdict verdict;
  for (std::size_t c = 0; c < component_ids.size(); ++c) {
    double err = 0.0, lat = 0.0, util = 0.0, base_lat = 0.0;
    for (const auto& s : window) {
      const auto& m = s.components[c];
      err += m.offered_rps > 0.0 ? m.error_rps / m.offered_rps : 0.0;
      lat += m.latency_ms;
      util += m.utilization;
    }
    for (const auto& s : baseline) base_lat += s.components[c].latency_ms;
    const double w = static_cast<double>(window.size());
    err /= w;
    lat /= w;
    util /= w;
    base_lat /= static_cast<double>(baseline.size());

    const std::string& id = component_ids[c];
    if (err > limits.max_error_fraction) {
      verdict.violations.push_back({SafetySignal::error_rate, id, err, limits.max_error_fraction});
    }
    const double lat_limit = limits.max_latency_ratio * base_lat;
    if (base_lat > 0.0 && lat > lat_limit) verdict.violations.push_back({SafetySignal::p95_latency, id, lat, lat_limit});
    if (util > limits.max_utilization) {
      verdict.violations.push_back({SafetySignal::utilization, id, util, limits.max_utilization});
    }
  }
  verdict.passed = verdict.violations.empty();
  return verdict;
}

// ---------------------------------------------------------------------------
// Escalation driver

enum class Termination { max_rate_reached, high_risk, rapid_escalation, safety_rollback };

constexpr std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::max_rate_reached: return "max_rate_reached";
    case Termination::high_risk: return "high_risk";
    case Termination::rapid_escalation: return "rapid_escalation";
    case Termination::safety_rollback: return "safety_rollback";
  }
  return "unknown";
}

struct EscalationStep {
  /// Schedule value: bypass rate, injected ms, capacity reduction, ...
  double magnitude = 0.0;
  double amplification = 1.0;
  double lri = 0.0;
  /// Component whose LRI was the step maximum.
  std::string observed;
  std::int64_t first_tick = 0;
  std::int64_t last_tick = 0;

  bool operator==(const EscalationStep&) const = default;
};

struct StepOutcome {
  EscalationStep step;
  bool rolled_back = false;
};

/// The loop of Alg. 3 without the simulator: `run_step(value)` performs one
/// step. Gradient is the last first-difference of the LRI history.
template <class StepFn>
Termination run_escalation(std::span<const double> schedule, double max_risk, StepFn&& run_step,
                           std::vector<EscalationStep>& history) {
  for (double value : schedule) {
    StepOutcome out = run_step(value);
    history.push_back(out.step);
    if (out.rolled_back) return Termination::safety_rollback;
    const double lri = out.step.lri;
    if (lri > kHighRiskThreshold || lri >= max_risk) return Termination::high_risk;
    if (history.size() >= 2 && lri - history[history.size() - 2].lri > kRapidEscalationGradient) {
      return Termination::rapid_escalation;
    }
  }
  return Termination::max_rate_reached;
}

struct ExecutionOptions {
  std::int64_t baseline_ticks = kStepTicks;
  std::int64_t step_ticks = kStepTicks;
  SafetyThresholds safety;

  bool operator==(const ExecutionOptions&) const = default;
};

struct EdgeEstimate {
  std::string to;
  double alpha = 1.0;

  bool operator==(const EdgeEstimate&) const = default;
};

struct RiskTrace {
  /// The perturbation as last applied.
  PerturbationAction action;
  std::vector<EscalationStep> steps;
  Termination termination = Termination::max_rate_reached;
  std::optional<std::int64_t> rollback_tick;
  SafetyVerdict verdict;
  /// Full-bypass alpha per outgoing edge of the target, for bypassable targets.
  std::vector<EdgeEstimate> edge_alpha;
  /// Baseline ticks followed by perturbed ticks.
  TelemetryTrace telemetry;
  /// Perturbations still active at the end of each recorded tick.
  std::vector<int> active_after_tick;

  bool operator==(const RiskTrace&) const = default;
};

namespace detail {

inline double entry_load(const ValidatedTopology& topo, const TickSnapshot& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < topo.size(); ++i) {
    if (topo.is_entry(i)) sum += s.components[i].offered_rps;
  }
  return sum;
}

}  // namespace detail

/// Alg. 3 generalized to every strategy. Runs a baseline window on `sim`,
/// then one window per schedule value. Amplification at a component is its
/// offered load per unit of entry load, relative to the baseline, so slow
/// traffic patterns do not read as amplification. Normal operation is
/// always restored before returning.
inline RiskTrace execute_strategy(Simulator& sim, const AmplificationMap& amap, const PerturbationAction& action,
                                  const EscalationParams& escalation, double max_risk,
                                  const ExecutionOptions& opts = {}) {
  const ValidatedTopology& topo = sim.topology();
  if (!(max_risk > 0.0)) throw Error(Errc::InvalidField, "max_risk_threshold", "must be > 0");
  if (opts.baseline_ticks < 1 || opts.step_ticks < 1) throw Error(Errc::InvalidField, "step_ticks");
  const auto schedule = is_single_step(action.strategy) ? std::vector<double>{action.magnitude}
                                                        : escalation_schedule(action.strategy, escalation);
  for (double v : schedule) {
    PerturbationAction probe = action;
    probe.magnitude = action_magnitude(action.strategy, v);
    check_action(topo, probe);
  }

  const std::size_t target = topo.index_of(action.target);
  std::vector<std::size_t> observed;
  for (std::size_t e : topo.outgoing(target)) observed.push_back(topo.index_of(topo.edge(e).to));
  if (observed.empty()) observed.push_back(target);

  RiskTrace trace;
  trace.action = action;
  trace.telemetry.metadata.seed = sim.seed();
  for (const auto& c : topo.components()) trace.telemetry.component_ids.push_back(c.id);
  auto record = [&](const TickSnapshot& s) {
    trace.telemetry.ticks.push_back(s);
    trace.active_after_tick.push_back(static_cast<int>(sim.active_perturbations().size()));
  };

  std::vector<TickSnapshot> baseline;
  std::vector<double> base_load(observed.size(), 0.0);
  double base_entry = 0.0;
  for (std::int64_t t = 0; t < opts.baseline_ticks; ++t) {
    baseline.push_back(sim.step());
    record(baseline.back());
    for (std::size_t k = 0; k < observed.size(); ++k) base_load[k] += baseline.back().components[observed[k]].offered_rps;
    base_entry += detail::entry_load(topo, baseline.back());
  }
  if (!(base_entry > 0.0)) throw Error(Errc::ZeroBaseline, action.target, "no entry traffic during baseline");

  std::vector<double> last_alpha(observed.size(), 1.0);
  auto run_step = [&](double value) {
    PerturbationAction a = action;
    a.magnitude = action_magnitude(action.strategy, value);
    a.started_tick = sim.tick();
    sim.apply(a);
    trace.action = a;

    StepOutcome out;
    out.step.magnitude = value;
    out.step.first_tick = sim.tick();
    std::vector<double> load(observed.size(), 0.0);
    double entry = 0.0;
    for (std::int64_t t = 0; t < opts.step_ticks; ++t) {
      const TickSnapshot snap = sim.step();
      const SafetyVerdict verdict =
          safety_check(trace.telemetry.component_ids, std::span(&snap, 1), baseline, opts.safety);
      if (!verdict.passed) {
        sim.clear();  // same-tick rollback
        trace.rollback_tick = snap.tick_s;
        trace.verdict = verdict;
        out.rolled_back = true;
      }
      record(snap);
      for (std::size_t k = 0; k < observed.size(); ++k) load[k] += snap.components[observed[k]].offered_rps;
      entry += detail::entry_load(topo, snap);
      out.step.last_tick = snap.tick_s;
      if (out.rolled_back) break;
    }

    AmplificationMap step_map = amap;
    out.step.lri = -1.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
      const std::size_t j = observed[k];
      double alpha = 1.0;
      if (base_load[k] > kZeroBaselineRps && entry > 0.0) alpha = (load[k] / entry) / (base_load[k] / base_entry);
      last_alpha[k] = alpha;
      if (j != target) {
        step_map.set_measured(action.target, topo.component(j).id, alpha,
                              static_cast<double>(out.step.last_tick - out.step.first_tick + 1));
      }
      const double lri = compute_lri(topo, step_map, topo.component(j).id);
      if (lri > out.step.lri) {
        out.step.lri = lri;
        out.step.amplification = alpha;
        out.step.observed = topo.component(j).id;
      }
    }
    return out;
  };

  trace.termination = run_escalation(schedule, max_risk, run_step, trace.steps);
  sim.clear();

  // Full-strength alpha per outgoing edge. A cache at bypass rate b passes
  // (1-h) + b*h of its traffic, so alpha_b = 1 + b*(alpha - 1).
  const ComponentSpec& tc = topo.component(target);
  const bool bypass_strategy = (action.strategy == Strategy::cache_bypass && tc.kind == ComponentKind::cache) ||
                               action.strategy == Strategy::breaker_bypass ||
                               action.strategy == Strategy::lb_manipulation;
  if (bypass_strategy && !trace.steps.empty() && observed.front() != target) {
    const double b = trace.steps.back().magnitude;
    for (std::size_t k = 0; k < observed.size(); ++k) {
      double alpha = last_alpha[k];
      if (action.strategy == Strategy::cache_bypass) alpha = 1.0 + (alpha - 1.0) / b;
      trace.edge_alpha.push_back({topo.component(observed[k]).id, std::max(alpha, 0.0)});
    }
  }
  return trace;
}

/// Alg. 3 on a cache with the 0.5% x1.4 -> 20% schedule.
inline RiskTrace execute_cache_bypass(Simulator& sim, const AmplificationMap& amap, std::string_view cache_id,
                                      double max_risk, const ExecutionOptions& opts = {}) {
  const ComponentSpec& c = sim.topology().component(cache_id);
  if (c.kind != ComponentKind::cache) {
    throw Error(Errc::IncompatibleTarget, c.id, "cache_bypass needs a cache, got " + std::string(to_string(c.kind)));
  }
  const EscalationParams esc = default_escalation(Strategy::cache_bypass);
  return execute_strategy(sim, amap, {Strategy::cache_bypass, c.id, esc.start, 0, ""}, esc, max_risk, opts);
}

// ---------------------------------------------------------------------------
// Bandit planner

struct ArmStats {
  int successes = 0;
  int failures = 0;

  [[nodiscard]] double a() const noexcept { return 1.0 + successes; }
  [[nodiscard]] double b() const noexcept { return 1.0 + failures; }
  bool operator==(const ArmStats&) const = default;
};

/// Beta posteriors keyed by (strategy, target kind).
class StrategyStats {
 public:
  using Key = std::pair<Strategy, ComponentKind>;

  [[nodiscard]] ArmStats get(Strategy s, ComponentKind k) const {
    auto it = arms_.find({s, k});
    return it == arms_.end() ? ArmStats{} : it->second;
  }
  void set(Strategy s, ComponentKind k, ArmStats stats) { arms_[{s, k}] = stats; }
  void record(Strategy s, ComponentKind k, bool success) {
    auto& arm = arms_[{s, k}];
    (success ? arm.successes : arm.failures) += 1;
  }
  StrategyStats& merge(const StrategyStats& other) {
    for (const auto& [key, stats] : other.arms_) {
      arms_[key].successes += stats.successes;
      arms_[key].failures += stats.failures;
    }
    return *this;
  }
  [[nodiscard]] const std::map<Key, ArmStats>& entries() const noexcept { return arms_; }

  bool operator==(const StrategyStats&) const = default;

 private:
  std::map<Key, ArmStats> arms_;
};

struct PlannedStep {
  Strategy strategy = Strategy::cache_bypass;
  std::string target;
  /// Upstream end of the edge for dependency_isolation.
  std::string peer;
  EscalationParams escalation;
  std::int64_t cost_ticks = 0;

  bool operator==(const PlannedStep&) const = default;
};

struct CampaignPlan {
  std::vector<PlannedStep> steps;
  /// Perturbed ticks available; each step costs schedule length * step ticks.
  std::int64_t budget = 0;
  std::uint64_t seed = 0;

  bool operator==(const CampaignPlan&) const = default;
};

struct PlanOptions {
  /// Empty means every strategy.
  std::vector<Strategy> whitelist;
  std::map<Strategy, EscalationParams> escalation;
  std::int64_t step_ticks = kStepTicks;
};

inline EscalationParams escalation_for(Strategy s, const PlanOptions& opts) {
  auto it = opts.escalation.find(s);
  return it == opts.escalation.end() ? default_escalation(s) : it->second;
}

/// Eligible (strategy, target[, peer]) arms in strategy-then-declaration order.
inline std::vector<PlannedStep> eligible_arms(const ValidatedTopology& topo, const PlanOptions& opts = {}) {
  std::vector<Strategy> strategies = opts.whitelist;
  if (strategies.empty()) strategies.assign(std::begin(kAllStrategies), std::end(kAllStrategies));
  std::vector<PlannedStep> arms;
  for (Strategy s : strategies) {
    const EscalationParams esc = escalation_for(s, opts);
    const auto cost = static_cast<std::int64_t>(escalation_schedule(s, esc).size()) * opts.step_ticks;
    for (std::size_t i = 0; i < topo.size(); ++i) {
      if (!strategy_applies(topo, s, i)) continue;
      const std::string& id = topo.component(i).id;
      if (s == Strategy::dependency_isolation) {
        for (std::size_t e : topo.incoming(i)) arms.push_back({s, id, topo.edge(e).from, esc, cost});
      } else {
        arms.push_back({s, id, "", esc, cost});
      }
    }
  }
  return arms;
}

/// Thompson sampling: each draw samples Beta(a, b) for every affordable arm
/// (in eligible_arms order, stream "hydra.plan") and takes the argmax.
inline CampaignPlan plan_campaign(const ValidatedTopology& topo, const StrategyStats& stats, std::int64_t budget,
                                  std::uint64_t seed, const PlanOptions& opts = {}) {
  if (budget < 0) throw Error(Errc::InvalidField, "budget", "must be >= 0");
  CampaignPlan plan;
  plan.budget = budget;
  plan.seed = seed;
  if (budget == 0) return plan;
  const auto arms = eligible_arms(topo, opts);
  if (arms.empty()) throw Error(Errc::NoEligibleTargets, "campaign");

  Rng gen = make_stream(seed, "hydra.plan");
  std::int64_t remaining = budget;
  for (;;) {
    std::optional<std::size_t> best;
    double best_theta = -1.0;
    for (std::size_t k = 0; k < arms.size(); ++k) {
      if (arms[k].cost_ticks > remaining) continue;
      const ArmStats s = stats.get(arms[k].strategy, topo.component(arms[k].target).kind);
      const double theta = sample_beta(s.a(), s.b(), gen);
      if (theta > best_theta) {
        best_theta = theta;
        best = k;
      }
    }
    if (!best) break;
    plan.steps.push_back(arms[*best]);
    remaining -= arms[*best].cost_ticks;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Campaign

struct CampaignOptions {
  double max_risk_threshold = 100.0;
  ExecutionOptions execution;
};

struct DiscoveredRisk {
  std::string id;
  double lri = 0.0;
  RiskLevel level = RiskLevel::Low;
  double prior_lri = 0.0;
  RiskLevel prior_level = RiskLevel::Low;
  /// Index of the plan step that first revealed it.
  std::size_t step = 0;

  bool operator==(const DiscoveredRisk&) const = default;
};

struct CampaignReport {
  std::vector<RiskTrace> traces;
  /// Components whose classification got strictly worse, by LRI descending.
  std::vector<DiscoveredRisk> discovered;
  /// Prior map with campaign measurements folded in.
  AmplificationMap amplification;
  StrategyStats stats;

  bool operator==(const CampaignReport&) const = default;
};

inline CampaignReport run_campaign(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                   const CampaignPlan& plan, StrategyStats stats = {},
                                   const CampaignOptions& opts = {}) {
  validate_traffic(traffic);
  std::int64_t spent = 0;
  for (const auto& step : plan.steps) {
    const auto i = topo.index_of(step.target);
    if (!strategy_applies(topo, step.strategy, i)) {
      throw Error(Errc::IncompatibleTarget, step.target, std::string(to_string(step.strategy)));
    }
    spent += step.cost_ticks;
  }
  if (spent > plan.budget) throw Error(Errc::InvalidField, "budget", "plan exceeds its budget");

  CampaignReport report;
  report.amplification = prior_amplification_map(topo);
  std::vector<RiskLevel> prior_level(topo.size());
  std::vector<double> prior_lri(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i) {
    prior_lri[i] = compute_lri(topo, report.amplification, topo.component(i).id);
    prior_level[i] = classify_risk(prior_lri[i]);
  }

  std::map<std::string, DiscoveredRisk> found;
  for (std::size_t k = 0; k < plan.steps.size(); ++k) {
    const PlannedStep& step = plan.steps[k];
    Simulator sim(topo, traffic, derive_seed(plan.seed, "hydra.step", k));
    const PerturbationAction action{step.strategy, step.target, step.escalation.start, 0, step.peer};
    RiskTrace trace = execute_strategy(sim, report.amplification, action, step.escalation, opts.max_risk_threshold,
                                       opts.execution);
    for (const auto& est : trace.edge_alpha) {
      report.amplification.set_measured(step.target, est.to, est.alpha,
                                        static_cast<double>(opts.execution.step_ticks));
    }
    bool success = false;
    for (std::size_t i = 0; i < topo.size(); ++i) {
      const std::string& id = topo.component(i).id;
      const double lri = compute_lri(topo, report.amplification, id);
      const RiskLevel level = classify_risk(lri);
      if (level > prior_level[i] && !found.count(id)) {
        found[id] = {id, lri, level, prior_lri[i], prior_level[i], k};
        success = true;
      }
    }
    stats.record(step.strategy, topo.component(step.target).kind, success);
    report.traces.push_back(std::move(trace));
  }

  for (auto& [id, risk] : found) {
    risk.lri = compute_lri(topo, report.amplification, id);
    risk.level = classify_risk(risk.lri);
    report.discovered.push_back(risk);
  }
  std::sort(report.discovered.begin(), report.discovered.end(), [](const DiscoveredRisk& a, const DiscoveredRisk& b) {
    if (a.lri != b.lri) return a.lri > b.lri;
    return a.id < b.id;
  });
  report.stats = std::move(stats);
  return report;
}

}  // namespace lri
