#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lri/apex.hpp"
#include "lri/error.hpp"
#include "lri/hydra.hpp"
#include "lri/riskcore.hpp"
#include "lri/rng.hpp"
#include "lri/simengine.hpp"
#include "lri/topology.hpp"

namespace lri {

// ---------------------------------------------------------------------------
// Sliding window

struct WindowConfig {
  std::int64_t duration_ticks = 900;
  double overlap_fraction = 0.5;

  [[nodiscard]] std::int64_t stride() const {
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(duration_ticks) * (1.0 - overlap_fraction)));
  }
  bool operator==(const WindowConfig&) const = default;
};

inline void validate_window(const WindowConfig& c) {
  if (c.duration_ticks < 1) throw Error(Errc::InvalidField, "duration_ticks", "must be >= 1");
  if (!(c.overlap_fraction >= 0.0 && c.overlap_fraction < 1.0)) {
    throw Error(Errc::InvalidField, "overlap_fraction", "must be in [0, 1)");
  }
}

struct ComponentSummary {
  double mean_offered_rps = 0.0;
  double mean_served_rps = 0.0;
  double mean_error_rps = 0.0;
  double mean_forwarded_rps = 0.0;
  double mean_utilization = 0.0;
  double max_utilization = 0.0;
  double mean_latency_ms = 0.0;
  std::optional<double> mean_hit_rate;
  /// Served over forwarded load for caches: the downstream multiplier if the
  /// cache stopped absorbing. Empty when nothing was forwarded.
  std::optional<double> alpha_estimate;

  bool operator==(const ComponentSummary&) const = default;
};

struct WindowSummary {
  std::int64_t first_tick = 0;
  std::int64_t last_tick = 0;  // inclusive
  std::vector<ComponentSummary> components;

  bool operator==(const WindowSummary&) const = default;
};

struct SlidingWindow {
  WindowConfig config;
  std::deque<TickSnapshot> buffer;
  /// Ticks accepted since the last summary (or since the start).
  std::int64_t since_emit = 0;
  bool emitted = false;

  bool operator==(const SlidingWindow&) const = default;
};

inline WindowSummary summarize(std::span<const TickSnapshot> ticks) {
  WindowSummary s;
  if (ticks.empty()) return s;
  s.first_tick = ticks.front().tick_s;
  s.last_tick = ticks.back().tick_s;
  const std::size_t n = ticks.front().components.size();
  s.components.resize(n);
  std::vector<double> hit(n, 0.0);
  std::vector<bool> has_hit(n, false);
  for (const auto& snap : ticks) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto& m = snap.components[c];
      auto& o = s.components[c];
      o.mean_offered_rps += m.offered_rps;
      o.mean_served_rps += m.served_rps;
      o.mean_error_rps += m.error_rps;
      o.mean_forwarded_rps += m.forwarded_rps;
      o.mean_utilization += m.utilization;
      o.max_utilization = std::max(o.max_utilization, m.utilization);
      o.mean_latency_ms += m.latency_ms;
      if (m.hit_rate) {
        hit[c] += *m.hit_rate;
        has_hit[c] = true;
      }
    }
  }
  const double w = static_cast<double>(ticks.size());
  for (std::size_t c = 0; c < n; ++c) {
    auto& o = s.components[c];
    o.mean_offered_rps /= w;
    o.mean_served_rps /= w;
    o.mean_error_rps /= w;
    o.mean_forwarded_rps /= w;
    o.mean_utilization /= w;
    o.mean_latency_ms /= w;
    if (has_hit[c]) {
      o.mean_hit_rate = hit[c] / w;
      if (o.mean_forwarded_rps > 0.0) o.alpha_estimate = o.mean_served_rps / o.mean_forwarded_rps;
    }
  }
  return s;
}

/// A batch may cross several stride boundaries, so every summary it
/// completes is returned in order.
inline std::pair<SlidingWindow, std::vector<WindowSummary>> update_window(SlidingWindow w,
                                                                          std::span<const TickSnapshot> batch) {
  validate_window(w.config);
  std::vector<WindowSummary> out;
  const auto duration = static_cast<std::size_t>(w.config.duration_ticks);
  const std::int64_t stride = w.config.stride();
  for (const auto& snap : batch) {
    if (!w.buffer.empty() && snap.tick_s != w.buffer.back().tick_s + 1) {
      throw Error(Errc::NonContiguousBatch, std::to_string(snap.tick_s),
                  "expected tick " + std::to_string(w.buffer.back().tick_s + 1));
    }
    w.buffer.push_back(snap);
    if (w.buffer.size() > duration) w.buffer.pop_front();
    ++w.since_emit;
    const bool full = w.buffer.size() == duration;
    if (full && (!w.emitted || w.since_emit >= stride)) {
      const std::vector<TickSnapshot> ticks(w.buffer.begin(), w.buffer.end());
      out.push_back(summarize(ticks));
      w.emitted = true;
      w.since_emit = 0;
    }
  }
  return {std::move(w), std::move(out)};
}

/// Declared alphas, with cache edges replaced by the window's hit-derived
/// estimate.
inline AmplificationMap online_amplification(const ValidatedTopology& topo, const WindowSummary& s) {
  AmplificationMap map = prior_amplification_map(topo);
  const double window = static_cast<double>(s.last_tick - s.first_tick + 1);
  for (const auto& edge : topo.edges()) {
    const std::size_t i = topo.index_of(edge.from);
    if (i >= s.components.size()) continue;
    if (const auto& a = s.components[i].alpha_estimate; a && std::isfinite(*a)) {
      map.set(edge.from, edge.to, {*a, AmplificationSource::measured, window});
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Change detection

enum class ChangeAlgorithm { cusum, page_hinkley };

constexpr std::string_view to_string(ChangeAlgorithm a) noexcept {
  return a == ChangeAlgorithm::cusum ? "cusum" : "page_hinkley";
}

struct ChangeDetectorState {
  ChangeAlgorithm algorithm = ChangeAlgorithm::cusum;
  double delta = 0.0;
  double lambda = 1.0;
  /// CUSUM reference level; taken from the first sample when unset.
  std::optional<double> mu0;
  double statistic = 0.0;
  std::int64_t samples = 0;
  // Page-Hinkley running terms.
  double running_mean = 0.0;
  double cumulative = 0.0;
  double min_cumulative = 0.0;

  bool operator==(const ChangeDetectorState&) const = default;
};

inline ChangeDetectorState make_detector(ChangeAlgorithm algorithm, double delta, double lambda,
                                         std::optional<double> mu0 = std::nullopt) {
  if (!(lambda > 0.0)) throw Error(Errc::InvalidField, "lambda", "must be > 0");
  if (!(delta >= 0.0)) throw Error(Errc::InvalidField, "delta", "must be >= 0");
  ChangeDetectorState s;
  s.algorithm = algorithm;
  s.delta = delta;
  s.lambda = lambda;
  s.mu0 = mu0;
  return s;
}

/// One-sided (upward) CUSUM or Page-Hinkley. State resets after a firing.
inline std::pair<ChangeDetectorState, bool> detect_change(ChangeDetectorState s, double x) {
  if (!std::isfinite(x)) throw Error(Errc::InvalidField, "value", "must be finite");
  ++s.samples;
  bool fired = false;
  if (s.algorithm == ChangeAlgorithm::cusum) {
    if (!s.mu0) s.mu0 = x;
    s.statistic = std::max(0.0, s.statistic + x - *s.mu0 - s.delta);
    fired = s.statistic > s.lambda;
  } else {
    s.running_mean += (x - s.running_mean) / static_cast<double>(s.samples);
    s.cumulative += x - s.running_mean - s.delta;
    s.min_cumulative = std::min(s.min_cumulative, s.cumulative);
    s.statistic = s.cumulative - s.min_cumulative;
    fired = s.statistic > s.lambda;
  }
  if (fired) {
    s.statistic = 0.0;
    s.samples = 0;
    s.running_mean = s.cumulative = s.min_cumulative = 0.0;
  }
  return {s, fired};
}

// ---------------------------------------------------------------------------
// Forecast

struct LriPoint {
  std::int64_t tick = 0;
  double lri = 0.0;

  bool operator==(const LriPoint&) const = default;
};

struct ForecastOptions {
  double smoothing = 0.3;
};

/// Least-squares line over the EWMA-smoothed history, shifted forward by the
/// smoother's steady-state lag so an exact line forecasts itself.
inline std::vector<LriPoint> forecast_lri(std::span<const LriPoint> history, std::int64_t horizon_ticks,
                                          const ForecastOptions& opts = {}) {
  if (history.size() < 2) throw Error(Errc::InsufficientHistory, "history", "need at least 2 points");
  if (horizon_ticks < 0) throw Error(Errc::InvalidField, "horizon_ticks", "must be >= 0");
  const double a = opts.smoothing;
  if (!(a > 0.0 && a <= 1.0)) throw Error(Errc::InvalidField, "smoothing", "must be in (0, 1]");
  for (std::size_t k = 1; k < history.size(); ++k) {
    if (history[k].tick <= history[k - 1].tick) throw Error(Errc::InvalidField, "history", "ticks must increase");
  }

  std::vector<double> smooth(history.size());
  smooth[0] = history[0].lri;
  for (std::size_t k = 1; k < history.size(); ++k) smooth[k] = a * history[k].lri + (1.0 - a) * smooth[k - 1];

  // Skip the initialization transient once it has decayed below 1e-9.
  const auto burn = a < 1.0 ? static_cast<std::size_t>(std::ceil(std::log(1e-9) / std::log(1.0 - a))) : 0;
  const std::size_t from = std::min(burn, history.size() - 2);

  const double n = static_cast<double>(history.size() - from);
  double mt = 0.0, my = 0.0;
  for (std::size_t k = from; k < history.size(); ++k) {
    mt += static_cast<double>(history[k].tick);
    my += smooth[k];
  }
  mt /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = from; k < history.size(); ++k) {
    const double dt = static_cast<double>(history[k].tick) - mt;
    sxy += dt * (smooth[k] - my);
    sxx += dt * dt;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double spacing = static_cast<double>(history.back().tick - history.front().tick) /
                         static_cast<double>(history.size() - 1);
  const double lag = (1.0 - a) / a * spacing;

  std::vector<LriPoint> out;
  const std::int64_t last = history.back().tick;
  for (std::int64_t h = 1; h <= horizon_ticks; ++h) {
    const double t = static_cast<double>(last + h) + lag;
    out.push_back({last + h, std::max(0.0, my + slope * (t - mt))});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mitigation

enum class MitigationKind { none, increase_shadow_traffic, degrade_performance, rollback_configuration };

constexpr std::string_view to_string(MitigationKind k) noexcept {
  switch (k) {
    case MitigationKind::none: return "none";
    case MitigationKind::increase_shadow_traffic: return "increase_shadow_traffic";
    case MitigationKind::degrade_performance: return "degrade_performance";
    case MitigationKind::rollback_configuration: return "rollback_configuration";
  }
  return "?";
}

inline constexpr double kMaxShadowFraction = 0.5;

struct MitigationPolicy {
  double shadow_step = 0.05;
  double shed_fraction = 0.1;

  bool operator==(const MitigationPolicy&) const = default;
};

struct ConfigSnapshot {
  int id = 0;
  std::int64_t tick = 0;
  ConfigurationVector config;
  RiskLevel level = RiskLevel::Low;
  double lri = 0.0;

  bool operator==(const ConfigSnapshot&) const = default;
};

struct MitigationState {
  double shadow_fraction = 0.0;
  double shed_fraction = 0.0;
  std::vector<ConfigSnapshot> snapshots;

  bool operator==(const MitigationState&) const = default;
};

struct MitigationAction {
  MitigationKind kind = MitigationKind::none;
  double shadow_fraction_delta = 0.0;
  double shed_fraction = 0.0;
  std::optional<int> snapshot_id;

  bool operator==(const MitigationAction&) const = default;
};

inline const ConfigSnapshot* last_low_snapshot(const MitigationState& s) {
  for (auto it = s.snapshots.rbegin(); it != s.snapshots.rend(); ++it) {
    if (it->level == RiskLevel::Low) return &*it;
  }
  return nullptr;
}

inline MitigationAction mitigate(RiskLevel level, const MitigationState& current, const MitigationPolicy& policy) {
  MitigationAction a;
  switch (level) {
    case RiskLevel::Low: break;
    case RiskLevel::Medium:
      a.kind = MitigationKind::increase_shadow_traffic;
      a.shadow_fraction_delta =
          std::clamp(policy.shadow_step, 0.0, std::max(0.0, kMaxShadowFraction - current.shadow_fraction));
      break;
    case RiskLevel::High:
      if (const ConfigSnapshot* snap = last_low_snapshot(current)) {
        a.kind = MitigationKind::rollback_configuration;
        a.snapshot_id = snap->id;
      } else {
        a.kind = MitigationKind::degrade_performance;
        a.shed_fraction = std::clamp(policy.shed_fraction, 0.0, std::nextafter(1.0, 0.0));
      }
      break;
  }
  return a;
}

/// Explicit operator rollback.
inline MitigationAction request_rollback(const MitigationState& current) {
  const ConfigSnapshot* snap = last_low_snapshot(current);
  if (!snap) throw Error(Errc::NoSnapshotAvailable, "rollback", "no Low-classified snapshot recorded");
  return {MitigationKind::rollback_configuration, 0.0, 0.0, snap->id};
}

inline const ConfigSnapshot& find_snapshot(const MitigationState& s, int id) {
  for (const auto& snap : s.snapshots) {
    if (snap.id == id) return snap;
  }
  throw Error(Errc::NoSnapshotAvailable, std::to_string(id));
}

inline MitigationState apply_mitigation(MitigationState s, const MitigationAction& a) {
  switch (a.kind) {
    case MitigationKind::none:
    case MitigationKind::rollback_configuration: break;
    case MitigationKind::increase_shadow_traffic:
      s.shadow_fraction = std::clamp(s.shadow_fraction + a.shadow_fraction_delta, 0.0, kMaxShadowFraction);
      break;
    case MitigationKind::degrade_performance:
      s.shed_fraction = std::clamp(a.shed_fraction, 0.0, std::nextafter(1.0, 0.0));
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Continuous loop

enum class Trigger { none, lri_threshold, change_detected };

constexpr std::string_view to_string(Trigger t) noexcept {
  switch (t) {
    case Trigger::none: return "none";
    case Trigger::lri_threshold: return "lri_threshold";
    case Trigger::change_detected: return "change_detected";
  }
  return "?";
}

enum class Outcome { no_action, disabled, cooldown, no_feasible_solution, rejected_unsafe, reconfigured };

constexpr std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::no_action: return "no_action";
    case Outcome::disabled: return "disabled";
    case Outcome::cooldown: return "cooldown";
    case Outcome::no_feasible_solution: return "no_feasible_solution";
    case Outcome::rejected_unsafe: return "rejected_unsafe";
    case Outcome::reconfigured: return "reconfigured";
  }
  return "?";
}

struct DetectorConfig {
  ChangeAlgorithm algorithm = ChangeAlgorithm::cusum;
  double delta = 0.0;
  double lambda = 1.0;
  std::optional<double> mu0;

  bool operator==(const DetectorConfig&) const = default;
};

struct LoopPolicy {
  double lri_trigger = 10.0;
  std::int64_t cooldown_ticks = 1800;
  int gradual_steps = 4;
  /// Live ticks between consecutive gradual steps.
  std::int64_t step_interval_ticks = 30;
  std::int64_t trial_ticks = 60;
  WindowConfig window;
  std::optional<DetectorConfig> detector;
  SafetyThresholds safety;
  MitigationPolicy mitigation;
  /// Mitigations are logged as advice unless this is set.
  bool apply_mitigations = false;
  /// false = monitor only.
  bool optimize = true;

  bool operator==(const LoopPolicy&) const = default;
};

struct StepRecord {
  ConfigurationVector config;
  SafetyVerdict verdict;
  bool applied = false;

  bool operator==(const StepRecord&) const = default;
};

struct LoopRecord {
  std::int64_t tick = 0;
  double lri = 0.0;
  RiskLevel level = RiskLevel::Low;
  Trigger trigger = Trigger::none;
  bool detector_fired = false;
  Outcome outcome = Outcome::no_action;
  ConfigurationVector current_config;
  std::optional<ConfigurationVector> chosen_config;
  std::optional<double> fitness;
  int applied_steps = 0;
  std::vector<StepRecord> steps;
  MitigationAction mitigation;

  bool operator==(const LoopRecord&) const = default;
};

struct OptimizationLog {
  std::vector<ConfigVariable> variables;
  std::vector<LoopRecord> records;
  std::uint64_t seed = 0;

  [[nodiscard]] int reconfigurations() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(),
                                          [](const LoopRecord& r) { return r.applied_steps > 0; }));
  }
  [[nodiscard]] std::optional<double> final_lri() const {
    if (records.empty()) return std::nullopt;
    return records.back().lri;
  }
  bool operator==(const OptimizationLog&) const = default;
};

/// `steps` equal linear steps from `from` to `to`, the last one exactly `to`.
/// Integer variables are rounded.
inline std::vector<ConfigurationVector> interpolation_steps(std::span<const ConfigVariable> vars,
                                                            const ConfigurationVector& from,
                                                            const ConfigurationVector& to, int steps) {
  if (steps < 1) throw Error(Errc::InvalidField, "gradual_steps", "must be >= 1");
  if (from.values.size() != vars.size() || to.values.size() != vars.size()) {
    throw Error(Errc::ArityMismatch, "configuration");
  }
  std::vector<ConfigurationVector> out;
  for (int s = 1; s <= steps; ++s) {
    ConfigurationVector x;
    const double f = static_cast<double>(s) / steps;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      double v = s == steps ? to.values[k] : from.values[k] + (to.values[k] - from.values[k]) * f;
      if (vars[k].is_integer) v = std::round(v);
      x.values.push_back(std::clamp(v, vars[k].lo, vars[k].hi));
    }
    out.push_back(std::move(x));
  }
  return out;
}

/// The topology as it behaves at `tick`: hit-rate degradation so far is folded
/// into the cache parameters and stops there.
inline ValidatedTopology freeze_drift(const ValidatedTopology& topo, std::int64_t tick) {
  TopologyGraph g = topo.graph();
  bool changed = false;
  for (auto& c : g.components) {
    auto* p = std::get_if<CacheParams>(&c.optimization_params);
    if (!p || p->hit_degradation_per_tick <= 0.0) continue;
    const double m = std::max(0.0, 1.0 - p->hit_degradation_per_tick * static_cast<double>(tick));
    if (p->hit_rate) *p->hit_rate *= m;
    p->hit_max *= m;
    p->hit_degradation_per_tick = 0.0;
    changed = true;
  }
  return changed ? validate_topology(g) : topo;
}

namespace detail {

inline const FrontMember& best_fitness(const ParetoFront& front) {
  const FrontMember* best = &front.members.front();
  for (const auto& m : front.members) {
    if (m.fitness > best->fitness) best = &m;
  }
  return *best;
}

class Loop {
 public:
  Loop(const ValidatedTopology& topo, const TrafficProfile& traffic, std::span<const ConfigVariable> vars,
       const LoopPolicy& policy, const ApexConfig& apex, std::int64_t duration, std::uint64_t seed)
      : sim_(topo, traffic, seed), vars_(vars), policy_(policy), apex_(apex), duration_(duration), seed_(seed) {
    window_.config = policy.window;
    if (policy.detector) {
      detector_ = make_detector(policy.detector->algorithm, policy.detector->delta, policy.detector->lambda,
                                policy.detector->mu0);
    }
    for (const auto& c : topo.components()) ids_.push_back(c.id);
    log_.variables.assign(vars.begin(), vars.end());
    log_.seed = seed;
  }

  OptimizationLog run() {
    while (sim_.tick() < duration_ || !pending_.empty()) {
      if (pending_.empty()) advance(1);
      while (!pending_.empty()) {
        WindowSummary s = std::move(pending_.front());
        pending_.pop_front();
        decide(s);
      }
    }
    return std::move(log_);
  }

 private:
  void advance(std::int64_t ticks) {
    for (std::int64_t k = 0; k < ticks && sim_.tick() < duration_; ++k) {
      const TickSnapshot snap = sim_.step();
      auto [w, out] = update_window(std::move(window_), std::span<const TickSnapshot>(&snap, 1));
      window_ = std::move(w);
      for (auto& s : out) pending_.push_back(std::move(s));
    }
  }

  SafetyVerdict trial(const ConfigurationVector& x) const {
    Simulator copy = sim_;
    copy.reconfigure(configure(sim_.topology(), vars_, x));
    std::vector<TickSnapshot> ticks;
    for (std::int64_t k = 0; k < policy_.trial_ticks; ++k) ticks.push_back(copy.step());
    const std::vector<TickSnapshot> baseline(window_.buffer.begin(), window_.buffer.end());
    return safety_check(ids_, ticks, baseline, policy_.safety);
  }

  void decide(const WindowSummary& s) {
    LoopRecord r;
    r.tick = s.last_tick;
    const ValidatedTopology& topo = sim_.topology();
    r.lri = system_lri(topo, online_amplification(topo, s));
    r.level = classify_risk(r.lri);
    r.current_config = current_configuration(topo, vars_);
    if (detector_) {
      auto [d, fired] = detect_change(*detector_, r.lri);
      detector_ = d;
      r.detector_fired = fired;
    }

    r.mitigation = mitigate(r.level, mitigation_, policy_.mitigation);
    if (r.level == RiskLevel::Low) {
      mitigation_.snapshots.push_back({next_snapshot_++, r.tick, r.current_config, r.level, r.lri});
    }

    if (r.lri > policy_.lri_trigger) {
      r.trigger = Trigger::lri_threshold;
    } else if (r.detector_fired) {
      r.trigger = Trigger::change_detected;
    }

    if (r.trigger != Trigger::none) {
      if (!policy_.optimize) {
        r.outcome = Outcome::disabled;
      } else if (last_start_ && r.tick - *last_start_ < policy_.cooldown_ticks) {
        r.outcome = Outcome::cooldown;
      } else {
        reconfigure(r);
      }
    }

    if (policy_.apply_mitigations && r.applied_steps == 0) apply(r.mitigation);
    log_.records.push_back(std::move(r));
  }

  void reconfigure(LoopRecord& r) {
    ApexConfig cfg = apex_;
    cfg.seed = derive_seed(seed_, "raven.apex", decisions_++);
    const ValidatedTopology frozen = freeze_drift(sim_.topology(), sim_.tick());
    ParetoFront front;
    try {
      front = optimize(frozen, sim_.traffic(), vars_, cfg);
    } catch (const Error& e) {
      if (e.code() != Errc::NoFeasibleSolution) throw;
      r.outcome = Outcome::no_feasible_solution;
      return;
    }
    const FrontMember& best = best_fitness(front);
    r.chosen_config = best.x;
    r.fitness = best.fitness;

    if (!trial(best.x).passed) {
      r.outcome = Outcome::rejected_unsafe;
      return;
    }
    last_start_ = r.tick;
    r.outcome = Outcome::reconfigured;
    const auto steps = interpolation_steps(vars_, r.current_config, best.x, policy_.gradual_steps);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      StepRecord step{steps[k], trial(steps[k]), false};
      if (!step.verdict.passed) {
        r.steps.push_back(std::move(step));
        break;
      }
      sim_.reconfigure(configure(sim_.topology(), vars_, steps[k]));
      step.applied = true;
      r.steps.push_back(std::move(step));
      ++r.applied_steps;
      if (k + 1 < steps.size()) advance(policy_.step_interval_ticks);
    }
  }

  void apply(const MitigationAction& a) {
    mitigation_ = apply_mitigation(std::move(mitigation_), a);
    sim_.set_shadow_fraction(mitigation_.shadow_fraction);
    sim_.set_shed_fraction(mitigation_.shed_fraction);
    if (a.kind == MitigationKind::rollback_configuration && a.snapshot_id) {
      sim_.reconfigure(configure(sim_.topology(), vars_, find_snapshot(mitigation_, *a.snapshot_id).config));
    }
  }

  Simulator sim_;
  std::span<const ConfigVariable> vars_;
  LoopPolicy policy_;
  ApexConfig apex_;
  std::int64_t duration_;
  std::uint64_t seed_;
  SlidingWindow window_;
  std::deque<WindowSummary> pending_;
  std::optional<ChangeDetectorState> detector_;
  MitigationState mitigation_;
  std::vector<std::string> ids_;
  std::optional<std::int64_t> last_start_;
  std::uint64_t decisions_ = 0;
  int next_snapshot_ = 0;
  OptimizationLog log_;
};

}  // namespace detail

inline OptimizationLog continuous_loop(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                       std::span<const ConfigVariable> vars, const LoopPolicy& policy,
                                       const ApexConfig& apex, std::int64_t duration, std::uint64_t seed) {
  validate_window(policy.window);
  if (duration < policy.window.duration_ticks) {
    throw Error(Errc::InvalidField, "duration", "shorter than the monitoring window");
  }
  if (policy.gradual_steps < 1) throw Error(Errc::InvalidField, "gradual_steps", "must be >= 1");
  if (policy.cooldown_ticks < 0 || policy.step_interval_ticks < 0) {
    throw Error(Errc::InvalidField, "cooldown_ticks", "must be >= 0");
  }
  if (policy.trial_ticks < 1) throw Error(Errc::InvalidField, "trial_ticks", "must be >= 1");
  if (policy.optimize) {
    validate_apex_config(apex);
    if (vars.empty()) throw Error(Errc::InvalidField, "bounds", "no decision variables");
    check_bounds(topo, vars);
  }
  validate_traffic(traffic);
  return detail::Loop(topo, traffic, vars, policy, apex, duration, seed).run();
}

}  // namespace lri
