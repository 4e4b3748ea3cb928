#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lri/error.hpp"
#include "lri/rng.hpp"
#include "lri/topology.hpp"

namespace lri {

// ---------------------------------------------------------------------------
// Traffic

enum class TrafficPattern { constant, diurnal, spike };

constexpr std::string_view to_string(TrafficPattern p) noexcept {
  switch (p) {
    case TrafficPattern::constant: return "constant";
    case TrafficPattern::diurnal: return "diurnal";
    case TrafficPattern::spike: return "spike";
  }
  return "unknown";
}

struct TrafficProfile {
  TrafficPattern pattern = TrafficPattern::constant;
  double base_rps = 100.0;
  double spike_multiplier = 1.0;
  std::int64_t spike_start_s = 0;
  std::int64_t spike_duration_s = 0;
  std::int64_t diurnal_period_s = 86400;
  double diurnal_amplitude = 0.5;
  /// Multiplicative jitter in [-noise, +noise], drawn from the seeded stream.
  double noise_fraction = 0.0;

  bool operator==(const TrafficProfile&) const = default;
};

inline void validate_traffic(const TrafficProfile& t) {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw Error(Errc::InvalidField, field, "traffic");
  };
  require(std::isfinite(t.base_rps) && t.base_rps > 0.0, "base_rps");
  require(std::isfinite(t.spike_multiplier) && t.spike_multiplier >= 1.0, "spike_multiplier");
  require(t.spike_start_s >= 0, "spike_start_s");
  require(t.spike_duration_s >= 0, "spike_duration_s");
  require(t.diurnal_period_s > 0, "diurnal_period_s");
  require(t.diurnal_amplitude >= 0.0 && t.diurnal_amplitude <= 1.0, "diurnal_amplitude");
  require(t.noise_fraction >= 0.0 && t.noise_fraction < 1.0, "noise_fraction");
}

/// Noise-free offered load at `tick`; never negative.
inline double offered_load(const TrafficProfile& t, std::int64_t tick) noexcept {
  double rps = t.base_rps;
  switch (t.pattern) {
    case TrafficPattern::constant: break;
    case TrafficPattern::diurnal: {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(tick) / static_cast<double>(t.diurnal_period_s);
      rps *= 1.0 + t.diurnal_amplitude * std::sin(phase);
      break;
    }
    case TrafficPattern::spike:
      if (tick >= t.spike_start_s && tick < t.spike_start_s + t.spike_duration_s) rps *= t.spike_multiplier;
      break;
  }
  return std::max(0.0, rps);
}

// ---------------------------------------------------------------------------
// Latency

inline double latency_at_utilization(const LatencyProfile& p, double utilization) noexcept {
  const double rho = std::clamp(utilization, 0.0, 1.0);
  double value = p.base_latency_ms;
  switch (p.model) {
    case LatencyModel::mm1:
      if (rho >= 1.0) return p.saturation_cap_ms;
      value = p.base_latency_ms / (1.0 - rho);
      break;
    case LatencyModel::linear:
      value = p.base_latency_ms + rho * (p.saturation_cap_ms - p.base_latency_ms);
      break;
    case LatencyModel::table: {
      const auto& pts = p.table_points;
      if (pts.empty()) break;
      if (rho >= pts.back().first) {
        value = pts.back().second;
        break;
      }
      auto hi = std::upper_bound(pts.begin(), pts.end(), rho,
                                 [](double r, const std::pair<double, double>& pt) { return r < pt.first; });
      auto lo = std::prev(hi);
      const double w = (rho - lo->first) / (hi->first - lo->first);
      value = lo->second + w * (hi->second - lo->second);
      break;
    }
  }
  return std::min(value, p.saturation_cap_ms);
}

// ---------------------------------------------------------------------------
// Circuit breaker

enum class BreakerState { closed, open, half_open };

constexpr std::string_view to_string(BreakerState s) noexcept {
  switch (s) {
    case BreakerState::closed: return "closed";
    case BreakerState::open: return "open";
    case BreakerState::half_open: return "half_open";
  }
  return "unknown";
}

struct BreakerStatus {
  BreakerState state = BreakerState::closed;
  /// Consecutive healthy ticks spent open.
  int open_ticks = 0;

  bool operator==(const BreakerStatus&) const = default;
};

/// One tick of the closed/open/half-open machine. `window_error_rate` is the
/// error fraction observed downstream of the breaker on the last tick.
inline BreakerStatus step_circuit_breaker(BreakerStatus s, double window_error_rate, const BreakerParams& params) {
  const bool unhealthy = window_error_rate > params.trip_threshold;
  switch (s.state) {
    case BreakerState::closed:
      if (unhealthy) return {BreakerState::open, 0};
      return s;
    case BreakerState::open:
      if (unhealthy) return {BreakerState::open, 0};
      if (s.open_ticks >= params.recovery_ticks) return {BreakerState::half_open, 0};
      return {BreakerState::open, s.open_ticks + 1};
    case BreakerState::half_open:
      if (unhealthy) return {BreakerState::open, 0};
      return {BreakerState::closed, 0};
  }
  return s;
}

// ---------------------------------------------------------------------------
// Perturbations

enum class Strategy {
  cache_bypass,
  latency_injection,
  resource_constraint,
  breaker_bypass,
  lb_manipulation,
  dependency_isolation,
};

inline constexpr Strategy kAllStrategies[] = {Strategy::cache_bypass,    Strategy::latency_injection,
                                              Strategy::resource_constraint, Strategy::breaker_bypass,
                                              Strategy::lb_manipulation, Strategy::dependency_isolation};

constexpr std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::cache_bypass: return "cache_bypass";
    case Strategy::latency_injection: return "latency_injection";
    case Strategy::resource_constraint: return "resource_constraint";
    case Strategy::breaker_bypass: return "breaker_bypass";
    case Strategy::lb_manipulation: return "lb_manipulation";
    case Strategy::dependency_isolation: return "dependency_isolation";
  }
  return "unknown";
}

inline std::optional<Strategy> strategy_from_string(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

/// Maximum cache bypass fraction a perturbation may request.
inline constexpr double kMaxCacheBypass = 0.20;

struct PerturbationAction {
  Strategy strategy = Strategy::cache_bypass;
  std::string target;
  /// cache_bypass: fraction of hits sent downstream, [0, 0.20].
  /// latency_injection: added ms, >= 0.
  /// resource_constraint: capacity multiplier, (0, 1].
  /// lb_manipulation: replicas removed, integer in [1, replicas - 1].
  /// breaker_bypass, dependency_isolation: ignored.
  double magnitude = 0.0;
  std::int64_t started_tick = 0;
  /// dependency_isolation: predecessor whose edge into `target` is cut;
  /// empty selects the first incoming edge.
  std::string peer;

  bool operator==(const PerturbationAction&) const = default;
};

/// Throws IncompatibleTarget or InvalidField when `a` cannot be applied to `topo`.
inline void check_action(const ValidatedTopology& topo, const PerturbationAction& a) {
  const auto idx = topo.find(a.target);
  if (!idx) throw Error(Errc::UnknownComponent, a.target);
  const ComponentSpec& c = topo.component(*idx);
  auto incompatible = [&] {
    throw Error(Errc::IncompatibleTarget, a.target,
                std::string(to_string(a.strategy)) + " on " + std::string(to_string(c.kind)));
  };
  auto bad_magnitude = [&] { throw Error(Errc::InvalidField, "magnitude", std::string(to_string(a.strategy))); };
  if (!std::isfinite(a.magnitude)) bad_magnitude();
  switch (a.strategy) {
    case Strategy::cache_bypass:
      if (c.kind != ComponentKind::cache) incompatible();
      if (a.magnitude < 0.0 || a.magnitude > kMaxCacheBypass + 1e-12) bad_magnitude();
      break;
    case Strategy::latency_injection:
      if (a.magnitude < 0.0) bad_magnitude();
      break;
    case Strategy::resource_constraint:
      if (a.magnitude <= 0.0 || a.magnitude > 1.0) bad_magnitude();
      break;
    case Strategy::breaker_bypass:
      if (c.kind != ComponentKind::circuit_breaker) incompatible();
      break;
    case Strategy::lb_manipulation: {
      if (c.kind != ComponentKind::load_balancer) incompatible();
      const auto* lb = std::get_if<LoadBalancerParams>(&c.optimization_params);
      const int replicas = lb ? lb->replicas : 1;
      if (replicas < 2) incompatible();
      if (a.magnitude < 1.0 || a.magnitude > replicas - 1 || a.magnitude != std::floor(a.magnitude)) bad_magnitude();
      break;
    }
    case Strategy::dependency_isolation:
      if (topo.incoming(*idx).empty()) incompatible();
      if (!a.peer.empty() && !topo.edge_index(a.peer, a.target)) throw Error(Errc::UnknownEdge, a.peer + "->" + a.target);
      break;
  }
}

/// Whether `strategy` can be aimed at component `i` at all (ignores magnitude).
inline bool strategy_applies(const ValidatedTopology& topo, Strategy strategy, std::size_t i) {
  const ComponentSpec& c = topo.component(i);
  switch (strategy) {
    case Strategy::cache_bypass: return c.kind == ComponentKind::cache;
    case Strategy::latency_injection: return c.kind != ComponentKind::entry;
    case Strategy::resource_constraint: return c.kind != ComponentKind::entry;
    case Strategy::breaker_bypass: return c.kind == ComponentKind::circuit_breaker;
    case Strategy::lb_manipulation: {
      const auto* lb = std::get_if<LoadBalancerParams>(&c.optimization_params);
      return c.kind == ComponentKind::load_balancer && lb && lb->replicas >= 2;
    }
    case Strategy::dependency_isolation: return !topo.incoming(i).empty();
  }
  return false;
}

// ---------------------------------------------------------------------------
// Simulation state and telemetry

struct ComponentMetrics {
  double offered_rps = 0.0;
  double served_rps = 0.0;
  double error_rps = 0.0;
  /// Traffic passed on to successors (before the per-edge split).
  double forwarded_rps = 0.0;
  /// Served traffic that did not leave the component (cache hits, unrouted remainder).
  double absorbed_rps = 0.0;
  double capacity_rps = 0.0;
  double utilization = 0.0;
  double latency_ms = 0.0;
  double queue_depth = 0.0;
  std::optional<double> hit_rate;
  std::optional<BreakerState> breaker_state;

  bool operator==(const ComponentMetrics&) const = default;
};

struct TickSnapshot {
  std::int64_t tick_s = 0;
  std::vector<ComponentMetrics> components;  // topology declaration order

  bool operator==(const TickSnapshot&) const = default;
};

struct TraceMetadata {
  std::uint64_t seed = 0;
  std::string scenario_hash;
  std::int64_t duration_s = 0;

  bool operator==(const TraceMetadata&) const = default;
};

struct TelemetryTrace {
  TraceMetadata metadata;
  std::vector<std::string> component_ids;
  std::vector<TickSnapshot> ticks;

  [[nodiscard]] std::size_t component_index(std::string_view id) const {
    auto it = std::find(component_ids.begin(), component_ids.end(), id);
    if (it == component_ids.end()) throw Error(Errc::UnknownComponent, std::string(id));
    return static_cast<std::size_t>(it - component_ids.begin());
  }

  /// Mean of `field` for component `id` over ticks [from, to).
  template <class Field>
  [[nodiscard]] double mean(std::string_view id, Field field, std::size_t from = 0,
                            std::size_t to = static_cast<std::size_t>(-1)) const {
    const std::size_t c = component_index(id);
    to = std::min(to, ticks.size());
    if (from >= to) return 0.0;
    double sum = 0.0;
    for (std::size_t t = from; t < to; ++t) sum += field(ticks[t].components[c]);
    return sum / static_cast<double>(to - from);
  }

  bool operator==(const TelemetryTrace&) const = default;
};

/// Mutable per-run state: breaker machines, queue backlogs, active actions and
/// the internal overrides used by measurement and mitigation.
struct SimState {
  std::int64_t tick_s = 0;
  std::vector<BreakerStatus> breakers;
  std::vector<double> backlog;
  std::vector<PerturbationAction> active_perturbations;
  /// Per-component cache bypass outside the perturbation range (full bypass for
  /// amplification measurement).
  std::vector<double> forced_bypass;
  /// Per-component flag: route all of a bypassed load balancer's traffic to one edge.
  std::vector<std::optional<std::size_t>> concentrate_edge;
  /// Per-component flag: breaker held closed.
  std::vector<bool> forced_closed;
  double shadow_fraction = 0.0;
  double shed_fraction = 0.0;

  bool operator==(const SimState&) const = default;
};

inline SimState initial_state(const ValidatedTopology& topo) {
  SimState s;
  const std::size_t n = topo.size();
  s.breakers.assign(n, {});
  s.backlog.assign(n, 0.0);
  s.forced_bypass.assign(n, 0.0);
  s.concentrate_edge.assign(n, std::nullopt);
  s.forced_closed.assign(n, false);
  return s;
}

/// Adds `action` (replacing any active action with the same strategy, target
/// and peer). Effects persist until cleared.
inline SimState apply_action(const ValidatedTopology& topo, SimState state, PerturbationAction action) {
  check_action(topo, action);
  if (action.strategy == Strategy::dependency_isolation && action.peer.empty()) {
    const std::size_t e = topo.incoming(topo.index_of(action.target)).front();
    action.peer = topo.edge(e).from;
  }
  auto& active = state.active_perturbations;
  auto same = [&](const PerturbationAction& a) {
    return a.strategy == action.strategy && a.target == action.target && a.peer == action.peer;
  };
  auto it = std::find_if(active.begin(), active.end(), same);
  if (it != active.end()) {
    *it = std::move(action);
  } else {
    active.push_back(std::move(action));
  }
  return state;
}

/// Removes every active action on `target`; an empty target clears everything.
inline SimState clear_actions(SimState state, std::string_view target = {}) {
  auto& active = state.active_perturbations;
  if (target.empty()) {
    active.clear();
  } else {
    std::erase_if(active, [&](const PerturbationAction& a) { return a.target == target; });
  }
  return state;
}

inline double cache_hit_rate(const CacheParams& p, std::int64_t tick) noexcept {
  double h = p.hit_rate ? *p.hit_rate : p.hit_max * (1.0 - std::exp(-*p.cache_size / p.size_scale));
  if (p.hit_degradation_per_tick > 0.0) {
    h *= std::max(0.0, 1.0 - p.hit_degradation_per_tick * static_cast<double>(tick));
  }
  return std::clamp(h, 0.0, 1.0);
}

/// Deterministic fluid simulator. One `step()` advances the clock by one
/// second, pushing traffic through the topology in topological order.
class Simulator {
 public:
  Simulator(ValidatedTopology topo, TrafficProfile traffic, std::uint64_t seed)
      : topo_(std::move(topo)),
        traffic_(traffic),
        seed_(seed),
        noise_(make_stream(seed, "sim.traffic_noise")),
        state_(initial_state(topo_)) {
    validate_traffic(traffic_);
  }

  [[nodiscard]] const ValidatedTopology& topology() const noexcept { return topo_; }
  [[nodiscard]] const TrafficProfile& traffic() const noexcept { return traffic_; }
  [[nodiscard]] const SimState& state() const noexcept { return state_; }
  [[nodiscard]] std::int64_t tick() const noexcept { return state_.tick_s; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const std::vector<PerturbationAction>& active_perturbations() const noexcept {
    return state_.active_perturbations;
  }

  void apply(PerturbationAction action) { state_ = apply_action(topo_, std::move(state_), std::move(action)); }
  void clear(std::string_view target = {}) { state_ = clear_actions(std::move(state_), target); }

  void set_forced_bypass(std::string_view id, double fraction) {
    state_.forced_bypass.at(topo_.index_of(id)) = std::clamp(fraction, 0.0, 1.0);
  }
  void set_forced_closed(std::string_view id, bool closed) { state_.forced_closed.at(topo_.index_of(id)) = closed; }
  void set_concentrate(std::string_view lb, std::optional<std::size_t> edge) {
    state_.concentrate_edge.at(topo_.index_of(lb)) = edge;
  }
  void set_shadow_fraction(double f) { state_.shadow_fraction = std::clamp(f, 0.0, 1.0); }
  void set_shed_fraction(double f) { state_.shed_fraction = std::clamp(f, 0.0, 1.0); }
  void clear_overrides() {
    std::fill(state_.forced_bypass.begin(), state_.forced_bypass.end(), 0.0);
    std::fill(state_.forced_closed.begin(), state_.forced_closed.end(), false);
    std::fill(state_.concentrate_edge.begin(), state_.concentrate_edge.end(), std::nullopt);
  }

  /// Swaps in a reconfigured topology with the same components and edges.
  void reconfigure(ValidatedTopology topo) {
    if (topo.size() != topo_.size() || topo.edges().size() != topo_.edges().size()) {
      throw Error(Errc::InvalidField, "topology", "reconfiguration must keep the graph shape");
    }
    for (std::size_t i = 0; i < topo.size(); ++i) {
      if (topo.component(i).id != topo_.component(i).id) {
        throw Error(Errc::InvalidField, "topology", "reconfiguration must keep component order");
      }
    }
    topo_ = std::move(topo);
  }

  TickSnapshot step() {
    const std::size_t n = topo_.size();
    const auto& edges = topo_.edges();
    const std::int64_t t = state_.tick_s;

    double entry_rps = offered_load(traffic_, t);
    if (traffic_.noise_fraction > 0.0) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      entry_rps *= 1.0 + traffic_.noise_fraction * u(noise_);
    }
    entry_rps *= 1.0 - state_.shed_fraction;

    // Aggregate active perturbations per component / edge.
    std::vector<double> bypass(n, 0.0), injected(n, 0.0), cap_mult(n, 1.0), removed(n, 0.0);
    std::vector<bool> held_closed = state_.forced_closed;
    std::vector<bool> edge_cut(edges.size(), false);
    for (const auto& a : state_.active_perturbations) {
      const std::size_t i = topo_.index_of(a.target);
      switch (a.strategy) {
        case Strategy::cache_bypass: bypass[i] = std::max(bypass[i], a.magnitude); break;
        case Strategy::latency_injection: injected[i] += a.magnitude; break;
        case Strategy::resource_constraint: cap_mult[i] *= a.magnitude; break;
        case Strategy::breaker_bypass: held_closed[i] = true; break;
        case Strategy::lb_manipulation: removed[i] += a.magnitude; break;
        case Strategy::dependency_isolation: edge_cut[*topo_.edge_index(a.peer, a.target)] = true; break;
      }
    }

    TickSnapshot snap;
    snap.tick_s = t;
    snap.components.resize(n);
    std::vector<double> inflow(n, 0.0);
    std::vector<double> contribution(edges.size(), 0.0);

    for (std::size_t i : topo_.topological_order()) {
      const ComponentSpec& c = topo_.component(i);
      ComponentMetrics& m = snap.components[i];
      m.offered_rps = inflow[i] + (topo_.is_entry(i) ? entry_rps : 0.0);

      double cap = base_capacity(c) * cap_mult[i];
      if (const auto* lb = std::get_if<LoadBalancerParams>(&c.optimization_params)) {
        const double k = lb->replicas;
        cap *= std::max(0.0, k - removed[i]) / k;
      }
      m.capacity_rps = cap;

      double pass_fraction = 1.0;  // share of served traffic forwarded
      switch (c.kind) {
        case ComponentKind::queue: {
          const auto* qp = std::get_if<QueueParams>(&c.optimization_params);
          const double depth = qp ? qp->queue_depth : 0.0;
          const double demand = m.offered_rps + state_.backlog[i];
          m.served_rps = std::min(demand, cap);
          const double excess = demand - m.served_rps;
          state_.backlog[i] = std::min(excess, depth);
          m.error_rps = excess - state_.backlog[i];
          m.queue_depth = state_.backlog[i];
          break;
        }
        case ComponentKind::circuit_breaker: {
          const BreakerStatus status = held_closed[i] ? BreakerStatus{} : state_.breakers[i];
          m.breaker_state = status.state;
          const double admitted = std::min(m.offered_rps, cap);
          if (status.state == BreakerState::open) {
            m.served_rps = 0.0;
          } else if (status.state == BreakerState::half_open) {
            const auto* bp = std::get_if<BreakerParams>(&c.optimization_params);
            m.served_rps = admitted * (bp ? bp->half_open_probe_fraction : 1.0);
          } else {
            m.served_rps = admitted;
          }
          m.error_rps = m.offered_rps - m.served_rps;
          break;
        }
        case ComponentKind::cache: {
          m.served_rps = std::min(m.offered_rps, cap);
          m.error_rps = m.offered_rps - m.served_rps;
          const auto* cp = std::get_if<CacheParams>(&c.optimization_params);
          const double h = cp ? cache_hit_rate(*cp, t) : 0.0;
          const double b = std::max({bypass[i], state_.forced_bypass[i], state_.shadow_fraction});
          m.hit_rate = h;
          pass_fraction = (1.0 - h) + b * h;
          break;
        }
        default:
          m.served_rps = std::min(m.offered_rps, cap);
          m.error_rps = m.offered_rps - m.served_rps;
          break;
      }

      m.forwarded_rps = m.served_rps * pass_fraction;
      const auto out = topo_.outgoing(i);
      double routed = 0.0, severed = 0.0;
      const auto concentrate = state_.concentrate_edge[i];
      double total_fraction = 0.0;
      for (std::size_t e : out) total_fraction += edges[e].load_fraction;
      for (std::size_t e : out) {
        double fraction = edges[e].load_fraction;
        if (concentrate) fraction = (e == *concentrate) ? total_fraction : 0.0;
        if (edge_cut[e]) {
          // Calls into an isolated dependency fail at the caller.
          severed += m.forwarded_rps * fraction;
          fraction = 0.0;
        }
        contribution[e] = m.forwarded_rps * fraction;
        routed += contribution[e];
        inflow[topo_.index_of(edges[e].to)] += contribution[e];
      }
      m.served_rps -= severed;
      m.error_rps += severed;
      m.forwarded_rps = routed;
      m.absorbed_rps = m.served_rps - routed;

      m.utilization = cap > 0.0 ? std::clamp(m.offered_rps / cap, 0.0, 1.0) : 1.0;
      m.latency_ms = latency_at_utilization(c.latency_profile, m.utilization) + injected[i];
      if (c.kind == ComponentKind::queue && cap > 0.0) m.latency_ms += 1000.0 * state_.backlog[i] / cap;
    }

    // Breakers observe the error fraction of the traffic they forwarded.
    for (std::size_t i = 0; i < n; ++i) {
      const ComponentSpec& c = topo_.component(i);
      if (c.kind != ComponentKind::circuit_breaker) continue;
      const auto* bp = std::get_if<BreakerParams>(&c.optimization_params);
      if (!bp || held_closed[i]) {
        state_.breakers[i] = {};
        continue;
      }
      double sent = 0.0, failed = 0.0;
      for (std::size_t e : topo_.outgoing(i)) {
        const auto& d = snap.components[topo_.index_of(edges[e].to)];
        sent += contribution[e];
        if (d.offered_rps > 0.0) failed += contribution[e] * d.error_rps / d.offered_rps;
      }
      const double rate = sent > 0.0 ? failed / sent : 0.0;
      state_.breakers[i] = step_circuit_breaker(state_.breakers[i], rate, *bp);
    }

    ++state_.tick_s;
    return snap;
  }

 private:
  ValidatedTopology topo_;
  TrafficProfile traffic_;
  std::uint64_t seed_;
  Rng noise_;
  SimState state_;
};

/// Clears every active action (or only those on `target`) at the scheduled tick.
struct ClearAction {
  std::string target;

  bool operator==(const ClearAction&) const = default;
};

struct ScheduledEvent {
  std::int64_t tick_s = 0;
  std::variant<PerturbationAction, ClearAction> event;
};

/// Runs `duration_s` ticks. Events fire at the start of their tick, in list
/// order. Identical inputs yield an identical trace.
inline TelemetryTrace run_simulation(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                     std::int64_t duration_s, std::uint64_t seed,
                                     std::span<const ScheduledEvent> schedule = {}) {
  if (duration_s < 1) throw Error(Errc::InvalidField, "duration_s", "must be >= 1");
  for (const auto& ev : schedule) {
    if (ev.tick_s < 0 || ev.tick_s >= duration_s) {
      throw Error(Errc::ScheduleOutOfRange, std::to_string(ev.tick_s));
    }
    if (const auto* a = std::get_if<PerturbationAction>(&ev.event)) check_action(topo, *a);
  }
  std::vector<const ScheduledEvent*> ordered;
  for (const auto& ev : schedule) ordered.push_back(&ev);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ScheduledEvent* a, const ScheduledEvent* b) { return a->tick_s < b->tick_s; });

  Simulator sim(topo, traffic, seed);
  TelemetryTrace trace;
  trace.metadata = {seed, {}, duration_s};
  for (const auto& c : topo.components()) trace.component_ids.push_back(c.id);
  trace.ticks.reserve(static_cast<std::size_t>(duration_s));

  std::size_t next = 0;
  for (std::int64_t t = 0; t < duration_s; ++t) {
    for (; next < ordered.size() && ordered[next]->tick_s == t; ++next) {
      if (const auto* a = std::get_if<PerturbationAction>(&ordered[next]->event)) {
        PerturbationAction action = *a;
        action.started_tick = t;
        sim.apply(std::move(action));
      } else {
        sim.clear(std::get<ClearAction>(ordered[next]->event).target);
      }
    }
    trace.ticks.push_back(sim.step());
  }
  return trace;
}

}  // namespace lri
