#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lri/error.hpp"
#include "lri/riskcore.hpp"
#include "lri/rng.hpp"
#include "lri/simengine.hpp"
#include "lri/topology.hpp"

namespace lri {

// ---------------------------------------------------------------------------
// Decision variables

enum class ConfigParameter { cache_size, pool_size, trip_threshold, queue_depth, replicas };

constexpr std::string_view to_string(ConfigParameter p) noexcept {
  switch (p) {
    case ConfigParameter::cache_size: return "cache_size";
    case ConfigParameter::pool_size: return "pool_size";
    case ConfigParameter::trip_threshold: return "trip_threshold";
    case ConfigParameter::queue_depth: return "queue_depth";
    case ConfigParameter::replicas: return "replicas";
  }
  return "unknown";
}

inline std::optional<ConfigParameter> config_parameter_from_string(std::string_view s) {
  for (auto p : {ConfigParameter::cache_size, ConfigParameter::pool_size, ConfigParameter::trip_threshold,
                 ConfigParameter::queue_depth, ConfigParameter::replicas}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

struct ConfigVariable {
  std::string component;
  ConfigParameter parameter = ConfigParameter::cache_size;
  double lo = 0.0;
  double hi = 1.0;
  bool is_integer = false;

  [[nodiscard]] std::string name() const { return component + "." + std::string(to_string(parameter)); }
  bool operator==(const ConfigVariable&) const = default;
};

/// Values aligned with a list of ConfigVariables.
struct ConfigurationVector {
  std::vector<double> values;

  bool operator==(const ConfigurationVector&) const = default;
  auto operator<=>(const ConfigurationVector&) const = default;
};

inline void check_bounds(const ValidatedTopology& topo, std::span<const ConfigVariable> vars) {
  for (const auto& v : vars) {
    const ComponentSpec& c = topo.component(v.component);
    if (!(std::isfinite(v.lo) && std::isfinite(v.hi) && v.lo < v.hi)) {
      throw Error(Errc::InvalidField, "bounds", v.name() + " needs lo < hi");
    }
    auto need = [&](bool ok) {
      if (!ok) throw Error(Errc::IncompatibleTarget, c.id, std::string(to_string(v.parameter)));
    };
    switch (v.parameter) {
      case ConfigParameter::cache_size: {
        const auto* p = std::get_if<CacheParams>(&c.optimization_params);
        need(p != nullptr && v.lo >= 0.0);
        break;
      }
      case ConfigParameter::pool_size:
        need(std::holds_alternative<PoolParams>(c.optimization_params) && v.lo >= 1.0 && v.is_integer);
        break;
      case ConfigParameter::trip_threshold:
        need(std::holds_alternative<BreakerParams>(c.optimization_params) && v.lo > 0.0 && v.hi <= 1.0);
        break;
      case ConfigParameter::queue_depth:
        need(std::holds_alternative<QueueParams>(c.optimization_params) && v.lo >= 0.0);
        break;
      case ConfigParameter::replicas:
        need(std::holds_alternative<LoadBalancerParams>(c.optimization_params) && v.lo >= 1.0 && v.is_integer);
        break;
    }
  }
}

/// Current values of `vars` in `topo` (cache_size falls back to the lower
/// bound when the cache is declared with a fixed hit rate).
inline ConfigurationVector current_configuration(const ValidatedTopology& topo, std::span<const ConfigVariable> vars) {
  ConfigurationVector x;
  for (const auto& v : vars) {
    const ComponentSpec& c = topo.component(v.component);
    double value = v.lo;
    if (const auto* p = std::get_if<CacheParams>(&c.optimization_params)) {
      if (v.parameter == ConfigParameter::cache_size && p->cache_size) value = *p->cache_size;
    } else if (const auto* p = std::get_if<PoolParams>(&c.optimization_params)) {
      value = p->pool_size;
    } else if (const auto* p = std::get_if<BreakerParams>(&c.optimization_params)) {
      value = p->trip_threshold;
    } else if (const auto* p = std::get_if<QueueParams>(&c.optimization_params)) {
      value = p->queue_depth;
    } else if (const auto* p = std::get_if<LoadBalancerParams>(&c.optimization_params)) {
      value = p->replicas;
    }
    x.values.push_back(std::clamp(value, v.lo, v.hi));
  }
  return x;
}

/// `topo` with `x` written into the optimization parameters. LB capacity
/// scales with the replica count.
inline ValidatedTopology configure(const ValidatedTopology& topo, std::span<const ConfigVariable> vars,
                                   const ConfigurationVector& x) {
  if (x.values.size() != vars.size()) throw Error(Errc::ArityMismatch, "configuration");
  TopologyGraph g = topo.graph();
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const auto& v = vars[k];
    const double value = x.values[k];
    if (!(value >= v.lo - 1e-12 && value <= v.hi + 1e-12) || (v.is_integer && value != std::round(value))) {
      throw Error(Errc::InvalidField, v.name(), "value outside bounds");
    }
    ComponentSpec& c = g.components[topo.index_of(v.component)];
    switch (v.parameter) {
      case ConfigParameter::cache_size: {
        auto& p = std::get<CacheParams>(c.optimization_params);
        p.cache_size = value;
        p.hit_rate.reset();
        break;
      }
      case ConfigParameter::pool_size:
        std::get<PoolParams>(c.optimization_params).pool_size = static_cast<int>(value);
        break;
      case ConfigParameter::trip_threshold: std::get<BreakerParams>(c.optimization_params).trip_threshold = value; break;
      case ConfigParameter::queue_depth: std::get<QueueParams>(c.optimization_params).queue_depth = value; break;
      case ConfigParameter::replicas: {
        auto& p = std::get<LoadBalancerParams>(c.optimization_params);
        c.capacity_rps *= value / p.replicas;
        p.replicas = static_cast<int>(value);
        break;
      }
    }
  }
  return validate_topology(g);
}

// ---------------------------------------------------------------------------
// Objectives

struct FitnessWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double epsilon = 0.01;

  bool operator==(const FitnessWeights&) const = default;
};

/// alpha*Perf + beta/(LRI + epsilon) + gamma*Stability.
inline double fitness(double performance, double lri, double stability, const FitnessWeights& w) {
  if (!(w.epsilon > 0.0)) throw Error(Errc::InvalidField, "epsilon", "must be > 0");
  return w.alpha * performance + w.beta / (lri + w.epsilon) + w.gamma * stability;
}

struct ObjectiveVector {
  /// Maximized: throughput_rps, -latency_ms, resource_efficiency.
  std::vector<double> values;
  double lri = 0.0;
  /// Aggregate constraint violation; 0 when feasible.
  double violation = 0.0;
  bool feasible = true;
  /// Eq. 7 inputs, carried for reporting.
  double performance = 0.0;
  double stability = 0.0;

  [[nodiscard]] double throughput_rps() const { return values.at(0); }
  [[nodiscard]] double neg_latency_ms() const { return values.at(1); }
  [[nodiscard]] double resource_efficiency() const { return values.at(2); }
  bool operator==(const ObjectiveVector&) const = default;
};

/// Constraint-domination: feasible beats infeasible, lower violation wins
/// between infeasibles, Pareto dominance between feasibles.
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.values.size() != b.values.size()) throw Error(Errc::ArityMismatch, "objectives");
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.violation < b.violation;
  bool strictly = false;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    if (a.values[k] < b.values[k]) return false;
    if (a.values[k] > b.values[k]) strictly = true;
  }
  return strictly;
}

struct EvalOptions {
  std::int64_t duration_s = 60;
  std::int64_t amplification_duration_s = 60;
  double tau_risk = 10.0;
  double reserve_fraction = 0.0;

  bool operator==(const EvalOptions&) const = default;
};

/// Declared alphas plus a fresh measurement on every bypassable edge. An edge
/// whose baseline is empty keeps its declared (or assumed) value.
inline AmplificationMap evaluation_amplification(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                                 std::uint64_t seed, std::int64_t duration_s) {
  AmplificationMap map = prior_amplification_map(topo);
  for (std::size_t e = 0; e < topo.edges().size(); ++e) {
    const auto& edge = topo.edge(e);
    if (!is_bypassable(topo.component(edge.from).kind)) continue;
    try {
      map.set(edge.from, edge.to,
              measure_amplification(topo, traffic, edge.from, edge.to, duration_s, derive_seed(seed, "riskcore.measure", e)));
    } catch (const Error& err) {
      if (err.code() != Errc::ZeroBaseline) throw;
    }
  }
  return map;
}

struct TraceObjectives {
  double throughput_rps = 0.0;
  double latency_ms = 0.0;
  double efficiency = 0.0;
  double performance = 0.0;
  double stability = 0.0;
  /// Highest per-component mean utilization.
  double peak_utilization = 0.0;
};

/// Throughput = entry load minus errors anywhere; latency = load-weighted sum
/// of component latencies per entry request; efficiency = mean utilization of
/// non-entry components.
inline TraceObjectives trace_objectives(const ValidatedTopology& topo, const TelemetryTrace& trace) {
  TraceObjectives o;
  const std::size_t n = topo.size();
  std::vector<double> util(n, 0.0), tick_throughput;
  double offered_total = 0.0, served_total = 0.0, latency_total = 0.0;
  for (const auto& snap : trace.ticks) {
    double entry = 0.0, errors = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = snap.components[i];
      if (topo.is_entry(i)) entry += m.offered_rps;
      errors += m.error_rps;
      weighted += m.offered_rps * m.latency_ms;
      util[i] += m.utilization;
    }
    const double through = std::max(0.0, entry - errors);
    tick_throughput.push_back(through);
    offered_total += entry;
    served_total += through;
    latency_total += entry > 0.0 ? weighted / entry : 0.0;
  }
  const double ticks = static_cast<double>(trace.ticks.size());
  o.throughput_rps = served_total / ticks;
  o.latency_ms = latency_total / ticks;
  o.performance = offered_total > 0.0 ? served_total / offered_total : 0.0;

  double mean = o.throughput_rps, var = 0.0;
  for (double v : tick_throughput) var += (v - mean) * (v - mean);
  var /= ticks;
  o.stability = mean > 0.0 ? std::clamp(1.0 - std::sqrt(var) / mean, 0.0, 1.0) : 0.0;

  double eff = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    util[i] /= ticks;
    o.peak_utilization = std::max(o.peak_utilization, util[i]);
    if (!topo.is_entry(i)) {
      eff += util[i];
      ++counted;
    }
  }
  o.efficiency = counted ? eff / counted : 0.0;
  return o;
}

inline ObjectiveVector evaluate_topology(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                         std::uint64_t seed, const EvalOptions& opts) {
  const TelemetryTrace trace = run_simulation(topo, traffic, opts.duration_s, seed);
  const TraceObjectives t = trace_objectives(topo, trace);
  const AmplificationMap amap = evaluation_amplification(topo, traffic, seed, opts.amplification_duration_s);

  ObjectiveVector f;
  f.values = {t.throughput_rps, -t.latency_ms, t.efficiency};
  f.lri = system_lri(topo, amap);
  f.performance = t.performance;
  f.stability = t.stability;
  const double util_limit = 1.0 - opts.reserve_fraction;
  f.violation = std::max(0.0, f.lri - opts.tau_risk) / opts.tau_risk + std::max(0.0, t.peak_utilization - util_limit);
  f.feasible = f.violation == 0.0;
  return f;
}

inline ObjectiveVector evaluate(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                std::span<const ConfigVariable> vars, const ConfigurationVector& x, std::uint64_t seed,
                                const EvalOptions& opts = {}) {
  return evaluate_topology(configure(topo, vars, x), traffic, seed, opts);
}

// ---------------------------------------------------------------------------
// NSGA-II

struct ApexConfig {
  int population = 100;
  int generations = 40;
  double crossover_rate = 0.9;
  /// Per-variable mutation probability.
  double mutation_rate = 0.2;
  double tau_risk = 10.0;
  FitnessWeights weights;
  double resilience_reserve_fraction = 0.0;
  std::int64_t eval_duration_s = 60;
  std::int64_t amplification_duration_s = 60;
  double eta_crossover = 15.0;
  double eta_mutation = 20.0;
  /// 0 = hardware concurrency.
  unsigned threads = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] EvalOptions eval_options() const {
    return {eval_duration_s, amplification_duration_s, tau_risk, resilience_reserve_fraction};
  }
  bool operator==(const ApexConfig&) const = default;
};

inline void validate_apex_config(const ApexConfig& c) {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw Error(Errc::InvalidField, field);
  };
  require(c.population >= 100 && c.population <= 500 && c.population % 2 == 0, "population");
  require(c.generations >= 0, "generations");
  require(c.crossover_rate >= 0.0 && c.crossover_rate <= 1.0, "crossover_rate");
  require(c.mutation_rate >= 0.0 && c.mutation_rate <= 1.0, "mutation_rate");
  require(c.tau_risk > 0.0, "tau_risk");
  require(c.weights.alpha >= 0.0 && c.weights.beta >= 0.0 && c.weights.gamma >= 0.0, "weights");
  require(c.weights.epsilon > 0.0, "epsilon");
  require(c.resilience_reserve_fraction >= 0.0 && c.resilience_reserve_fraction < 1.0, "resilience_reserve_fraction");
  require(c.eval_duration_s >= 1 && c.amplification_duration_s >= 1, "eval_duration_s");
  require(c.eta_crossover >= 0.0 && c.eta_mutation >= 0.0, "eta");
}

struct FrontMember {
  ConfigurationVector x;
  ObjectiveVector f;
  double fitness = 0.0;

  bool operator==(const FrontMember&) const = default;
};

struct ParetoFront {
  std::vector<ConfigVariable> variables;
  std::vector<FrontMember> members;
  int generations = 0;
  std::uint64_t seed = 0;
  std::size_t evaluations = 0;

  bool operator==(const ParetoFront&) const = default;
};

namespace detail {

struct Individual {
  ConfigurationVector x;
  ObjectiveVector f;
  int rank = 0;
  double crowding = 0.0;
};

/// Evaluates xs[k] with seed derive_seed(seed, "apex.eval", first_index + k),
/// in parallel; results do not depend on scheduling.
inline std::vector<ObjectiveVector> evaluate_batch(const ValidatedTopology& topo, const TrafficProfile& traffic,
                                                   std::span<const ConfigVariable> vars,
                                                   const std::vector<ConfigurationVector>& xs, const ApexConfig& cfg,
                                                   std::size_t first_index) {
  std::vector<ObjectiveVector> out(xs.size());
  std::vector<std::exception_ptr> errors(xs.size());
  const EvalOptions opts = cfg.eval_options();
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, xs.size()));
  auto work = [&](unsigned w) {
    for (std::size_t k = w; k < xs.size(); k += workers) {
      try {
        out[k] = evaluate(topo, traffic, vars, xs[k], derive_seed(cfg.seed, "apex.eval", first_index + k), opts);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Fast non-dominated sort; fills rank and returns fronts as index lists.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(std::vector<Individual>& pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<int> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(pop[p].f, pop[q].f)) {
        dominated[p].push_back(q);
      } else if (dominates(pop[q].f, pop[p].f)) {
        ++count[p];
      }
    }
    if (count[p] == 0) {
      pop[p].rank = 0;
      fronts[0].push_back(p);
    }
  }
  for (std::size_t k = 0; !fronts[k].empty(); ++k) {
    std::vector<std::size_t> next;
    for (std::size_t p : fronts[k]) {
      for (std::size_t q : dominated[p]) {
        if (--count[q] == 0) {
          pop[q].rank = static_cast<int>(k + 1);
          next.push_back(q);
        }
      }
    }
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

inline void assign_crowding(std::vector<Individual>& pop, const std::vector<std::size_t>& front) {
  for (std::size_t i : front) pop[i].crowding = 0.0;
  if (front.empty()) return;
  const std::size_t m = pop[front[0]].f.values.size();
  std::vector<std::size_t> order = front;
  for (std::size_t k = 0; k < m; ++k) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (pop[a].f.values[k] != pop[b].f.values[k]) return pop[a].f.values[k] < pop[b].f.values[k];
      return a < b;
    });
    const double lo = pop[order.front()].f.values[k], hi = pop[order.back()].f.values[k];
    pop[order.front()].crowding = std::numeric_limits<double>::infinity();
    pop[order.back()].crowding = std::numeric_limits<double>::infinity();
    if (hi <= lo) continue;
    for (std::size_t j = 1; j + 1 < order.size(); ++j) {
      pop[order[j]].crowding += (pop[order[j + 1]].f.values[k] - pop[order[j - 1]].f.values[k]) / (hi - lo);
    }
  }
}

inline bool crowded_better(const Individual& a, const Individual& b) {
  if (a.rank != b.rank) return a.rank < b.rank;
  return a.crowding > b.crowding;
}

inline double snap(const ConfigVariable& v, double x) {
  x = std::clamp(x, v.lo, v.hi);
  return v.is_integer ? std::clamp(std::round(x), std::ceil(v.lo), std::floor(v.hi)) : x;
}

inline void sbx(std::span<const ConfigVariable> vars, ConfigurationVector& a, ConfigurationVector& b, double eta,
                Rng& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    if (u(gen) > 0.5) continue;
    const double x1 = a.values[k], x2 = b.values[k];
    if (std::abs(x1 - x2) < 1e-14) continue;
    const double r = u(gen);
    const double beta = r <= 0.5 ? std::pow(2.0 * r, 1.0 / (eta + 1.0)) : std::pow(1.0 / (2.0 * (1.0 - r)), 1.0 / (eta + 1.0));
    a.values[k] = snap(vars[k], 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2));
    b.values[k] = snap(vars[k], 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2));
  }
}

inline void polynomial_mutation(std::span<const ConfigVariable> vars, ConfigurationVector& x, double rate, double eta,
                                Rng& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    if (u(gen) >= rate) continue;
    const double lo = vars[k].lo, hi = vars[k].hi, span = hi - lo;
    const double v = x.values[k];
    const double r = u(gen);
    const double power = 1.0 / (eta + 1.0);
    double dq;
    if (r < 0.5) {
      const double xy = 1.0 - (v - lo) / span;
      dq = std::pow(2.0 * r + (1.0 - 2.0 * r) * std::pow(xy, eta + 1.0), power) - 1.0;
    } else {
      const double xy = 1.0 - (hi - v) / span;
      dq = 1.0 - std::pow(2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(xy, eta + 1.0), power);
    }
    double next = v + dq * span;
    // Integer variables need at least a unit step or mutation never moves them.
    if (vars[k].is_integer && std::round(next) == v && dq != 0.0) next = v + (dq > 0.0 ? 1.0 : -1.0);
    x.values[k] = snap(vars[k], next);
  }
}

/// Feasible, mutually non-dominated subset of `candidates` (first occurrence
/// of each distinct x kept).
inline std::vector<FrontMember> feasible_front(const std::vector<FrontMember>& candidates) {
  std::vector<FrontMember> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!c.f.feasible) continue;
    bool dominated = false;
    for (const auto& other : candidates) {
      if (other.f.feasible && dominates(other.f, c.f)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// NSGA-II with constraint-domination. Returns the non-dominated feasible set
/// over every configuration evaluated during the run.
inline ParetoFront optimize(const ValidatedTopology& topo, const TrafficProfile& traffic,
                            std::span<const ConfigVariable> vars, const ApexConfig& cfg) {
  validate_apex_config(cfg);
  validate_traffic(traffic);
  if (vars.empty()) throw Error(Errc::InvalidField, "bounds", "no decision variables");
  check_bounds(topo, vars);

  Rng gen = make_stream(cfg.seed, "apex.nsga2");
  const auto n = static_cast<std::size_t>(cfg.population);
  std::size_t evaluated = 0;
  std::map<ConfigurationVector, ObjectiveVector> archive;
  std::vector<ConfigurationVector> archive_order;

  auto evaluate_all = [&](const std::vector<ConfigurationVector>& xs) {
    auto fs = detail::evaluate_batch(topo, traffic, vars, xs, cfg, evaluated);
    evaluated += xs.size();
    std::vector<detail::Individual> out;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (archive.emplace(xs[k], fs[k]).second) archive_order.push_back(xs[k]);
      out.push_back({xs[k], std::move(fs[k]), 0, 0.0});
    }
    return out;
  };

  std::vector<ConfigurationVector> init(n);
  for (auto& x : init) {
    for (const auto& v : vars) {
      std::uniform_real_distribution<double> u(v.lo, v.hi);
      x.values.push_back(detail::snap(v, u(gen)));
    }
  }
  std::vector<detail::Individual> pop = evaluate_all(init);
  for (const auto& front : detail::non_dominated_sort(pop)) detail::assign_crowding(pop, front);

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto tournament = [&]() -> const detail::Individual& {
    const auto& a = pop[pick(gen)];
    const auto& b = pop[pick(gen)];
    return detail::crowded_better(b, a) ? b : a;
  };

  for (int g = 0; g < cfg.generations; ++g) {
    std::vector<ConfigurationVector> children;
    children.reserve(n);
    while (children.size() < n) {
      ConfigurationVector a = tournament().x, b = tournament().x;
      if (u(gen) < cfg.crossover_rate) detail::sbx(vars, a, b, cfg.eta_crossover, gen);
      detail::polynomial_mutation(vars, a, cfg.mutation_rate, cfg.eta_mutation, gen);
      detail::polynomial_mutation(vars, b, cfg.mutation_rate, cfg.eta_mutation, gen);
      children.push_back(std::move(a));
      children.push_back(std::move(b));
    }
    auto offspring = evaluate_all(children);
    pop.insert(pop.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));

    // Elitist environmental selection.
    const auto fronts = detail::non_dominated_sort(pop);
    std::vector<detail::Individual> next;
    next.reserve(n);
    for (const auto& front : fronts) {
      detail::assign_crowding(pop, front);
      if (next.size() + front.size() <= n) {
        for (std::size_t i : front) next.push_back(pop[i]);
        continue;
      }
      std::vector<std::size_t> order = front;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pop[a].crowding != pop[b].crowding) return pop[a].crowding > pop[b].crowding;
        return a < b;
      });
      for (std::size_t k = 0; next.size() < n; ++k) next.push_back(pop[order[k]]);
      break;
    }
    pop = std::move(next);
  }

  std::vector<FrontMember> all;
  all.reserve(archive_order.size());
  for (const auto& x : archive_order) {
    const auto& f = archive.at(x);
    all.push_back({x, f, fitness(f.performance, f.lri, f.stability, cfg.weights)});
  }
  ParetoFront front;
  front.variables.assign(vars.begin(), vars.end());
  front.members = detail::feasible_front(all);
  front.generations = cfg.generations;
  front.seed = cfg.seed;
  front.evaluations = evaluated;
  if (front.members.empty()) throw Error(Errc::NoFeasibleSolution, "optimizer", "no evaluated configuration met the constraints");
  std::sort(front.members.begin(), front.members.end(),
            [](const FrontMember& a, const FrontMember& b) { return a.x < b.x; });
  return front;
}

// ---------------------------------------------------------------------------
// Risk-aware cache allocation

struct CacheLayer {
  double baseline_share = 0.0;
  double benefit_estimate = 0.0;
  double risk_cost = 0.0;

  bool operator==(const CacheLayer&) const = default;
};

inline double risk_penalty(double lri) { return std::clamp(lri / 10.0, 0.0, 5.0); }

inline std::vector<double> allocate_cache(double total_memory, std::span<const CacheLayer> layers, double current_lri) {
  if (!(total_memory > 0.0) || !std::isfinite(total_memory)) throw Error(Errc::InvalidField, "total_memory");
  if (layers.empty()) throw Error(Errc::InvalidShares, "layers", "no layers");
  double share_sum = 0.0;
  for (const auto& l : layers) {
    if (!(l.baseline_share >= 0.0)) throw Error(Errc::InvalidShares, "baseline_share");
    if (!(l.risk_cost >= 0.0)) throw Error(Errc::InvalidField, "risk_cost");
    if (!(l.benefit_estimate >= 0.0)) throw Error(Errc::InvalidField, "benefit_estimate");
    share_sum += l.baseline_share;
  }
  if (std::abs(share_sum - 1.0) > 1e-9) throw Error(Errc::InvalidShares, "baseline_share", "shares must sum to 1");

  const double penalty = risk_penalty(current_lri);
  std::vector<double> raw;
  double mass = 0.0;
  for (const auto& l : layers) {
    const double utility = l.benefit_estimate / (1.0 + l.risk_cost * penalty);
    raw.push_back(l.baseline_share * utility);
    mass += raw.back();
  }
  if (!(mass > 0.0)) throw Error(Errc::InvalidField, "benefit_estimate", "all layers have zero utility");
  for (double& r : raw) r = total_memory * r / mass;
  return raw;
}

}  // namespace lri
