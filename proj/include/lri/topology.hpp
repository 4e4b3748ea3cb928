#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "lri/error.hpp"

namespace lri {

enum class ComponentKind { cache, load_balancer, circuit_breaker, queue, service, database, entry };

constexpr std::string_view to_string(ComponentKind k) noexcept {
  switch (k) {
    case ComponentKind::cache: return "cache";
    case ComponentKind::load_balancer: return "load_balancer";
    case ComponentKind::circuit_breaker: return "circuit_breaker";
    case ComponentKind::queue: return "queue";
    case ComponentKind::service: return "service";
    case ComponentKind::database: return "database";
    case ComponentKind::entry: return "entry";
  }
  return "unknown";
}

enum class LatencyModel { mm1, linear, table };

constexpr std::string_view to_string(LatencyModel m) noexcept {
  switch (m) {
    case LatencyModel::mm1: return "mm1";
    case LatencyModel::linear: return "linear";
    case LatencyModel::table: return "table";
  }
  return "unknown";
}

struct LatencyProfile {
  double base_latency_ms = 1.0;
  LatencyModel model = LatencyModel::mm1;
  double saturation_cap_ms = 1000.0;
  /// (utilization, latency_ms), strictly increasing in utilization, first point at 0.
  std::vector<std::pair<double, double>> table_points;

  bool operator==(const LatencyProfile&) const = default;
};

/// Either a fixed hit rate, or the working-set curve
/// hit(size) = hit_max * (1 - exp(-size / size_scale)).
/// `hit_degradation_per_tick` scales the hit rate by max(0, 1 - d * tick).
struct CacheParams {
  std::optional<double> hit_rate;
  std::optional<double> cache_size;
  double hit_max = 0.0;
  double size_scale = 1.0;
  double hit_degradation_per_tick = 0.0;

  bool operator==(const CacheParams&) const = default;
};

struct BreakerParams {
  double trip_threshold = 0.5;
  int recovery_ticks = 5;
  double half_open_probe_fraction = 0.1;

  bool operator==(const BreakerParams&) const = default;
};

struct LoadBalancerParams {
  int replicas = 2;

  bool operator==(const LoadBalancerParams&) const = default;
};

struct QueueParams {
  double queue_depth = 0.0;

  bool operator==(const QueueParams&) const = default;
};

/// Connection pool in front of a service or database; effective capacity is
/// min(capacity_rps, pool_size * rps_per_connection).
struct PoolParams {
  int pool_size = 1;
  double rps_per_connection = 1.0;

  bool operator==(const PoolParams&) const = default;
};

using OptimizationParams =
    std::variant<std::monostate, CacheParams, BreakerParams, LoadBalancerParams, QueueParams, PoolParams>;

struct ComponentSpec {
  std::string id;
  ComponentKind kind = ComponentKind::service;
  double capacity_rps = 1.0;
  LatencyProfile latency_profile;
  double mttr_minutes = 1.0;
  double observability_coverage = 1.0;
  double criticality = 1.0;
  double bypass_probability = 0.0;
  OptimizationParams optimization_params;

  /// R_i, recoveries per minute.
  [[nodiscard]] double recovery_rate() const noexcept { return 1.0 / mttr_minutes; }

  bool operator==(const ComponentSpec&) const = default;
};

struct DependencyEdge {
  std::string from;
  std::string to;
  double load_fraction = 1.0;
  std::optional<double> declared_amplification;
  double edge_observability = 1.0;

  bool operator==(const DependencyEdge&) const = default;
};

struct TopologyGraph {
  std::vector<ComponentSpec> components;
  std::vector<DependencyEdge> edges;
  std::vector<std::string> entry_ids;

  bool operator==(const TopologyGraph&) const = default;
};

/// Effective capacity before any perturbation: the pool limit applies when present.
inline double base_capacity(const ComponentSpec& c) noexcept {
  if (const auto* pool = std::get_if<PoolParams>(&c.optimization_params)) {
    return std::min(c.capacity_rps, pool->pool_size * pool->rps_per_connection);
  }
  return c.capacity_rps;
}

/// True for the kinds whose optimization can be bypassed to measure amplification.
constexpr bool is_bypassable(ComponentKind k) noexcept {
  return k == ComponentKind::cache || k == ComponentKind::circuit_breaker ||
         k == ComponentKind::load_balancer;
}

class ValidatedTopology;
ValidatedTopology validate_topology(const TopologyGraph& raw);

/// A topology that satisfied every structural and range invariant. Immutable;
/// carries adjacency, a topological order and per-node dependency depth.
class ValidatedTopology {
 public:
  [[nodiscard]] const TopologyGraph& graph() const noexcept { return graph_; }
  [[nodiscard]] const std::vector<ComponentSpec>& components() const noexcept { return graph_.components; }
  [[nodiscard]] const std::vector<DependencyEdge>& edges() const noexcept { return graph_.edges; }
  [[nodiscard]] std::size_t size() const noexcept { return graph_.components.size(); }

  [[nodiscard]] const ComponentSpec& component(std::size_t i) const { return graph_.components.at(i); }
  [[nodiscard]] const ComponentSpec& component(std::string_view id) const { return component(index_of(id)); }
  [[nodiscard]] const DependencyEdge& edge(std::size_t e) const { return graph_.edges.at(e); }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] std::size_t index_of(std::string_view id) const {
    auto idx = find(id);
    if (!idx) throw Error(Errc::UnknownComponent, std::string(id));
    return *idx;
  }

  [[nodiscard]] std::optional<std::size_t> edge_index(std::string_view from, std::string_view to) const {
    auto f = find(from);
    if (!f) return std::nullopt;
    for (std::size_t e : out_[*f]) {
      if (graph_.edges[e].to == to) return e;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::span<const std::size_t> topological_order() const noexcept { return order_; }
  [[nodiscard]] std::span<const std::size_t> incoming(std::size_t i) const { return in_.at(i); }
  [[nodiscard]] std::span<const std::size_t> outgoing(std::size_t i) const { return out_.at(i); }
  [[nodiscard]] bool is_entry(std::size_t i) const { return entry_mask_.at(i); }
  [[nodiscard]] int depth(std::size_t i) const { return depth_.at(i); }

  [[nodiscard]] std::vector<std::string> topological_ids() const {
    std::vector<std::string> ids;
    ids.reserve(order_.size());
    for (std::size_t i : order_) ids.push_back(graph_.components[i].id);
    return ids;
  }

  bool operator==(const ValidatedTopology& other) const { return graph_ == other.graph_; }

 private:
  friend ValidatedTopology validate_topology(const TopologyGraph& raw);
  ValidatedTopology() = default;

  TopologyGraph graph_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::size_t> order_;
  std::vector<bool> entry_mask_;
  std::vector<int> depth_;
};

namespace detail {

inline void require(bool ok, const char* field, const std::string& where) {
  if (!ok) throw Error(Errc::InvalidField, field, where);
}

inline bool finite(double x) { return std::isfinite(x); }

inline void check_component(const ComponentSpec& c) {
  const std::string where = "component '" + c.id + "'";
  require(!c.id.empty(), "id", "component id must be non-empty");
  require(finite(c.capacity_rps) && c.capacity_rps > 0.0, "capacity_rps", where);
  require(finite(c.mttr_minutes) && c.mttr_minutes > 0.0, "mttr_minutes", where);
  require(finite(c.observability_coverage) && c.observability_coverage >= 0.0 &&
              c.observability_coverage <= 1.0,
          "observability_coverage", where);
  require(finite(c.criticality) && c.criticality >= 1.0 && c.criticality <= 5.0, "criticality", where);
  require(finite(c.bypass_probability) && c.bypass_probability >= 0.0 && c.bypass_probability <= 1.0,
          "bypass_probability", where);

  const auto& lp = c.latency_profile;
  require(finite(lp.base_latency_ms) && lp.base_latency_ms > 0.0, "base_latency_ms", where);
  require(finite(lp.saturation_cap_ms) && lp.saturation_cap_ms >= lp.base_latency_ms, "saturation_cap_ms",
          where);
  if (lp.model == LatencyModel::table) {
    const auto& pts = lp.table_points;
    require(pts.size() >= 2, "table_points", where + ": need at least two points");
    require(pts.front().first == 0.0, "table_points", where + ": first point must be at utilization 0");
    for (std::size_t k = 0; k < pts.size(); ++k) {
      require(finite(pts[k].first) && finite(pts[k].second) && pts[k].first >= 0.0 && pts[k].first <= 1.0 &&
                  pts[k].second > 0.0,
              "table_points", where);
      if (k > 0) {
        require(pts[k].first > pts[k - 1].first, "table_points", where + ": utilization must strictly increase");
        require(pts[k].second >= pts[k - 1].second, "table_points", where + ": latency must not decrease");
      }
    }
  }

  const auto& params = c.optimization_params;
  if (std::holds_alternative<std::monostate>(params)) return;
  if (const auto* cp = std::get_if<CacheParams>(&params)) {
    require(c.kind == ComponentKind::cache, "optimization_params", where + ": cache params on non-cache");
    require(cp->hit_rate.has_value() != cp->cache_size.has_value(), "optimization_params",
            where + ": exactly one of hit_rate or cache_size");
    if (cp->hit_rate) require(*cp->hit_rate >= 0.0 && *cp->hit_rate <= 1.0, "hit_rate", where);
    if (cp->cache_size) {
      require(finite(*cp->cache_size) && *cp->cache_size >= 0.0, "cache_size", where);
      require(cp->hit_max >= 0.0 && cp->hit_max <= 1.0, "hit_max", where);
      require(finite(cp->size_scale) && cp->size_scale > 0.0, "size_scale", where);
    }
    require(finite(cp->hit_degradation_per_tick) && cp->hit_degradation_per_tick >= 0.0,
            "hit_degradation_per_tick", where);
  } else if (const auto* bp = std::get_if<BreakerParams>(&params)) {
    require(c.kind == ComponentKind::circuit_breaker, "optimization_params", where);
    require(bp->trip_threshold >= 0.0 && bp->trip_threshold <= 1.0, "trip_threshold", where);
    require(bp->recovery_ticks >= 1, "recovery_ticks", where);
    require(bp->half_open_probe_fraction > 0.0 && bp->half_open_probe_fraction <= 1.0,
            "half_open_probe_fraction", where);
  } else if (const auto* lb = std::get_if<LoadBalancerParams>(&params)) {
    require(c.kind == ComponentKind::load_balancer, "optimization_params", where);
    require(lb->replicas >= 1, "replicas", where);
  } else if (const auto* qp = std::get_if<QueueParams>(&params)) {
    require(c.kind == ComponentKind::queue, "optimization_params", where);
    require(finite(qp->queue_depth) && qp->queue_depth >= 0.0, "queue_depth", where);
  } else if (const auto* pp = std::get_if<PoolParams>(&params)) {
    require(c.kind == ComponentKind::service || c.kind == ComponentKind::database, "optimization_params", where);
    require(pp->pool_size >= 1, "pool_size", where);
    require(finite(pp->rps_per_connection) && pp->rps_per_connection > 0.0, "rps_per_connection", where);
  }
}

// Returns the node ids of one cycle among the nodes Kahn's algorithm could not order.
inline std::vector<std::string> find_cycle(const TopologyGraph& g, const std::vector<std::vector<std::size_t>>& out,
                                           const std::vector<int>& indeg,
                                           const std::unordered_map<std::string, std::size_t>& index) {
  const std::size_t n = g.components.size();
  std::vector<int> color(n, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::size_t> stack;
  std::vector<std::string> cycle;

  auto dfs = [&](auto&& self, std::size_t u) -> bool {
    color[u] = 1;
    stack.push_back(u);
    for (std::size_t e : out[u]) {
      const std::size_t v = index.at(g.edges[e].to);
      if (indeg[v] <= 0) continue;
      if (color[v] == 1) {
        auto it = std::find(stack.begin(), stack.end(), v);
        for (; it != stack.end(); ++it) cycle.push_back(g.components[*it].id);
        return true;
      }
      if (color[v] == 0 && self(self, v)) return true;
    }
    stack.pop_back();
    color[u] = 2;
    return false;
  };

  for (std::size_t u = 0; u < n; ++u) {
    if (indeg[u] > 0 && color[u] == 0 && dfs(dfs, u)) break;
  }
  return cycle;
}

}  // namespace detail

/// Checks every TopologyGraph invariant and attaches a deterministic
/// topological order (ties broken by declaration order).
inline ValidatedTopology validate_topology(const TopologyGraph& raw) {
  ValidatedTopology vt;
  vt.graph_ = raw;
  const auto& comps = vt.graph_.components;
  const auto& edges = vt.graph_.edges;
  const std::size_t n = comps.size();

  if (n == 0) throw Error(Errc::InvalidField, "components", "topology has no components");
  for (std::size_t i = 0; i < n; ++i) {
    detail::check_component(comps[i]);
    if (!vt.index_.emplace(comps[i].id, i).second) {
      throw Error(Errc::InvalidField, "id", "duplicate component id '" + comps[i].id + "'");
    }
  }

  vt.in_.assign(n, {});
  vt.out_.assign(n, {});
  std::vector<double> fraction_sum(n, 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    auto f = vt.index_.find(edge.from);
    auto t = vt.index_.find(edge.to);
    if (f == vt.index_.end()) throw Error(Errc::DanglingEdge, edge.from, "edge " + edge.from + "->" + edge.to);
    if (t == vt.index_.end()) throw Error(Errc::DanglingEdge, edge.to, "edge " + edge.from + "->" + edge.to);
    if (f->second == t->second) throw Error(Errc::CycleDetected, "[" + edge.from + "]", "self-edge");
    const std::string where = "edge " + edge.from + "->" + edge.to;
    detail::require(detail::finite(edge.load_fraction) && edge.load_fraction >= 0.0 && edge.load_fraction <= 1.0,
                    "load_fraction", where);
    detail::require(detail::finite(edge.edge_observability) && edge.edge_observability >= 0.0 &&
                        edge.edge_observability <= 1.0,
                    "edge_observability", where);
    if (edge.declared_amplification) {
      detail::require(detail::finite(*edge.declared_amplification) && *edge.declared_amplification > 0.0,
                      "declared_amplification", where);
    }
    for (std::size_t prior : vt.out_[f->second]) {
      if (edges[prior].to == edge.to) throw Error(Errc::InvalidField, "edges", "duplicate " + where);
    }
    vt.out_[f->second].push_back(e);
    vt.in_[t->second].push_back(e);
    fraction_sum[f->second] += edge.load_fraction;
  }
  for (std::size_t i = 0; i < n; ++i) {
    detail::require(fraction_sum[i] <= 1.0 + 1e-9, "load_fraction",
                    "outgoing load fractions of '" + comps[i].id + "' exceed 1");
  }

  // Kahn's algorithm, always releasing the lowest declaration index first.
  std::vector<int> indeg(n, 0);
  for (std::size_t i = 0; i < n; ++i) indeg[i] = static_cast<int>(vt.in_[i].size());
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    std::size_t u = ready.top();
    ready.pop();
    vt.order_.push_back(u);
    for (std::size_t e : vt.out_[u]) {
      std::size_t v = vt.index_.at(edges[e].to);
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  if (vt.order_.size() != n) {
    auto cycle = detail::find_cycle(vt.graph_, vt.out_, indeg, vt.index_);
    std::string listing = "[";
    for (std::size_t k = 0; k < cycle.size(); ++k) listing += (k ? "," : "") + cycle[k];
    listing += "]";
    throw Error(Errc::CycleDetected, listing);
  }

  if (vt.graph_.entry_ids.empty()) throw Error(Errc::InvalidField, "entries", "at least one entry required");
  vt.entry_mask_.assign(n, false);
  for (const auto& id : vt.graph_.entry_ids) {
    auto it = vt.index_.find(id);
    if (it == vt.index_.end()) throw Error(Errc::UnknownComponent, id, "listed in entries");
    if (vt.entry_mask_[it->second]) throw Error(Errc::InvalidField, "entries", "duplicate entry '" + id + "'");
    if (!vt.in_[it->second].empty()) {
      throw Error(Errc::InvalidField, "entries", "entry '" + id + "' has incoming edges");
    }
    vt.entry_mask_[it->second] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (comps[i].kind == ComponentKind::entry && !vt.entry_mask_[i]) {
      throw Error(Errc::InvalidField, "entries", "entry-kind component '" + comps[i].id + "' not listed");
    }
  }

  // Longest entry->node path, counted in nodes. Every non-entry root is unreachable.
  vt.depth_.assign(n, 0);
  for (std::size_t u : vt.order_) {
    if (vt.in_[u].empty()) {
      if (!vt.entry_mask_[u]) throw Error(Errc::UnreachableComponent, comps[u].id);
      vt.depth_[u] = 1;
    }
    for (std::size_t e : vt.out_[u]) {
      std::size_t v = vt.index_.at(edges[e].to);
      vt.depth_[v] = std::max(vt.depth_[v], vt.depth_[u] + 1);
    }
  }
  return vt;
}

inline ValidatedTopology validate_topology(const ValidatedTopology& topo) { return validate_topology(topo.graph()); }

/// Number of nodes on the longest entry->id path, inclusive; entries are 1.
inline int dependency_depth(const ValidatedTopology& topo, std::string_view id) {
  return topo.depth(topo.index_of(id));
}

// ---------------------------------------------------------------------------
// Amplification map (alpha per directed edge)

enum class AmplificationSource { declared, measured, assumed };

constexpr std::string_view to_string(AmplificationSource s) noexcept {
  switch (s) {
    case AmplificationSource::declared: return "declared";
    case AmplificationSource::measured: return "measured";
    case AmplificationSource::assumed: return "assumed";
  }
  return "unknown";
}

struct AmplificationEntry {
  double alpha = 1.0;
  AmplificationSource source = AmplificationSource::declared;
  double measurement_window_s = 0.0;

  bool operator==(const AmplificationEntry&) const = default;
};

class AmplificationMap {
 public:
  using Key = std::pair<std::string, std::string>;

  /// Measured values win over declared or assumed ones already present.
  void set(std::string from, std::string to, AmplificationEntry entry) {
    if (!(entry.alpha >= 0.0) || !std::isfinite(entry.alpha)) {
      throw Error(Errc::InvalidField, "alpha", from + "->" + to);
    }
    Key key{std::move(from), std::move(to)};
    auto it = entries_.find(key);
    if (it != entries_.end() && it->second.source == AmplificationSource::measured &&
        entry.source != AmplificationSource::measured) {
      return;
    }
    entries_[std::move(key)] = entry;
  }

  void set_declared(std::string from, std::string to, double alpha) {
    set(std::move(from), std::move(to), {alpha, AmplificationSource::declared, 0.0});
  }

  void set_measured(std::string from, std::string to, double alpha, double window_s) {
    set(std::move(from), std::move(to), {alpha, AmplificationSource::measured, window_s});
  }

  [[nodiscard]] const AmplificationEntry* find(std::string_view from, std::string_view to) const {
    auto it = entries_.find(Key{std::string(from), std::string(to)});
    return it == entries_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] const std::map<Key, AmplificationEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

  bool operator==(const AmplificationMap&) const = default;

 private:
  std::map<Key, AmplificationEntry> entries_;
};

/// Declared alphas only; edges without one are absent.
inline AmplificationMap declared_amplifications(const ValidatedTopology& topo) {
  AmplificationMap map;
  for (const auto& e : topo.edges()) {
    if (e.declared_amplification) map.set_declared(e.from, e.to, *e.declared_amplification);
  }
  return map;
}

/// max over predecessors j of alpha_{j,id}; 1.0 when id has no predecessors.
inline double max_upstream_amplification(const ValidatedTopology& topo, const AmplificationMap& amap,
                                         std::string_view id) {
  const std::size_t i = topo.index_of(id);
  double best = 1.0;
  bool any = false;
  for (std::size_t e : topo.incoming(i)) {
    const auto& edge = topo.edge(e);
    const auto* entry = amap.find(edge.from, edge.to);
    if (!entry) throw Error(Errc::MissingAmplification, edge.from + "->" + edge.to);
    best = any ? std::max(best, entry->alpha) : entry->alpha;
    any = true;
  }
  return best;
}

}  // namespace lri
