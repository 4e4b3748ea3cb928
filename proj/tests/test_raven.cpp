#include "lri/raven.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace lri {
namespace {

using testing::cache_db_graph;
using testing::drift_graph;

std::vector<TickSnapshot> trace_ticks(const TopologyGraph& g, double rps, std::int64_t n, std::uint64_t seed = 1,
                                      double noise = 0.0) {
  TrafficProfile tr;
  tr.base_rps = rps;
  tr.noise_fraction = noise;
  return run_simulation(validate_topology(g), tr, n, seed).ticks;
}

TEST(Window, FirstFillEmitsOnce) {
  const auto ticks = trace_ticks(cache_db_graph(0.5), 100, 900);
  auto [w, out] = update_window(SlidingWindow{}, ticks);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].first_tick, 0);
  EXPECT_EQ(out[0].last_tick, 899);
}

TEST(Window, StrideWithHalfOverlap) {
  const auto ticks = trace_ticks(cache_db_graph(0.5), 100, 1350);
  auto [w, out] = update_window(SlidingWindow{}, ticks);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].first_tick, 450);
  EXPECT_EQ(out[1].last_tick, 1349);
}

TEST(Window, BatchSplitMatchesSingleBatch) {
  const auto ticks = trace_ticks(cache_db_graph(0.5), 100, 2000);
  auto [whole, expected] = update_window(SlidingWindow{}, ticks);
  SlidingWindow w;
  std::vector<WindowSummary> got;
  for (std::size_t from = 0; from < ticks.size(); from += 333) {
    const std::size_t to = std::min(ticks.size(), from + 333);
    auto [next, out] = update_window(std::move(w), std::span(ticks).subspan(from, to - from));
    w = std::move(next);
    got.insert(got.end(), out.begin(), out.end());
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(w, whole);
}

TEST(Window, MeansMatchLonghand) {
  const auto ticks = trace_ticks(cache_db_graph(0.8, 150), 180, 1400, 9, 0.3);
  auto [w, out] = update_window(SlidingWindow{}, ticks);
  ASSERT_EQ(out.size(), 2u);
  const WindowSummary& s = out[1];
  for (std::size_t c = 0; c < 3; ++c) {
    double offered = 0, util = 0, peak = 0, lat = 0, served = 0, fwd = 0;
    for (std::int64_t t = s.first_tick; t <= s.last_tick; ++t) {
      const auto& m = ticks[static_cast<std::size_t>(t)].components[c];
      offered += m.offered_rps;
      util += m.utilization;
      peak = std::max(peak, m.utilization);
      lat += m.latency_ms;
      served += m.served_rps;
      fwd += m.forwarded_rps;
    }
    const auto& o = s.components[c];
    EXPECT_NEAR(o.mean_offered_rps, offered / 900, 1e-9);
    EXPECT_NEAR(o.mean_utilization, util / 900, 1e-12);
    EXPECT_DOUBLE_EQ(o.max_utilization, peak);
    EXPECT_NEAR(o.mean_latency_ms, lat / 900, 1e-9);
    if (c == 1) {
      ASSERT_TRUE(o.alpha_estimate);
      EXPECT_NEAR(*o.alpha_estimate, served / fwd, 1e-9);
      EXPECT_NEAR(*o.alpha_estimate, 5.0, 1e-9);  // 1 / (1 - 0.8)
    } else {
      EXPECT_FALSE(o.alpha_estimate);
    }
  }
}

TEST(Window, SteadyStateCoverage) {
  // With 0.5 overlap every tick past the first window lands in exactly two summaries.
  const auto ticks = trace_ticks(cache_db_graph(0.5), 100, 4500);
  auto [w, out] = update_window(SlidingWindow{}, ticks);
  for (std::int64_t t = 900; t < 4050; ++t) {
    const auto n = std::count_if(out.begin(), out.end(),
                                 [&](const WindowSummary& s) { return s.first_tick <= t && t <= s.last_tick; });
    EXPECT_EQ(n, 2) << t;
  }
}

TEST(Window, NonContiguousBatch) {
  auto ticks = trace_ticks(cache_db_graph(0.5), 100, 20);
  auto [w, out] = update_window(SlidingWindow{}, std::span(ticks).first(10));
  try {
    update_window(w, std::span(ticks).subspan(11));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonContiguousBatch);
  }
}

TEST(Window, OnlineAmplificationUsesHitEstimate) {
  const auto topo = validate_topology(cache_db_graph(0.9));
  const auto ticks = trace_ticks(cache_db_graph(0.9), 100, 900);
  auto [w, out] = update_window(SlidingWindow{}, ticks);
  const AmplificationMap amap = online_amplification(topo, out.at(0));
  EXPECT_NEAR(amap.find("cache", "db")->alpha, 10.0, 1e-9);
  EXPECT_EQ(amap.find("cache", "db")->source, AmplificationSource::measured);
}

// Offline scan with the same recurrence: first index where the clamped sum exceeds lambda.
std::optional<std::size_t> offline_cusum(const std::vector<double>& xs, double mu0, double delta, double lambda) {
  double s = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    s = std::max(0.0, s + xs[k] - mu0 - delta);
    if (s > lambda) return k;
  }
  return std::nullopt;
}

TEST(Cusum, ConstantSeriesNeverFires) {
  auto s = make_detector(ChangeAlgorithm::cusum, 0.5, 10.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    auto [next, fired] = detect_change(s, 3.0);
    s = next;
    ASSERT_FALSE(fired);
  }
  EXPECT_EQ(s.statistic, 0.0);
}

TEST(Cusum, StepFiresWithinThreeSamples) {
  const double mu0 = 5.0, delta = 0.5, lambda = 20 * delta;
  std::vector<double> xs(50, mu0);
  xs.resize(80, mu0 + 10 * delta);
  auto s = make_detector(ChangeAlgorithm::cusum, delta, lambda, mu0);
  std::optional<std::size_t> first;
  for (std::size_t k = 0; k < xs.size() && !first; ++k) {
    auto [next, fired] = detect_change(s, xs[k]);
    s = next;
    if (fired) first = k;
  }
  ASSERT_TRUE(first);
  EXPECT_LT(*first - 50, 3u);
  EXPECT_EQ(first, offline_cusum(xs, mu0, delta, lambda));
  EXPECT_EQ(s.statistic, 0.0);
}

TEST(Cusum, OutlierBelowStaysZero) {
  auto s = make_detector(ChangeAlgorithm::cusum, 0.1, 5.0, 10.0);
  auto [next, fired] = detect_change(s, -100.0);
  EXPECT_FALSE(fired);
  EXPECT_EQ(next.statistic, 0.0);
}

TEST(Cusum, RandomSeriesMatchesOfflineScan) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs;
    for (int k = 0; k < 200; ++k) xs.push_back(noise(gen) + (k > 120 ? 1.5 : 0.0));
    auto s = make_detector(ChangeAlgorithm::cusum, 0.5, 8.0, 0.0);
    std::optional<std::size_t> first;
    for (std::size_t k = 0; k < xs.size() && !first; ++k) {
      auto [next, fired] = detect_change(s, xs[k]);
      s = next;
      if (fired) first = k;
    }
    EXPECT_EQ(first, offline_cusum(xs, 0.0, 0.5, 8.0));
  }
}

TEST(PageHinkley, DetectsUpwardShift) {
  auto s = make_detector(ChangeAlgorithm::page_hinkley, 0.1, 5.0);
  for (int k = 0; k < 200; ++k) {
    auto [next, fired] = detect_change(s, 1.0);
    s = next;
    ASSERT_FALSE(fired);
  }
  bool fired_any = false;
  for (int k = 0; k < 10 && !fired_any; ++k) {
    auto [next, fired] = detect_change(s, 3.0);
    s = next;
    fired_any = fired;
  }
  EXPECT_TRUE(fired_any);
  EXPECT_EQ(s.samples, 0);
}

TEST(Detector, RejectsBadParameters) {
  EXPECT_THROW(make_detector(ChangeAlgorithm::cusum, 0.1, 0.0), Error);
  auto s = make_detector(ChangeAlgorithm::cusum, 0.1, 1.0);
  EXPECT_THROW(detect_change(s, std::nan("")), Error);
}

TEST(Forecast, ConstantHistory) {
  std::vector<LriPoint> h;
  for (int t = 0; t < 20; ++t) h.push_back({t * 10, 7.5});
  for (const auto& p : forecast_lri(h, 30)) EXPECT_NEAR(p.lri, 7.5, 1e-12);
}

TEST(Forecast, ExactLineContinues) {
  std::vector<LriPoint> h;
  for (int t = 0; t < 200; ++t) h.push_back({t, 2.0 * t + 1.0});
  const auto f = forecast_lri(h, 5);
  ASSERT_EQ(f.size(), 5u);
  for (const auto& p : f) EXPECT_NEAR(p.lri, 2.0 * static_cast<double>(p.tick) + 1.0, 1e-6);
}

TEST(Forecast, NoisyRampWithinRegressionEnvelope) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> noise(0.0, 2.0);
  std::vector<LriPoint> h;
  for (int t = 0; t < 300; ++t) h.push_back({t, 0.5 * t + 10.0 + noise(gen)});

  // Independent raw least-squares fit and residual spread.
  double mt = 0, my = 0;
  for (const auto& p : h) {
    mt += static_cast<double>(p.tick);
    my += p.lri;
  }
  mt /= 300;
  my /= 300;
  double sxy = 0, sxx = 0;
  for (const auto& p : h) {
    sxy += (static_cast<double>(p.tick) - mt) * (p.lri - my);
    sxx += (static_cast<double>(p.tick) - mt) * (static_cast<double>(p.tick) - mt);
  }
  const double slope = sxy / sxx;
  double rss = 0;
  for (const auto& p : h) {
    const double r = p.lri - (my + slope * (static_cast<double>(p.tick) - mt));
    rss += r * r;
  }
  const double sd = std::sqrt(rss / 298);

  const auto f = forecast_lri(h, 20);
  EXPECT_GT(f.back().lri, f.front().lri);
  for (const auto& p : f) {
    const double fit = my + slope * (static_cast<double>(p.tick) - mt);
    EXPECT_NEAR(p.lri, fit, 3 * sd);
  }
}

TEST(Forecast, ClampedAtZero) {
  std::vector<LriPoint> h;
  for (int t = 0; t < 10; ++t) h.push_back({t, 10.0 - t});
  for (const auto& p : forecast_lri(h, 50)) EXPECT_GE(p.lri, 0.0);
}

TEST(Forecast, InsufficientHistory) {
  std::vector<LriPoint> h{{0, 1.0}};
  try {
    forecast_lri(h, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientHistory);
  }
}

TEST(Mitigate, PolicyTable) {
  MitigationState st;
  EXPECT_EQ(mitigate(RiskLevel::Low, st, {}).kind, MitigationKind::none);

  st.shadow_fraction = 0.05;
  const auto medium = mitigate(RiskLevel::Medium, st, {0.05, 0.1});
  EXPECT_EQ(medium.kind, MitigationKind::increase_shadow_traffic);
  EXPECT_NEAR(apply_mitigation(st, medium).shadow_fraction, 0.10, 1e-12);

  const auto high = mitigate(RiskLevel::High, st, {0.05, 0.2});
  EXPECT_EQ(high.kind, MitigationKind::degrade_performance);
  EXPECT_DOUBLE_EQ(high.shed_fraction, 0.2);
}

TEST(Mitigate, ShadowNeverExceedsCap) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> level(0, 2);
  std::uniform_real_distribution<double> step(0.0, 0.3);
  MitigationState st;
  for (int k = 0; k < 2000; ++k) {
    st = apply_mitigation(st, mitigate(static_cast<RiskLevel>(level(gen)), st, {step(gen), 0.1}));
    ASSERT_LE(st.shadow_fraction, kMaxShadowFraction);
    ASSERT_GE(st.shadow_fraction, 0.0);
  }
}

TEST(Mitigate, RollbackRestoresLowSnapshot) {
  // LRI = 0.75 alpha at the db: Low for small caches, High for large ones.
  TopologyGraph g = testing::apex_toy_graph(50.0);
  for (auto& c : g.components) c.mttr_minutes = 0.05;
  g.components[2].criticality = 5.0;
  const auto base = validate_topology(g);
  const std::vector<ConfigVariable> vars{{"cache", ConfigParameter::cache_size, 10, 2000, false}};
  auto level_of = [&](const ConfigurationVector& x) {
    const auto topo = configure(base, vars, x);
    return classify_risk(system_lri(topo, evaluation_amplification(topo, {.base_rps = 1000}, 1, 60)));
  };

  MitigationState st;
  const ConfigurationVector low{{20.0}}, high{{1500.0}};
  ASSERT_EQ(level_of(low), RiskLevel::Low);
  ASSERT_EQ(level_of(high), RiskLevel::High);
  st.snapshots.push_back({0, 100, {{800.0}}, RiskLevel::High, 50.0});
  st.snapshots.push_back({1, 200, low, RiskLevel::Low, 1.5});
  st.snapshots.push_back({2, 300, high, RiskLevel::High, 40.0});

  const auto a = mitigate(RiskLevel::High, st, {});
  ASSERT_EQ(a.kind, MitigationKind::rollback_configuration);
  ASSERT_EQ(a.snapshot_id, 1);
  const ConfigSnapshot& snap = find_snapshot(st, *a.snapshot_id);
  EXPECT_EQ(level_of(snap.config), snap.level);
}

TEST(Mitigate, ExplicitRollbackWithoutHistory) {
  try {
    request_rollback(MitigationState{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoSnapshotAvailable);
  }
}

TEST(Loop, InterpolationSteps) {
  const std::vector<ConfigVariable> vars{{"cache", ConfigParameter::cache_size, 0, 1000, false}};
  const auto steps = interpolation_steps(vars, {{100.0}}, {{200.0}}, 4);
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_EQ(steps[0].values[0], 125.0);
  EXPECT_EQ(steps[1].values[0], 150.0);
  EXPECT_EQ(steps[2].values[0], 175.0);
  EXPECT_EQ(steps[3].values[0], 200.0);
}

struct DriftSetup {
  ValidatedTopology topo = validate_topology(drift_graph());
  TrafficProfile traffic{.base_rps = 1000};
  std::vector<ConfigVariable> vars{{"cache", ConfigParameter::cache_size, 50, 800, false}};
  LoopPolicy policy;
  ApexConfig apex;

  DriftSetup() {
    policy.lri_trigger = 200;
    apex.generations = 5;
    apex.tau_risk = 200;
    apex.eval_duration_s = 30;
    apex.amplification_duration_s = 30;
    apex.resilience_reserve_fraction = 0.15;
  }
  OptimizationLog run(bool optimize, std::int64_t duration = 7200, std::uint64_t seed = 3) {
    LoopPolicy p = policy;
    p.optimize = optimize;
    return continuous_loop(topo, traffic, vars, p, apex, duration, seed);
  }
};

TEST(Loop, BelowTriggerNeverReconfigures) {
  DriftSetup d;
  d.policy.lri_trigger = 1e6;
  const auto log = d.run(true, 3600);
  EXPECT_EQ(log.records.size(), 7u);
  EXPECT_EQ(log.reconfigurations(), 0);
  for (const auto& r : log.records) EXPECT_EQ(r.outcome, Outcome::no_action);
}

TEST(Loop, DriftEndsLowerThanWithoutLoop) {
  DriftSetup d;
  const auto off = d.run(false);
  const auto on = d.run(true);
  ASSERT_EQ(off.records.size(), on.records.size());
  EXPECT_GT(on.reconfigurations(), 0);
  EXPECT_LT(*on.final_lri(), *off.final_lri());
}

TEST(Loop, GradualStepsInLog) {
  DriftSetup d;
  const auto log = d.run(true);
  const auto it = std::find_if(log.records.begin(), log.records.end(),
                               [](const LoopRecord& r) { return r.outcome == Outcome::reconfigured; });
  ASSERT_NE(it, log.records.end());
  ASSERT_EQ(it->steps.size(), 4u);
  const auto expected = interpolation_steps(d.vars, it->current_config, *it->chosen_config, 4);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(it->steps[k].config, expected[k]);
}

TEST(Loop, NeverAppliesUnsafeStepAndRespectsCooldown) {
  DriftSetup d;
  d.policy.cooldown_ticks = 900;
  d.apex.resilience_reserve_fraction = 0.0;
  // A tight latency limit makes most trial simulations fail.
  d.policy.safety.max_latency_ratio = 1.05;
  for (const auto& log : {d.run(true), DriftSetup{}.run(true)}) {
    std::optional<std::int64_t> last;
    for (const auto& r : log.records) {
      for (const auto& s : r.steps) {
        if (s.applied) {
          EXPECT_TRUE(s.verdict.passed);
        }
      }
      if (r.outcome == Outcome::reconfigured) {
        if (last) {
          EXPECT_GE(r.tick - *last, d.policy.cooldown_ticks);
        }
        last = r.tick;
      }
    }
  }
}

TEST(Loop, Deterministic) {
  DriftSetup d;
  EXPECT_EQ(d.run(true), d.run(true));
}

TEST(Loop, NoFeasibleSolutionIsLogged) {
  DriftSetup d;
  d.apex.tau_risk = 1.0;  // unreachable: alpha >= 1 alone gives LRI 25
  const auto log = d.run(true, 1800);
  ASSERT_FALSE(log.records.empty());
  EXPECT_EQ(log.records.front().outcome, Outcome::no_feasible_solution);
  EXPECT_EQ(log.reconfigurations(), 0);
}

TEST(Loop, MitigationsAdvisoryByDefault) {
  // LRI 3 / (1 - 0.5) = 6 sits in Medium, so the table asks for shadow traffic.
  const auto topo = validate_topology(cache_db_graph(0.5));
  LoopPolicy policy;
  policy.optimize = false;
  const auto advisory = continuous_loop(topo, {.base_rps = 100}, {}, policy, {}, 4500, 1);
  policy.apply_mitigations = true;
  const auto applied = continuous_loop(topo, {.base_rps = 100}, {}, policy, {}, 4500, 1);

  for (const auto& r : advisory.records) {
    EXPECT_EQ(r.mitigation.kind, MitigationKind::increase_shadow_traffic);
    EXPECT_NEAR(r.lri, 6.0, 1e-9);
  }
  // Warm fallback traffic lowers the measured multiplier.
  EXPECT_LT(applied.records.back().lri, advisory.records.back().lri - 0.5);
}

TEST(Loop, RejectsShortDuration) {
  DriftSetup d;
  EXPECT_THROW(d.run(true, 899), Error);
}

}  // namespace
}  // namespace lri
