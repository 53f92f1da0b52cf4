#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "aim/feedback.hpp"
#include "aim/policy.hpp"
#include "aim/rrset.hpp"
#include "oracles.hpp"

using namespace aim;

namespace {

IndexOptions pinned(std::size_t theta) {
  IndexOptions o;
  o.rr_count = theta;
  return o;
}

PolicySpec adaptive_spec(std::size_t k, std::size_t b, std::size_t theta = 2000) {
  PolicySpec s;
  s.kind = PolicyKind::Adaptive;
  s.budget = k;
  s.batch = b;
  s.index = pinned(theta);
  return s;
}

ProbGraph er_graph(std::size_t n, double density, std::uint64_t seed) {
  SyntheticParams params;
  params.n = n;
  params.density = density;
  return assign_weighted_cascade(generate_synthetic(SyntheticModel::ErdosRenyi, params, seed));
}

}  // namespace

TEST(ScheduleCursor, WorkedEncoding) {
  ScheduleCursor c({{2, 5}, {3, 7}}, 30, 10);
  std::vector<std::pair<Step, std::size_t>> got;
  std::size_t used = 0;
  while (auto next = c.next(used)) {
    got.emplace_back(next->time, next->seeds);
    used += next->seeds;
  }
  EXPECT_EQ(got, (std::vector<std::pair<Step, std::size_t>>{{0, 2}, {5, 3}, {12, 2}, {17, 3}}));
}

TEST(ScheduleCursor, RemainderGoesLast) {
  ScheduleCursor c({{4, 1}}, 100, 10);
  std::vector<std::size_t> sizes;
  std::size_t used = 0;
  while (auto next = c.next(used)) {
    sizes.push_back(next->seeds);
    used += next->seeds;
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 4, 2}));
}

TEST(GreedyNonAdaptive, AllNodes) {
  const ProbGraph g = oracle::random_graph(8, 14, 3);
  const auto seeds = greedy_non_adaptive(g, g.n(), pinned(500), 1);
  EXPECT_EQ(std::set<NodeId>(seeds.begin(), seeds.end()).size(), g.n());
  for (std::uint64_t s = 0; s < 5; ++s) {
    EXPECT_EQ(spread(g, sample_world(g, s), seeds, Horizon::unbounded()), g.n());
  }
}

TEST(GreedyNonAdaptive, StarHub) {
  std::vector<Edge> edges;
  for (NodeId leaf = 1; leaf < 8; ++leaf) edges.push_back({0, leaf, 1.0});
  const ProbGraph g = ProbGraph::from_edges(8, edges);
  EXPECT_EQ(greedy_non_adaptive(g, 1, pinned(500), 2), std::vector<NodeId>{0});
}

TEST(GreedyNonAdaptive, ApproximationAgainstExhaustive) {
  const double eps = 0.1;
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const ProbGraph g = oracle::random_graph(8, 12, 200 + seed);
    const auto spreads = oracle::all_subset_spreads(g);
    for (std::size_t k = 1; k <= 3; ++k) {
      double opt = 0.0;
      for (std::size_t s = 0; s < spreads.size(); ++s) {
        if (static_cast<std::size_t>(std::popcount(s)) == k) opt = std::max(opt, spreads[s]);
      }
      IndexOptions opts;
      opts.epsilon = eps;
      const auto seeds = greedy_non_adaptive(g, k, opts, seed);
      std::size_t mask = 0;
      for (NodeId v : seeds) mask |= std::size_t{1} << v;
      EXPECT_GE(spreads[mask], (1 - 1 / std::exp(1.0) - eps) * opt) << "seed " << seed << " k " << k;
    }
  }
}

TEST(RunAdaptive, NoLiveEdges) {
  const ProbGraph g = oracle::random_graph(10, 30, 1);
  const PossibleWorld w(g.hash(), 0, g.m());
  const PolicyTrace t = run_adaptive(g, adaptive_spec(3, 1), w, 5);
  ASSERT_EQ(t.interventions.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(t.interventions[i].active_before, i);
  EXPECT_EQ(t.final_active, 3U);
  EXPECT_EQ(t.stop, StopReason::Budget);
}

TEST(RunAdaptive, FullBatchEqualsNonAdaptive) {
  const ProbGraph g = er_graph(200, 0.03, 4);
  const PossibleWorld w = sample_world(g, 9);
  const PolicySpec spec = adaptive_spec(5, 5);
  const PolicyTrace t = run_adaptive(g, spec, w, 77);
  ASSERT_EQ(t.interventions.size(), 1U);
  const auto fixed = greedy_non_adaptive(g, 5, spec.index, 77);
  EXPECT_EQ(t.interventions[0].nodes, fixed);
  EXPECT_EQ(t.final_active, spread(g, w, fixed, Horizon::unbounded()));
}

TEST(RunAdaptive, NeverReseedsOrSeedsActive) {
  const ProbGraph g = er_graph(150, 0.03, 5);
  for (const RegenPolicy regen : {RegenPolicy::full(), RegenPolicy::lazy(10)}) {
    PolicySpec spec = adaptive_spec(12, 2, 1000);
    spec.regen = regen;
    const PossibleWorld w = sample_world(g, 3);
    const PolicyTrace t = run_adaptive(g, spec, w, 8);
    std::set<NodeId> seen;
    Diffusion d(g, w);
    for (const InterventionRecord& iv : t.interventions) {
      d.run_to_quiescence();
      for (NodeId v : iv.nodes) {
        EXPECT_TRUE(seen.insert(v).second);
        EXPECT_FALSE(d.is_active(v));
      }
      d.seed(iv.nodes);
    }
    EXPECT_EQ(t.seeds_used, 12U);
  }
}

TEST(RunAdaptive, BoundedHorizonRespectsSchedule) {
  const ProbGraph g = er_graph(100, 0.04, 6);
  PolicySpec spec = adaptive_spec(10, 2);
  spec.horizon = Horizon::bounded(30);
  spec.schedule = InterventionSchedule{{2, 5}, {3, 7}};
  const PolicyTrace t = run_adaptive(g, spec, sample_world(g, 1), 3);
  std::vector<Step> times;
  std::vector<std::size_t> sizes;
  for (const auto& iv : t.interventions) {
    times.push_back(iv.time);
    sizes.push_back(iv.nodes.size());
  }
  EXPECT_EQ(times, (std::vector<Step>{0, 5, 12, 17}));
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 3, 2, 3}));
}

TEST(RunAdaptive, ShortHorizonSingleIntervention) {
  const ProbGraph g = er_graph(100, 0.04, 6);
  PolicySpec spec = adaptive_spec(10, 2);
  spec.horizon = Horizon::bounded(3);
  spec.schedule = InterventionSchedule{{2, 5}};
  const PolicyTrace t = run_adaptive(g, spec, sample_world(g, 1), 3);
  EXPECT_EQ(t.interventions.size(), 1U);
  EXPECT_EQ(t.stop, StopReason::Horizon);
}

TEST(RunAdaptive, FullRegenIndexAvoidsActiveNodes) {
  // With full regeneration every pick comes from an index built on the masked
  // view, so no seed is ever active at selection time (checked above); here
  // the masked view itself is checked directly.
  const ProbGraph g = er_graph(80, 0.05, 2);
  const PossibleWorld w = sample_world(g, 2);
  Diffusion d(g, w);
  const std::vector<NodeId> first{0, 1, 2};
  d.seed(first);
  d.run_to_quiescence();
  const RRIndex idx = build_index(mask_active(g, d.active_mask()), 2000, 4);
  for (std::size_t s = 0; s < idx.size(); ++s) {
    for (NodeId v : idx.members(s)) EXPECT_FALSE(d.is_active(v));
  }
}

TEST(Evaluate, NonAdaptiveMatchesMonteCarlo) {
  const ProbGraph g = er_graph(120, 0.03, 8);
  PolicySpec spec = adaptive_spec(5, 5);
  spec.kind = PolicyKind::NonAdaptive;
  const EvalReport r = evaluate(g, spec, 50, 123);
  const SpreadEstimate mc = expected_spread_mc(g, r.fixed_seeds, spec.horizon, 50, 123);
  EXPECT_EQ(r.f_avg, mc.mean);
  EXPECT_EQ(r.per_world, mc.per_world);
}

TEST(Evaluate, AdaptiveNotWorseAndBatchMonotone) {
  const ProbGraph g = er_graph(300, 0.015, 9);
  PolicySpec na = adaptive_spec(10, 10);
  na.kind = PolicyKind::NonAdaptive;
  const EvalReport base = evaluate(g, na, 40, 7);
  const EvalReport ga = evaluate(g, adaptive_spec(10, 1), 40, 7);
  const EvalReport gk = evaluate(g, adaptive_spec(10, 10), 40, 7);
  EXPECT_GE(ga.f_avg, base.f_avg - 3 * ga.std_error);
  EXPECT_GE(ga.f_avg, gk.f_avg - 3 * ga.std_error);
  const GainEstimate gain = adaptivity_gain(ga, base);
  EXPECT_NEAR(gain.gain, ga.f_avg / base.f_avg, 1e-12);
  EXPECT_GT(gain.std_error, 0.0);
}

TEST(Evaluate, DeterministicAcrossRuns) {
  const ProbGraph g = er_graph(100, 0.03, 1);
  PolicySpec spec = adaptive_spec(4, 1, 1000);
  spec.regen = RegenPolicy::lazy(5);
  const EvalReport a = evaluate(g, spec, 10, 5);
  const EvalReport b = evaluate(g, spec, 10, 5);
  EXPECT_EQ(a.per_world, b.per_world);
  EXPECT_EQ(a.rr_regens_avg, b.rr_regens_avg);
}

TEST(Evaluate, CsvRowSchema) {
  const ProbGraph g = er_graph(50, 0.05, 1);
  const PolicySpec spec = adaptive_spec(2, 1, 500);
  const EvalReport r = evaluate(g, spec, 3, 5);
  const std::string row = eval_csv_row("er", spec, r);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 9);
  EXPECT_EQ(row.rfind("er,2,1,full,0.1,", 0), 0U);
  std::ostringstream trace;
  write_trace_jsonl(trace, r.traces[0], 0);
  EXPECT_NE(trace.str().find("\"interventions\""), std::string::npos);
}

TEST(PolicySpec, Validation) {
  PolicySpec s = adaptive_spec(3, 4);
  EXPECT_THROW(s.validate(10), std::invalid_argument);
  s = adaptive_spec(11, 1);
  EXPECT_THROW(s.validate(10), std::invalid_argument);
  s = adaptive_spec(3, 1);
  s.horizon = Horizon::bounded(0);
  EXPECT_THROW(s.validate(10), std::invalid_argument);
}
