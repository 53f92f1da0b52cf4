#include <gtest/gtest.h>

#include "aim/feedback.hpp"
#include "aim/rrset.hpp"
#include "oracles.hpp"

using namespace aim;

namespace {

ProbGraph chain3() { return ProbGraph::from_edges(3, {{0, 1, 0.5}, {1, 2, 0.5}}); }

PossibleWorld counterexample_world(const ProbGraph& g) {
  PossibleWorld w(g.hash(), 0, g.m());
  w.set_live(g.find_edge(0, 1), true);
  return w;
}

std::vector<int> known_from_status(const EdgeStatusMap& map) {
  std::vector<int> known(map.status.size());
  for (std::size_t e = 0; e < known.size(); ++e) {
    switch (map.status[e]) {
      case EdgeStatus::Unknown: known[e] = -1; break;
      case EdgeStatus::Live:
      case EdgeStatus::ArbitraryLive: known[e] = 1; break;
      case EdgeStatus::Dead:
      case EdgeStatus::ArbitraryDead: known[e] = 0; break;
    }
  }
  return known;
}

}  // namespace

TEST(Observe, CounterexampleAtTimeOne) {
  const ProbGraph g = chain3();
  const NetworkState s = observe(g, counterexample_world(g), {{0, {0}}}, 1);
  EXPECT_EQ(s.active_nodes(), (std::vector<NodeId>{0, 1}));
  EXPECT_FALSE(s.quiescent);
}

TEST(Observe, TimeZeroIsSeedSet) {
  const ProbGraph g = oracle::random_graph(8, 20, 1, 1.0, 1.0);
  const NetworkState s = observe(g, sample_world(g, 1), {{0, {2, 5}}}, 0);
  EXPECT_EQ(s.active_nodes(), (std::vector<NodeId>{2, 5}));
}

TEST(Observe, MatchesSimulator) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProbGraph g = oracle::random_graph(10, 20, seed);
    const PossibleWorld w = sample_world(g, seed);
    const SeedingSchedule sched{{0, {0}}, {2, {4}}};
    for (Step t = 0; t < 5; ++t) {
      SeedingSchedule so_far;
      for (const auto& iv : sched) {
        if (iv.time <= t) so_far.push_back(iv);
      }
      const DiffusionResult r = diffuse(g, w, so_far, Horizon::bounded(t + 1));
      std::vector<NodeId> expect;
      for (NodeId v = 0; v < g.n(); ++v) {
        if (r.activation_time[v] != kNever && static_cast<Step>(r.activation_time[v]) <= t) {
          expect.push_back(v);
        }
      }
      EXPECT_EQ(observe(g, w, sched, t).active_nodes(), expect);
    }
  }
}

TEST(InferEdges, RuleOneDead) {
  const ProbGraph g = chain3();
  NetworkState s = observe(g, counterexample_world(g), {{0, {0}}}, 5);
  const EdgeStatusMap m = infer_edges(g, s);
  EXPECT_EQ(m.status[g.find_edge(1, 2)], EdgeStatus::Dead);
  EXPECT_TRUE(m.sound);
}

TEST(InferEdges, RuleTwoLive) {
  const ProbGraph g = chain3();
  const NetworkState s = observe(g, counterexample_world(g), {{0, {0}}}, 5);
  EXPECT_EQ(infer_edges(g, s).status[g.find_edge(0, 1)], EdgeStatus::Live);
}

TEST(InferEdges, RuleThreeTieAndUnknown) {
  const ProbGraph g = ProbGraph::from_edges(4, {{0, 2, 1.0}, {1, 2, 1.0}, {3, 0, 0.5}});
  const NetworkState s = observe(g, sample_world(g, 0), {{0, {0, 1}}}, 3);
  const EdgeStatusMap live = infer_edges(g, s, TieRule::AllLive);
  const EdgeStatusMap dead = infer_edges(g, s, TieRule::AllDead);
  EXPECT_EQ(live.status[g.find_edge(0, 2)], EdgeStatus::ArbitraryLive);
  EXPECT_EQ(dead.status[g.find_edge(1, 2)], EdgeStatus::ArbitraryDead);
  EXPECT_EQ(live.status[g.find_edge(3, 0)], EdgeStatus::Unknown);
}

TEST(InferEdges, UnsoundBeforeQuiescence) {
  const ProbGraph g = chain3();
  const NetworkState s = observe(g, counterexample_world(g), {{0, {0}}}, 0);
  EXPECT_FALSE(infer_edges(g, s).sound);
}

TEST(InferEdges, GainsMatchEdgeLevelFeedback) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProbGraph g = oracle::random_graph(7, 12, 100 + seed);
    const PossibleWorld w = sample_world(g, seed);
    const NetworkState s = observe(g, w, {{0, {0, 1}}}, 50);
    ASSERT_TRUE(s.quiescent);
    std::vector<bool> active(g.n());
    std::vector<int> edge_level(g.m(), -1);
    for (NodeId v = 0; v < g.n(); ++v) active[v] = s.active[v] != 0;
    for (EdgeId e = 0; e < g.m(); ++e) {
      if (active[g.src(e)]) edge_level[e] = w.live(e) ? 1 : 0;
    }
    for (TieRule tie : {TieRule::AllLive, TieRule::AllDead, TieRule::EvenIndexLive}) {
      const auto node_level = known_from_status(infer_edges(g, s, tie));
      for (NodeId v = 0; v < g.n(); ++v) {
        if (active[v]) continue;
        EXPECT_EQ(oracle::conditional_gain(g, edge_level, active, v),
                  oracle::conditional_gain(g, node_level, active, v));
      }
    }
  }
}

TEST(MaskActive, EmptyAndFull) {
  const ProbGraph g = oracle::random_graph(6, 12, 4);
  const GraphView none = mask_active(g, std::vector<std::uint8_t>(g.n(), 0));
  EXPECT_FALSE(none.has_mask());
  for (EdgeId e = 0; e < g.m(); ++e) EXPECT_EQ(none.prob(e), g.prob(e));
  const GraphView all = mask_active(g, std::vector<std::uint8_t>(g.n(), 1));
  for (EdgeId e = 0; e < g.m(); ++e) EXPECT_EQ(all.prob(e), 0.0);
}

TEST(MaskActive, RRSetsAvoidActiveNodes) {
  const ProbGraph g = oracle::random_graph(30, 150, 6, 0.3, 0.9);
  const NetworkState s = observe(g, sample_world(g, 3), {{0, {0, 1, 2}}}, 2);
  const GraphView view = mask_active(g, s);
  Rng rng(5);
  RRSampler sampler(g.n());
  for (int i = 0; i < 10000; ++i) {
    for (NodeId v : sampler.sample(view, rng).members) ASSERT_FALSE(s.active[v]);
  }
}

TEST(MaskActive, SpreadOnMaskedGraphStopsAtActiveNodes) {
  const ProbGraph g = ProbGraph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  std::vector<std::uint8_t> active{0, 1, 0};
  const GraphView view = mask_active(g, active);
  EXPECT_EQ(view.prob(g.find_edge(0, 1)), 0.0);
  EXPECT_EQ(view.prob(g.find_edge(1, 2)), 0.0);
}
