#include <gtest/gtest.h>

#include <sstream>

#include "aim/parallel.hpp"
#include "aim/world.hpp"
#include "oracles.hpp"

using namespace aim;

namespace {

PossibleWorld world_from_bits(const ProbGraph& g, std::uint64_t bits) {
  PossibleWorld w(g.hash(), bits, g.m());
  for (EdgeId e = 0; e < g.m(); ++e) w.set_live(e, oracle::bit(bits, e));
  return w;
}

ProbGraph chain3(double p1, double p2) { return ProbGraph::from_edges(3, {{0, 1, p1}, {1, 2, p2}}); }

}  // namespace

TEST(SampleWorld, CertainEdges) {
  const ProbGraph all = ProbGraph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
  EXPECT_EQ(sample_world(all, 4).live_count(), 3U);
  const ProbGraph none = all.with_probabilities({0.0, 0.0, 0.0});
  EXPECT_EQ(sample_world(none, 4).live_count(), 0U);
}

TEST(SampleWorld, LiveFrequency) {
  const ProbGraph g = ProbGraph::from_edges(2, {{0, 1, 0.3}});
  int live = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) live += sample_world(g, world_seed(1, s)).live(0) ? 1 : 0;
  EXPECT_NEAR(live / 10000.0, 0.3, 0.02);
}

TEST(SampleWorld, PersistenceRoundTrip) {
  const ProbGraph g = oracle::random_graph(20, 100, 9);
  PossibleWorld w = sample_world(g, 77);
  w.set_graph_hash(g.hash());
  std::stringstream buf;
  save_world(buf, w);
  EXPECT_EQ(load_world(buf), w);
  std::istringstream junk("nope");
  EXPECT_THROW(load_world(junk), std::runtime_error);
}

TEST(Diffuse, PathHopCounting) {
  const ProbGraph g = chain3(1.0, 1.0);
  const PossibleWorld w = sample_world(g, 0);
  EXPECT_EQ(diffuse(g, w, {{0, {0}}}, Horizon::bounded(2)).active, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(diffuse(g, w, {{0, {0}}}, Horizon::bounded(1)).active, (std::vector<NodeId>{0, 1}));
  const DiffusionResult r = diffuse(g, w, {{0, {0}}}, Horizon::unbounded());
  EXPECT_EQ(r.activation_time[2], 2);
  EXPECT_EQ(r.steps_run, 2U);
}

TEST(Diffuse, EmptySchedule) {
  const ProbGraph g = chain3(1.0, 1.0);
  EXPECT_TRUE(diffuse(g, sample_world(g, 0), {}, Horizon::unbounded()).active.empty());
}

TEST(Diffuse, LateSeedTransmitsNextStep) {
  const ProbGraph g = chain3(1.0, 1.0);
  const DiffusionResult r =
      diffuse(g, sample_world(g, 0), {{0, {0}}, {1, {2}}}, Horizon::bounded(3));
  EXPECT_EQ(r.activation_time[2], 1);
  EXPECT_THROW(diffuse(g, sample_world(g, 0), {{3, {2}}}, Horizon::bounded(3)), std::invalid_argument);
}

TEST(Diffuse, MatchesMatrixPowerOracle) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ProbGraph g = oracle::random_graph(8 + seed % 5, 12, seed);
    const PossibleWorld w = sample_world(g, seed * 31);
    std::vector<bool> live(g.m());
    for (EdgeId e = 0; e < g.m(); ++e) live[e] = w.live(e);
    std::vector<bool> start(g.n(), false);
    start[0] = start[3] = true;
    for (Step T : {1U, 2U, 3U, 20U}) {
      const auto expect = oracle::reach(g, live, start, T);
      const DiffusionResult r = diffuse(g, w, {{0, {0, 3}}}, Horizon::bounded(T));
      std::vector<bool> got(g.n(), false);
      for (NodeId v : r.active) got[v] = true;
      EXPECT_EQ(got, expect) << "seed " << seed << " T " << T;
    }
  }
}

TEST(Spread, CounterexampleWorld) {
  const ProbGraph g = chain3(0.5, 0.5);
  PossibleWorld w(g.hash(), 0, g.m());
  w.set_live(g.find_edge(0, 1), true);
  const std::vector<NodeId> seeds{0};
  EXPECT_EQ(spread(g, w, seeds, Horizon::unbounded()), 2U);
  const std::vector<NodeId> everyone{0, 1, 2};
  EXPECT_EQ(spread(g, w, everyone, Horizon::unbounded()), 3U);
}

TEST(Spread, MonotoneInSeedsAndHorizon) {
  const ProbGraph g = oracle::random_graph(12, 30, 5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PossibleWorld w = sample_world(g, s);
    std::vector<NodeId> seeds;
    std::size_t prev = 0;
    for (NodeId v = 0; v < g.n(); v += 3) {
      seeds.push_back(v);
      std::size_t prev_t = 0;
      for (Step T = 1; T < 6; ++T) {
        const std::size_t now = spread(g, w, seeds, Horizon::bounded(T));
        EXPECT_GE(now, prev_t);
        prev_t = now;
      }
      const std::size_t full = spread(g, w, seeds, Horizon::unbounded());
      EXPECT_GE(full, prev);
      prev = full;
    }
  }
}

TEST(Spread, QuiescenceWithinDepthBound) {
  const ProbGraph g = oracle::random_graph(10, 25, 8, 0.5, 1.0);
  const std::size_t D = depth_bound(g).diffusion_depth_bound;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const DiffusionResult r = diffuse(g, sample_world(g, s), {{0, {0}}}, Horizon::unbounded());
    EXPECT_LE(r.steps_run, D);
  }
}

TEST(ExpectedSpread, TwoNodes) {
  const ProbGraph g = ProbGraph::from_edges(2, {{0, 1, 0.5}});
  const std::vector<NodeId> seeds{0};
  const SpreadEstimate est = expected_spread_mc(g, seeds, Horizon::unbounded(), 10000, 3);
  EXPECT_NEAR(est.mean, 1.5, 0.02);
}

TEST(ExpectedSpread, DeterministicChain) {
  const ProbGraph g = chain3(1.0, 1.0);
  const std::vector<NodeId> seeds{0};
  for (std::size_t worlds : {1U, 7U, 100U}) {
    EXPECT_EQ(expected_spread_mc(g, seeds, Horizon::unbounded(), worlds, 1).mean, 3.0);
  }
}

TEST(ExpectedSpread, ClosedFormPath) {
  const double p1 = 0.7;
  const double p2 = 0.4;
  const ProbGraph g = chain3(p1, p2);
  const std::vector<NodeId> seeds{0};
  const SpreadEstimate est = expected_spread_mc(g, seeds, Horizon::unbounded(), 20000, 9);
  EXPECT_NEAR(est.mean, 1 + p1 + p1 * p2, 3 * est.std_error);
}

TEST(ExpectedSpread, MatchesEnumeration) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ProbGraph g = oracle::random_graph(7, 10, seed);
    const std::vector<NodeId> seeds{0, 1};
    const double exact = oracle::exact_spread(g, seeds);
    const SpreadEstimate est = expected_spread_mc(g, seeds, Horizon::unbounded(), 20000, seed);
    EXPECT_NEAR(est.mean, exact, 3 * est.std_error + 1e-12);
  }
}

TEST(ExpectedSpread, IndependentOfWorkerCount) {
  const ProbGraph g = oracle::random_graph(30, 120, 2);
  const std::vector<NodeId> seeds{1, 2, 3};
  set_worker_count(1);
  const SpreadEstimate a = expected_spread_mc(g, seeds, Horizon::bounded(3), 500, 4);
  set_worker_count(4);
  const SpreadEstimate b = expected_spread_mc(g, seeds, Horizon::bounded(3), 500, 4);
  set_worker_count(0);
  EXPECT_EQ(a.per_world, b.per_world);
}

TEST(Diffusion, SeedingActiveNodeIsNoOp) {
  const ProbGraph g = chain3(1.0, 1.0);
  const PossibleWorld w = world_from_bits(g, 3);
  Diffusion d(g, w);
  const std::vector<NodeId> first{0};
  EXPECT_EQ(d.seed(first), 1U);
  d.step();
  const std::vector<NodeId> again{0, 1};
  EXPECT_EQ(d.seed(again), 0U);
  EXPECT_EQ(d.active_count(), 2U);
}
