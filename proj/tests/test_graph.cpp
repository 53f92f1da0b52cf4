#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "aim/graph.hpp"
#include "aim/random.hpp"
#include "oracles.hpp"

using namespace aim;

namespace {

ProbGraph parse(const std::string& text, IdMode mode = IdMode::Dense) {
  std::istringstream in(text);
  return load_edge_list(in, mode).graph;
}

std::size_t longest_path_dfs(const ProbGraph& g) {
  std::function<std::size_t(NodeId)> from = [&](NodeId u) -> std::size_t {
    std::size_t best = 0;
    for (EdgeId e = g.out_begin(u); e < g.out_end(u); ++e) best = std::max(best, 1 + from(g.dst(e)));
    return best;
  };
  std::size_t best = 0;
  for (NodeId u = 0; u < g.n(); ++u) best = std::max(best, from(u));
  return best;
}

ProbGraph random_dag(std::size_t n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.bernoulli(density)) edges.push_back({u, v, 0.5});
    }
  }
  return ProbGraph::from_edges(n, edges);
}

}  // namespace

TEST(LoadEdgeList, ParsesTwoEdges) {
  const ProbGraph g = parse("0 1 0.5\n1 2 0.5");
  EXPECT_EQ(g.n(), 3U);
  EXPECT_EQ(g.m(), 2U);
  EXPECT_DOUBLE_EQ(g.prob(g.find_edge(0, 1)), 0.5);
  EXPECT_TRUE(g.check_integrity());
}

TEST(LoadEdgeList, RejectsSelfLoop) {
  EXPECT_THROW(parse("0 0 0.5"), GraphError);
}

TEST(LoadEdgeList, ReportsDuplicateLine) {
  try {
    parse("# header\n0 1 0.5\n1 2 0.5\n0 1 0.25\n");
    FAIL() << "duplicate accepted";
  } catch (const GraphError& e) {
    EXPECT_EQ(e.line(), 4U);
  }
}

TEST(LoadEdgeList, RejectsMalformedLines) {
  EXPECT_THROW(parse("0 1 1.5"), GraphError);
  EXPECT_THROW(parse("0 x 0.5"), GraphError);
  EXPECT_THROW(parse("0"), GraphError);
  EXPECT_THROW(parse("0 1 0.5 7"), GraphError);
}

TEST(LoadEdgeList, MissingProbabilityIsFlagged) {
  const ProbGraph g = parse("0 1\n1 2 0.3\n");
  EXPECT_EQ(g.unassigned_count(), 1U);
  EXPECT_TRUE(g.unassigned(g.find_edge(0, 1)));
  EXPECT_EQ(assign_weighted_cascade(g).unassigned_count(), 0U);
}

TEST(LoadEdgeList, LabelModeRemapsInFirstAppearanceOrder) {
  std::istringstream in("alice bob 0.5\nbob carol 0.25\n");
  const LoadedGraph lg = load_edge_list(in, IdMode::Labels);
  ASSERT_EQ(lg.labels.size(), 3U);
  EXPECT_EQ(lg.labels[0], "alice");
  EXPECT_EQ(lg.labels[2], "carol");
  EXPECT_DOUBLE_EQ(lg.graph.prob(lg.graph.find_edge(1, 2)), 0.25);
  std::ostringstream map;
  write_label_map(map, lg.labels);
  EXPECT_EQ(map.str(), "alice\t0\nbob\t1\ncarol\t2\n");
}

TEST(LoadEdgeList, WriteThenReadIsIdentity) {
  SyntheticParams params;
  params.n = 300;
  params.density = 0.02;
  const ProbGraph g = assign_weighted_cascade(generate_synthetic(SyntheticModel::ErdosRenyi, params, 5));
  std::stringstream buf;
  write_edge_list(buf, g);
  const ProbGraph back = load_edge_list(buf).graph;
  EXPECT_EQ(back.edges(), g.edges());
  EXPECT_EQ(back.hash(), g.hash());
}

TEST(LoadEdgeList, LargeFileRoundTrip) {
  SyntheticParams params;
  params.n = 2500;
  params.density = 0.01;
  const ProbGraph g = generate_synthetic(SyntheticModel::ErdosRenyi, params, 11);
  ASSERT_GT(g.m(), 60000U);
  std::stringstream buf;
  write_edge_list(buf, g);
  EXPECT_EQ(load_edge_list(buf).graph.hash(), g.hash());
}

TEST(WeightedCascade, ReciprocalOfInDegree) {
  const ProbGraph g = ProbGraph::from_edges(
      6, {{0, 4, 0.1}, {1, 4, 0.1}, {2, 4, 0.1}, {3, 4, 0.1}, {4, 5, 0.9}});
  const ProbGraph wc = assign_weighted_cascade(g);
  for (EdgeId e : wc.in_edges(4)) EXPECT_DOUBLE_EQ(wc.prob(e), 0.25);
  EXPECT_DOUBLE_EQ(wc.prob(wc.find_edge(4, 5)), 1.0);
}

TEST(WeightedCascade, InEdgeSumsAreOneAndIdempotent) {
  const ProbGraph g = assign_weighted_cascade(oracle::random_graph(40, 300, 3));
  for (NodeId v = 0; v < g.n(); ++v) {
    if (g.in_degree(v) == 0) continue;
    double sum = 0.0;
    for (EdgeId e : g.in_edges(v)) sum += g.prob(e);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_EQ(assign_weighted_cascade(g).hash(), g.hash());
}

TEST(Synthetic, LayeredDagShape) {
  SyntheticParams params;
  params.layers = 3;
  params.width = 2;
  params.p = 1.0;
  const ProbGraph g = generate_synthetic(SyntheticModel::LayeredDag, params, 7);
  EXPECT_EQ(g.n(), 6U);
  for (EdgeId e = 0; e < g.m(); ++e) {
    EXPECT_EQ(g.dst(e) / 2, g.src(e) / 2 + 1);
    EXPECT_DOUBLE_EQ(g.prob(e), 1.0);
  }
}

TEST(Synthetic, ErdosRenyiIsDeterministic) {
  SyntheticParams params;
  params.n = 100;
  params.density = 0.05;
  EXPECT_EQ(generate_synthetic(SyntheticModel::ErdosRenyi, params, 1).edges(),
            generate_synthetic(SyntheticModel::ErdosRenyi, params, 1).edges());
}

TEST(Synthetic, ErdosRenyiEdgeCountNearExpectation) {
  SyntheticParams params;
  params.n = 1000;
  params.density = 0.01;
  const double m = static_cast<double>(generate_synthetic(SyntheticModel::ErdosRenyi, params, 3).m());
  EXPECT_NEAR(m, 0.01 * 1000 * 999, 0.05 * 0.01 * 1000 * 999);
}

TEST(Synthetic, SmallWorldOutDegree) {
  SyntheticParams params;
  params.n = 50;
  params.neighbors = 4;
  params.rewire = 0.0;
  const ProbGraph g = generate_synthetic(SyntheticModel::SmallWorld, params, 2);
  for (NodeId u = 0; u < g.n(); ++u) EXPECT_EQ(g.out_degree(u), 4U);
  EXPECT_EQ(parse_synthetic_model("ws"), SyntheticModel::SmallWorld);
  EXPECT_THROW(parse_synthetic_model("bogus"), std::invalid_argument);
}

TEST(DepthBound, PathIsExact) {
  const ProbGraph g = ProbGraph::from_edges(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}});
  const GraphStats s = depth_bound(g);
  EXPECT_EQ(s.diffusion_depth_bound, 3U);
  EXPECT_TRUE(s.exact);
}

TEST(DepthBound, CycleFallsBackToNMinusOne) {
  const ProbGraph g = ProbGraph::from_edges(3, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const GraphStats s = depth_bound(g);
  EXPECT_EQ(s.diffusion_depth_bound, 2U);
  EXPECT_FALSE(s.exact);
}

TEST(DepthBound, MatchesLongestPathOracleOnRandomDags) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 5 + seed % 16;
    const ProbGraph g = random_dag(n, 0.3, seed);
    const GraphStats s = depth_bound(g);
    EXPECT_TRUE(s.exact);
    EXPECT_EQ(s.diffusion_depth_bound, longest_path_dfs(g)) << "seed " << seed;
  }
}

TEST(GraphView, MaskZeroesIncidentEdges) {
  const ProbGraph g = ProbGraph::from_edges(3, {{0, 1, 0.5}, {1, 2, 0.5}, {0, 2, 0.5}});
  const GraphView view(g, {0, 1, 0});
  EXPECT_EQ(view.prob(g.find_edge(0, 1)), 0.0);
  EXPECT_EQ(view.prob(g.find_edge(1, 2)), 0.0);
  EXPECT_EQ(view.prob(g.find_edge(0, 2)), 0.5);
  EXPECT_EQ(view.effective_m(), 1U);
}

TEST(ProbGraph, HashTracksProbabilities) {
  const ProbGraph g = ProbGraph::from_edges(2, {{0, 1, 0.5}});
  EXPECT_NE(g.hash(), g.with_probabilities({0.25}).hash());
  EXPECT_THROW(ProbGraph::from_edges(2, {{0, 2, 0.5}}), GraphError);
}
