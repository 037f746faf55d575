#include <gtest/gtest.h>

#include <set>

#include "speakeasy/benchgen.hpp"
#include "speakeasy/consensus.hpp"
#include "test_helpers.hpp"

using namespace speakeasy;
using namespace testing_support;

namespace {

BenchmarkSpec paper_spec(std::uint64_t seed) {
  BenchmarkSpec s;
  s.n = 1000;
  s.avg_degree = 15;
  s.max_degree = 50;
  s.gamma_degree = 2;
  s.beta_community = 1;
  s.mu = 0.1;
  s.seed = seed;
  return s;
}

std::vector<Edge> edges_of(const Graph& g) { return {g.edges().begin(), g.edges().end()}; }

Partition primary(const Cover& c) {
  std::vector<CommunityId> l(c.num_nodes());
  for (NodeId v = 0; v < c.num_nodes(); ++v) l[v] = c[v][0];
  return Partition::from_labels(l);
}

void check_structure(const BenchmarkSpec& spec, const Benchmark& b) {
  const auto& g = b.graph;
  ASSERT_EQ(g.num_nodes(), spec.n);
  ASSERT_EQ(b.truth.num_nodes(), spec.n);
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& e : g.edges()) {
    ASSERT_NE(e.src, e.dst);
    ASSERT_TRUE(seen.insert(std::minmax(e.src, e.dst)).second);
    ASSERT_EQ(e.weight, 1.0);
  }
  std::size_t multi = 0;
  for (NodeId v = 0; v < spec.n; ++v) {
    const auto m = b.truth[v].size();
    ASSERT_TRUE(m == 1 || m == static_cast<std::size_t>(spec.om));
    multi += m > 1;
    ASSERT_LE(g.in_degree(v), static_cast<std::size_t>(spec.max_degree));
  }
  EXPECT_EQ(multi, spec.num_overlapping());
  for (const auto& members : b.truth.communities()) {
    ASSERT_GE(members.size(), static_cast<std::size_t>(spec.min_community_size));
    ASSERT_LE(members.size(), static_cast<std::size_t>(spec.max_community_size));
  }
  EXPECT_EQ(b.stats.num_communities, b.truth.num_communities());
  EXPECT_DOUBLE_EQ(b.stats.realized_mu, realized_mixing(g, b.truth));
}

}  // namespace

TEST(PowerLaw, MeanAndCutoff) {
  EXPECT_NEAR(detail::power_law_mean(0.0, 2.0, 4.0), 3.0, 1e-12);
  const double kmin = detail::solve_min_degree(2.0, 15.0, 50.0);
  EXPECT_NEAR(detail::power_law_mean(2.0, kmin, 50.0), 15.0, 1e-9);
  EXPECT_THROW(detail::solve_min_degree(2.0, 1.5, 50.0), InfeasibleSpec);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = detail::sample_power_law(2.5, 3.0, 40.0, rng);
    ASSERT_GE(x, 3.0);
    ASSERT_LT(x, 40.0);
  }
}

TEST(RealizedMixing, Extremes) {
  auto g = cliques({4});
  EXPECT_DOUBLE_EQ(realized_mixing(g, to_cover({{0}, {0}, {0}, {0}})), 0.0);
  Graph bip(4, {{0, 2, 1.0}, {0, 3, 1.0}, {1, 2, 1.0}, {1, 3, 1.0}});
  EXPECT_DOUBLE_EQ(realized_mixing(bip, to_cover({{0}, {0}, {1}, {1}})), 1.0);
  // Sharing any community makes an edge internal.
  Graph one(2, {{0, 1, 1.0}});
  EXPECT_DOUBLE_EQ(realized_mixing(one, to_cover({{0, 1}, {1}})), 0.0);
  EXPECT_THROW(realized_mixing(one, to_cover({{0}})), Error);
}

TEST(Generate, ZeroMixingHasNoExternalEdges) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto spec = paper_spec(seed);
    spec.mu = 0.0;
    auto b = generate(spec);
    check_structure(spec, b);
    EXPECT_EQ(b.stats.realized_mu, 0.0);
  }
}

TEST(Generate, PaperRegimeHitsTargets) {
  for (double mu : {0.1, 0.3, 0.5}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto spec = paper_spec(seed);
      spec.mu = mu;
      auto b = generate(spec);
      check_structure(spec, b);
      EXPECT_NEAR(b.stats.realized_mu, mu, 0.02) << "mu=" << mu << " seed=" << seed;
      EXPECT_NEAR(b.stats.mean_degree, 15.0, 1.5) << "mu=" << mu << " seed=" << seed;
    }
  }
}

TEST(Generate, OverlappingNodesGetOmMemberships) {
  auto spec = paper_spec(3);
  spec.overlap_fraction = 0.1;
  spec.om = 3;
  auto b = generate(spec);
  check_structure(spec, b);
  std::size_t triple = 0;
  for (NodeId v = 0; v < spec.n; ++v) triple += b.truth[v].size() == 3;
  EXPECT_EQ(triple, 100u);
  EXPECT_NEAR(b.stats.realized_mu, 0.1, 0.02);
}

TEST(Generate, OverlapIgnoredWhenOmIsOne) {
  auto spec = paper_spec(4);
  spec.overlap_fraction = 0.1;
  spec.om = 1;
  auto b = generate(spec);
  EXPECT_TRUE(b.truth.is_disjoint());
}

TEST(Generate, CustomSizeBounds) {
  auto spec = paper_spec(5);
  spec.n = 500;
  spec.min_community_size = 20;
  spec.max_community_size = 50;
  spec.avg_degree = 10;
  spec.max_degree = 19;
  spec.mu = 0.2;
  auto b = generate(spec);
  check_structure(spec, b);
}

TEST(Generate, Deterministic) {
  auto spec = paper_spec(11);
  spec.overlap_fraction = 0.05;
  spec.om = 2;
  auto a = generate(spec), b = generate(spec);
  EXPECT_EQ(edges_of(a.graph), edges_of(b.graph));
  EXPECT_EQ(a.truth, b.truth);
  spec.seed = 12;
  EXPECT_NE(edges_of(generate(spec).graph), edges_of(a.graph));
}

TEST(Generate, InfeasibleSpecs) {
  auto spec = paper_spec(0);
  spec.max_degree = 1000;
  EXPECT_THROW(generate(spec), InfeasibleSpec);
  spec = paper_spec(0);
  spec.mu = 1.5;
  EXPECT_THROW(generate(spec), InfeasibleSpec);
  spec = paper_spec(0);
  spec.min_community_size = 50;
  spec.max_community_size = 20;
  EXPECT_THROW(generate(spec), InfeasibleSpec);
  spec = paper_spec(0);
  spec.om = 0;
  EXPECT_THROW(generate(spec), InfeasibleSpec);

  // Communities of at most 12 nodes cannot host internal degrees near 40.
  spec = paper_spec(0);
  spec.n = 200;
  spec.avg_degree = 40;
  spec.max_degree = 60;
  spec.min_community_size = 10;
  spec.max_community_size = 12;
  spec.mu = 0.0;
  try {
    generate(spec);
    FAIL() << "expected InfeasibleSpec";
  } catch (const InfeasibleSpec& e) {
    EXPECT_NE(std::string(e.what()).find("internal degree"), std::string::npos) << e.what();
  }
}

TEST(Generate, ZeroMixingIsRecoveredExactly) {
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto spec = paper_spec(100 + seed);
    spec.mu = 0.0;
    auto b = generate(spec);
    EngineParams p;
    p.seed = seed;
    exact += nmi(consensus_partition(b.graph, p, 5), primary(b.truth)) > 1.0 - 1e-12;
  }
  EXPECT_GE(exact, 10 * 95 / 100);
}
