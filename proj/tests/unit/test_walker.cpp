#include <gtest/gtest.h>

#include "bhin/error.hpp"
#include "bhin/walker.hpp"
#include "test_support.hpp"

using namespace bhin;
using bhin::testing::make_graph;

namespace {

MetaNetwork meta_of(std::vector<std::vector<bool>> a) { return MetaNetwork::from_adjacency(a); }

void expect_matrix_near(const Matrix& a, const Matrix& b, double tol = 1e-12) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) EXPECT_NEAR(a(i, j), b(i, j), tol) << i << "," << j;
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

}  // namespace

TEST(UniformMatrix, Examples) {
  expect_matrix_near(uniform_stochastic_matrix(meta_of({{1, 1}, {1, 0}})).values(), mat({{0.5, 0.5}, {1, 0}}));
  expect_matrix_near(uniform_stochastic_matrix(meta_of({{1}})).values(), mat({{1}}));
  expect_matrix_near(uniform_stochastic_matrix(meta_of({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}})).values(),
                     mat({{0, 1, 0}, {0.5, 0, 0.5}, {0, 1, 0}}));
}

TEST(UniformMatrix, IsolatedTypeRejected) {
  try {
    uniform_stochastic_matrix(meta_of({{1, 0}, {0, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIsolatedType);
  }
}

TEST(InitMatrix, EqualsUniform) {
  // Douban: M, U, A, D.
  const MetaNetwork douban = meta_of({{0, 1, 1, 1}, {1, 1, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}});
  const Matrix p = init_stochastic_matrix(douban).values();
  EXPECT_DOUBLE_EQ(p(0, 1), 1.0 / 3);
  EXPECT_DOUBLE_EQ(p(0, 2), 1.0 / 3);
  EXPECT_DOUBLE_EQ(p(0, 3), 1.0 / 3);
  EXPECT_EQ(p(0, 0), 0.0);
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = 1 + rng.below(6);
    std::vector<std::vector<bool>> a(t, std::vector<bool>(t, false));
    for (std::size_t x = 0; x < t; ++x) {
      a[x][(x + 1) % t] = a[(x + 1) % t][x] = true;
      for (std::size_t y = x; y < t; ++y)
        if (rng.uniform() < 0.3) a[x][y] = a[y][x] = true;
    }
    const MetaNetwork m = meta_of(a);
    EXPECT_EQ(init_stochastic_matrix(m).values(), uniform_stochastic_matrix(m).values());
  }
}

TEST(StochasticMatrix, ValidationCatchesViolations) {
  const MetaNetwork m = meta_of({{1, 1}, {1, 0}});
  EXPECT_FALSE(StochasticMatrix::check(mat({{0.3, 0.7}, {1, 0}}), m).has_value());
  EXPECT_TRUE(StochasticMatrix::check(mat({{0.3, 0.6}, {1, 0}}), m).has_value());
  EXPECT_TRUE(StochasticMatrix::check(mat({{0.5, 0.5}, {0.5, 0.5}}), m).has_value());
  EXPECT_TRUE(StochasticMatrix::check(mat({{1.5, -0.5}, {1, 0}}), m).has_value());
  EXPECT_TRUE(StochasticMatrix::check(mat({{1}}), m).has_value());
  EXPECT_THROW(StochasticMatrix(mat({{0.3, 0.6}, {1, 0}}), m), Error);
}

TEST(TransitionPower, Examples) {
  const Matrix p = uniform_stochastic_matrix(meta_of({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}})).values();
  expect_matrix_near(transition_power(p, 2), mat({{0.5, 0, 0.5}, {0, 1, 0}, {0.5, 0, 0.5}}));
  expect_matrix_near(transition_power(p, 1), p);
  Rng rng(8);
  Matrix r(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = rng.uniform();
    r.row(i) /= r.row(i).sum();
  }
  const Matrix r4 = transition_power(r, 4);
  expect_matrix_near(r4, r * r * r * r, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r4.row(i).sum(), 1.0, 1e-9);
}

TEST(SampleWalk, CompleteBipartiteAlternates) {
  std::vector<TypeId> types{0, 0, 0, 1, 1};
  std::vector<Edge> edges;
  for (NodeId u = 0; u < 3; ++u)
    for (NodeId v = 3; v < 5; ++v) edges.push_back({u, v});
  const HetGraph g = make_graph(types, 2, edges);
  const StochasticMatrix p(mat({{0, 1}, {1, 0}}), build_meta_network(g));
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Walk w = sample_walk(g, p, static_cast<NodeId>(i % 5), 12, rng);
    ASSERT_EQ(w.size(), 12u);
    for (std::size_t j = 1; j < w.size(); ++j) EXPECT_NE(g.type_of(w[j]), g.type_of(w[j - 1]));
  }
}

TEST(SampleWalk, FourCycleUniformNeighbors) {
  const HetGraph g = make_graph({0, 0, 0, 0}, 1, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const StochasticMatrix p = uniform_stochastic_matrix(build_meta_network(g));
  Rng rng(12);
  const Walk w = sample_walk(g, p, 0, 100001, rng);
  // From node 0 the next node is 1 or 3; count what follows each visit of 0.
  std::size_t from0 = 0, to1 = 0;
  std::size_t steps = 0, clockwise = 0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    ++steps;
    if (w[i + 1] == (w[i] + 1) % 4) ++clockwise;
    if (w[i] == 0) {
      ++from0;
      if (w[i + 1] == 1) ++to1;
    }
  }
  EXPECT_NEAR(static_cast<double>(clockwise) / steps, 0.5, 0.01);
  EXPECT_NEAR(static_cast<double>(to1) / from0, 0.5, 0.02);
}

TEST(SampleWalk, TypeFrequenciesMatchP) {
  const HetGraph g = bhin::testing::complete_graph(4, 3);
  const StochasticMatrix p(mat({{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}, {0.25, 0.25, 0.5}}), build_meta_network(g));
  Rng rng(21);
  const Walk w = sample_walk(g, p, 0, 100001, rng);
  Matrix counts = Matrix::Zero(3, 3);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) counts(g.type_of(w[i]), g.type_of(w[i + 1])) += 1;
  for (int i = 0; i < 3; ++i) {
    const double row = counts.row(i).sum();
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(counts(i, j) / row, p(i, j), 0.01);
  }
}

TEST(SampleWalk, RestrictsToLocallyAvailableTypes) {
  // Node 0 (type 0) only has type-1 neighbors although P prefers type 2.
  const HetGraph g = make_graph({0, 1, 2, 0}, 3, {{0, 1}, {3, 2}, {1, 2}, {3, 1}});
  const StochasticMatrix p(mat({{0, 0.1, 0.9}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}), build_meta_network(g));
  Rng rng(2);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(sample_walk(g, p, 0, 2, rng)[1], 1u);
}

TEST(SampleWalk, ZeroMassFallsBackToAvailableTypes) {
  // P gives type 0 -> type 1 probability 0 but node 0 has only type-1 neighbors.
  const HetGraph g = make_graph({0, 1, 2, 0}, 3, {{0, 1}, {3, 2}, {1, 2}, {3, 1}});
  const StochasticMatrix p(mat({{0, 0, 1}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}), build_meta_network(g));
  Rng rng(2);
  const Walk w = sample_walk(g, p, 0, 50, rng);
  for (std::size_t j = 1; j < w.size(); ++j) EXPECT_TRUE(g.has_edge(w[j - 1], w[j]));
}

TEST(SampleWalk, DeterministicAndAdjacent) {
  Rng graph_rng(30);
  const HetGraph g = bhin::testing::random_connected_graph(graph_rng, 60, 3, 80);
  const StochasticMatrix p = uniform_stochastic_matrix(build_meta_network(g));
  Rng a(5), b(5);
  for (NodeId s = 0; s < g.node_count(); ++s) {
    const Walk wa = sample_walk(g, p, s, 30, a);
    EXPECT_EQ(wa, sample_walk(g, p, s, 30, b));
    ASSERT_EQ(wa.size(), 30u);
    EXPECT_EQ(wa[0], s);
    for (std::size_t j = 1; j < wa.size(); ++j) EXPECT_TRUE(g.has_edge(wa[j - 1], wa[j]));
  }
}

TEST(SampleWalk, DeadEnd) {
  const HetGraph g = make_graph({0, 0, 0}, 1, {{0, 1}});
  const StochasticMatrix p = uniform_stochastic_matrix(build_meta_network(g));
  Rng rng(1);
  try {
    sample_walk(g, p, 2, 5, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDeadEnd);
  }
  EXPECT_THROW(sample_walk_neighbor_uniform(g, 2, 5, rng), Error);
}

TEST(NeighborUniformWalk, StarLeavesEven) {
  const HetGraph g = make_graph({0, 1, 1, 1, 1}, 2, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  Rng rng(6);
  const Walk w = sample_walk_neighbor_uniform(g, 0, 200001, rng);
  std::vector<double> counts(5, 0);
  std::size_t visits = 0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (w[i] != 0) continue;
    ++visits;
    counts[w[i + 1]] += 1;
  }
  for (NodeId leaf = 1; leaf < 5; ++leaf) EXPECT_NEAR(counts[leaf] / visits, 0.25, 0.01);
}

TEST(NeighborUniformWalk, LengthOneAndAdjacency) {
  Rng graph_rng(31);
  const HetGraph g = bhin::testing::random_connected_graph(graph_rng, 40, 2, 30);
  Rng rng(3);
  EXPECT_EQ(sample_walk_neighbor_uniform(g, 7, 1, rng), Walk{7});
  const Walk w = sample_walk_neighbor_uniform(g, 7, 500, rng);
  for (std::size_t j = 1; j < w.size(); ++j) EXPECT_TRUE(g.has_edge(w[j - 1], w[j]));
}
