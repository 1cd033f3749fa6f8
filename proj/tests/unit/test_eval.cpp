#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bhin/error.hpp"
#include "bhin/eval.hpp"
#include "bhin/synthetic.hpp"
#include "test_support.hpp"

using namespace bhin;

namespace {

HetGraph bipartite(std::size_t a, std::size_t b, std::size_t edges, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.types = {{"U", a}, {"G", b}};
  spec.relations = {{"U", "G", edges}};
  spec.seed = seed;
  return to_graph(make_synthetic(spec));
}

std::set<std::pair<NodeId, NodeId>> edge_set(const HetGraph& g) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (const Edge& e : g.edges()) s.insert({e.u, e.v});
  return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::kIo;
}

}  // namespace

TEST(SplitEdges, ExactStratifiedCount) {
  const HetGraph g = bipartite(30, 20, 100, 1);
  Rng rng(1);
  const EdgeSplit s = split_edges(g, 0.2, rng);
  EXPECT_EQ(s.test_edges.size(), 20u);
  EXPECT_EQ(s.train_graph.edge_count(), 80u);
}

TEST(SplitEdges, InvariantsOnMixedRelations) {
  SyntheticSpec spec;
  spec.types = {{"A", 60}, {"B", 40}, {"C", 30}};
  spec.relations = {{"A", "A", 300}, {"A", "B", 200}, {"B", "C", 90}};
  spec.seed = 4;
  const HetGraph g = to_graph(make_synthetic(spec));
  Rng rng(2);
  const EdgeSplit s = split_edges(g, 0.2, rng);
  const auto train = edge_set(s.train_graph);
  std::map<std::pair<TypeId, TypeId>, std::size_t> test_count, total;
  for (const Edge& e : g.edges()) ++total[{std::min(g.type_of(e.u), g.type_of(e.v)), std::max(g.type_of(e.u), g.type_of(e.v))}];
  for (const TestEdge& e : s.test_edges) {
    EXPECT_TRUE(g.has_edge(e.u, e.v));
    EXPECT_FALSE(train.contains({std::min(e.u, e.v), std::max(e.u, e.v)}));
    ++test_count[{std::min(g.type_of(e.u), g.type_of(e.v)), std::max(g.type_of(e.u), g.type_of(e.v))}];
  }
  for (const auto& [rel, n] : total) {
    EXPECT_NEAR(static_cast<double>(test_count[rel]), 0.2 * static_cast<double>(n), 1.0);
  }
  EXPECT_EQ(s.train_graph.edge_count() + s.test_edges.size(), g.edge_count());
  ASSERT_EQ(s.train_graph.node_count(), g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    EXPECT_EQ(s.train_graph.type_of(v), g.type_of(v));
    EXPECT_EQ(s.train_graph.node_name(v), g.node_name(v));
    if (g.degree(v) > 0) EXPECT_GE(s.train_graph.degree(v), 1u);
  }
  Rng again(2);
  const EdgeSplit s2 = split_edges(g, 0.2, again);
  ASSERT_EQ(s2.test_edges.size(), s.test_edges.size());
  for (std::size_t i = 0; i < s.test_edges.size(); ++i) {
    EXPECT_EQ(s.test_edges[i].u, s2.test_edges[i].u);
    EXPECT_EQ(s.test_edges[i].v, s2.test_edges[i].v);
  }
}

TEST(SplitEdges, TriangleCannotLoseNinetyPercent) {
  const HetGraph g = bhin::testing::make_graph({0, 1, 0}, 2, {{0, 1}, {1, 2}, {2, 0}});
  Rng rng(3);
  EXPECT_EQ(kind_of([&] { split_edges(g, 0.9, rng); }), ErrorKind::kInfeasibleSplit);
  EXPECT_EQ(kind_of([&] { split_edges(g, 0.0, rng); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([&] { split_edges(g, 1.0, rng); }), ErrorKind::kInvalidArgument);
}

TEST(EdgeEmbedding, Hadamard) {
  const std::vector<double> a{1, 2}, b{3, 4}, zero{0, 0};
  EXPECT_EQ(edge_embedding(a, b), (std::vector<double>{3, 8}));
  EXPECT_EQ(edge_embedding(a, zero), zero);
  EXPECT_EQ(edge_embedding(a, b), edge_embedding(b, a));
  const std::vector<double> c{1, 2, 3};
  EXPECT_EQ(kind_of([&] { edge_embedding(a, c); }), ErrorKind::kShapeMismatch);
}

TEST(F1, ConfusionArithmetic) {
  const std::vector<int> truth{0, 1, 0, 1, 2, 2};
  F1Scores perfect = f1_scores(truth, truth);
  EXPECT_DOUBLE_EQ(perfect.micro, 1.0);
  EXPECT_DOUBLE_EQ(perfect.macro, 1.0);

  const std::vector<int> balanced{0, 0, 1, 1}, all_zero{0, 0, 0, 0};
  const F1Scores f = f1_scores(balanced, all_zero);
  // Class 0: precision 1/2, recall 1 -> F1 2/3. Class 1: F1 0. Macro 1/3.
  EXPECT_DOUBLE_EQ(f.micro, 0.5);
  EXPECT_NEAR(f.macro, 1.0 / 3, 1e-15);
}

TEST(F1, MicroEqualsAccuracy) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> t(50), p(50);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      t[i] = static_cast<int>(rng.below(4));
      p[i] = static_cast<int>(rng.below(4));
      correct += t[i] == p[i];
    }
    EXPECT_NEAR(f1_scores(t, p).micro, correct / 50.0, 1e-12);
  }
}

TEST(Classifiers, LogisticSeparatesClusters) {
  Rng rng(6);
  const int n = 200;
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double sign = i % 2 ? 1.0 : -1.0;
    for (int j = 0; j < 3; ++j) x(i, j) = sign * 2.0 + 0.3 * rng.normal();
    y(i) = i % 2;
  }
  LogisticRegression clf;
  clf.fit(x, y);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> row{x(i, 0), x(i, 1), x(i, 2)};
    correct += (clf.decision(row) > 0) == (y(i) > 0.5);
  }
  EXPECT_EQ(correct, n);
  for (int j = 0; j < 3; ++j) EXPECT_TRUE(std::isfinite(clf.weights()(j)));
}

TEST(NodeClassification, SeparableClustersScoreHigh) {
  Rng rng(7);
  const std::size_t n = 300, d = 8;
  std::vector<double> features(n * d);
  std::vector<LabeledNode> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 3);
    for (std::size_t j = 0; j < d; ++j) features[i * d + j] = (j == static_cast<std::size_t>(cls) ? 5.0 : 0.0) + 0.5 * rng.normal();
  }
  for (std::size_t i = 0; i < n; ++i)
    nodes.push_back({{features.data() + i * d, d}, "User", "c" + std::to_string(i % 3)});
  Rng eval_rng(1);
  const NodeClassReport r = node_classification_f1(nodes, 0.8, 10, eval_rng);
  ASSERT_EQ(r.types.size(), 1u);
  EXPECT_GT(r.micro, 0.95);
  EXPECT_GT(r.macro, 0.95);

  ClassifierOptions threaded;
  threaded.threads = 4;
  Rng eval_rng2(1);
  const NodeClassReport t = node_classification_f1(nodes, 0.8, 10, eval_rng2, threaded);
  EXPECT_EQ(t.micro, r.micro);
  EXPECT_EQ(t.types[0].macro_std, r.types[0].macro_std);
}

TEST(NodeClassification, SingleClassTypes) {
  std::vector<double> f(40, 1.0);
  std::vector<LabeledNode> nodes;
  for (std::size_t i = 0; i < 10; ++i) nodes.push_back({{f.data() + 2 * i, 2}, "Group", "only"});
  Rng rng(1);
  EXPECT_EQ(kind_of([&] { node_classification_f1(nodes, 0.8, 2, rng); }), ErrorKind::kSingleClass);
  for (std::size_t i = 10; i < 20; ++i) nodes.push_back({{f.data() + 2 * i, 2}, "User", i % 2 ? "a" : "b"});
  const NodeClassReport r = node_classification_f1(nodes, 0.8, 2, rng);
  ASSERT_EQ(r.types.size(), 2u);
  EXPECT_TRUE(r.types[0].single_class);
  EXPECT_FALSE(r.types[1].single_class);
  std::stringstream csv;
  write_node_class_csv(r, csv);
  EXPECT_NE(csv.str().find("Group,single_class"), std::string::npos);
}

TEST(Ranking, RandomScorerHitsTenPercent) {
  const HetGraph g = bipartite(300, 300, 6000, 2);
  Rng rng(3);
  const EdgeSplit split = split_edges(g, 0.2, rng);
  auto scorer_for = [](TypeId, TypeId) -> PairScorer {
    return [](NodeId s, NodeId c) {
      return static_cast<double>(mix64((static_cast<std::uint64_t>(s) << 32) ^ c ^ 0x9e3779b97f4a7c15ULL) >> 11);
    };
  };
  Rng cand(4);
  const HitRateReport r = rank_test_edges(split, g, scorer_for, cand);
  std::size_t evaluated = 0, hits = 0, skipped = 0;
  for (const auto& t : r.tasks) {
    evaluated += t.evaluated;
    hits += t.hits;
    skipped += t.skipped;
    EXPECT_GE(t.hit_rate(), 0.0);
    EXPECT_LE(t.hit_rate(), 1.0);
  }
  EXPECT_EQ(r.tasks.size(), 2u);
  EXPECT_EQ(evaluated + skipped, 2 * split.test_edges.size());
  EXPECT_GE(evaluated, 1000u);
  EXPECT_NEAR(static_cast<double>(hits) / evaluated, 0.10, 0.03);
}

TEST(Ranking, OracleScorerHitsEverything) {
  const HetGraph g = bipartite(200, 200, 3000, 3);
  Rng rng(5);
  const EdgeSplit split = split_edges(g, 0.2, rng);
  auto scorer_for = [&](TypeId, TypeId) -> PairScorer {
    return [&](NodeId s, NodeId c) { return g.has_edge(s, c) ? 1.0 : 0.0; };
  };
  Rng cand(6);
  const HitRateReport r = rank_test_edges(split, g, scorer_for, cand);
  EXPECT_DOUBLE_EQ(r.average, 1.0);
}

TEST(Ranking, TooFewCandidatesAreSkippedAndCounted) {
  // Only 50 group nodes: fewer than 99 admissible candidates.
  const HetGraph g = bipartite(200, 50, 800, 4);
  Rng rng(7);
  const EdgeSplit split = split_edges(g, 0.2, rng);
  auto scorer_for = [](TypeId, TypeId) -> PairScorer { return [](NodeId, NodeId) { return 0.0; }; };
  Rng cand(8);
  const HitRateReport r = rank_test_edges(split, g, scorer_for, cand);
  std::size_t total = 0;
  for (const auto& t : r.tasks) {
    total += t.evaluated + t.skipped;
    if (g.type_name(t.target) == "G") {
      EXPECT_EQ(t.evaluated, 0u);
      EXPECT_EQ(t.skipped, split.test_edges.size());
    }
  }
  EXPECT_EQ(total, 2 * split.test_edges.size());
}

TEST(Ranking, TiesFavourLowerNodeId) {
  // Constant scores: the true target is a hit iff fewer than 10 candidates have a lower id.
  const HetGraph g = bipartite(300, 300, 3000, 5);
  Rng rng(9);
  const EdgeSplit split = split_edges(g, 0.1, rng);
  auto scorer_for = [](TypeId, TypeId) -> PairScorer { return [](NodeId, NodeId) { return 0.0; }; };
  Rng cand(10);
  const HitRateReport r = rank_test_edges(split, g, scorer_for, cand);
  // With ids tied, low-id targets win; the hit rate is well below 1 but nonzero.
  EXPECT_GT(r.average, 0.0);
  EXPECT_LT(r.average, 0.5);
}

TEST(LinkPrediction, DeterministicAndThreadInvariant) {
  const HetGraph g = bipartite(150, 150, 2000, 6);
  Rng split_rng(11);
  const EdgeSplit split = split_edges(g, 0.2, split_rng);
  Rng init(12);
  const EmbeddingStore store = EmbeddingStore::initialized(g.node_count(), 2, 1, 8, init);
  Rng a(13), b(13);
  const HitRateReport ra = link_prediction_hit10(store, split, g, a);
  ClassifierOptions threaded;
  threaded.threads = 3;
  const HitRateReport rb = link_prediction_hit10(store, split, g, b, {}, threaded);
  ASSERT_EQ(ra.tasks.size(), rb.tasks.size());
  for (std::size_t i = 0; i < ra.tasks.size(); ++i) {
    EXPECT_EQ(ra.tasks[i].hits, rb.tasks[i].hits);
    EXPECT_EQ(ra.tasks[i].evaluated, rb.tasks[i].evaluated);
  }
  EXPECT_GE(ra.average, 0.0);
  EXPECT_LE(ra.average, 1.0);
  std::stringstream csv;
  write_hit_rate_csv(ra, g.type_names(), csv);
  EXPECT_NE(csv.str().find("U->G,hit@10,"), std::string::npos);
  EXPECT_NE(csv.str().find("average,hit@10,"), std::string::npos);
}

TEST(LinkPrediction, RejectsEmbeddingsOfWrongSize) {
  const HetGraph g = bipartite(150, 150, 2000, 7);
  Rng rng(1);
  const EdgeSplit split = split_edges(g, 0.2, rng);
  const EmbeddingStore store(10, 2, 1, 4);
  EXPECT_EQ(kind_of([&] { link_prediction_hit10(store, split, g, rng); }), ErrorKind::kShapeMismatch);
}
