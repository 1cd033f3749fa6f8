#include <gtest/gtest.h>

#include <functional>
#include <set>
#include <sstream>

#include "bhin/error.hpp"
#include "bhin/hetgraph.hpp"
#include "test_support.hpp"

using namespace bhin;
using bhin::testing::make_graph;

namespace {

LoadResult load(const std::string& edges, const std::string& types, std::size_t min_degree = 2) {
  std::istringstream e(edges), t(types);
  return load_graph(e, t, min_degree);
}

ErrorKind load_error(const std::string& edges, const std::string& types, std::size_t min_degree = 2) {
  try {
    load(edges, types, min_degree);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::kInvalidArgument;
}

MetaNetwork meta_of(std::vector<std::vector<bool>> a) { return MetaNetwork::from_adjacency(a); }

// Exhaustive enumeration of type paths of exactly n steps.
bool reachable_in(const MetaNetwork& meta, TypeId x, TypeId y, std::size_t n) {
  if (n == 0) return x == y;
  for (TypeId t = 0; t < meta.type_count(); ++t) {
    if (meta.adjacent(x, t) && reachable_in(meta, t, y, n - 1)) return true;
  }
  return false;
}

}  // namespace

TEST(LoadGraph, TriangleKeepsEverything) {
  const auto r = load("a b\nb c\nc a\n", "a A\nb B\nc A\n");
  EXPECT_EQ(r.graph.node_count(), 3u);
  EXPECT_EQ(r.graph.edge_count(), 3u);
  EXPECT_EQ(r.graph.type_count(), 2u);
  EXPECT_TRUE(r.dropped.empty());
}

TEST(LoadGraph, PathCollapsesToEmpty) {
  EXPECT_EQ(load_error("a b\nb c\n", "a A\nb B\nc A\n"), ErrorKind::kEmptyGraph);
}

TEST(LoadGraph, SymmetricDedupNoSelfLoops) {
  const auto r = load("a b\nb a\na b\na a\nb c\nc a\n", "a A\nb B\nc A\n");
  const HetGraph& g = r.graph;
  EXPECT_EQ(g.edge_count(), 3u);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    EXPECT_FALSE(g.has_edge(u, u));
    for (NodeId v : g.neighbors(u)) EXPECT_TRUE(g.has_edge(v, u));
  }
}

TEST(LoadGraph, UnknownNodeType) {
  EXPECT_EQ(load_error("a b\nb c\nc a\n", "a A\nb B\n"), ErrorKind::kUnknownNodeType);
}

TEST(LoadGraph, MalformedRecords) {
  EXPECT_EQ(load_error("a b c\n", "a A\nb B\nc A\n"), ErrorKind::kMalformedRecord);
  EXPECT_EQ(load_error("a b\n", "a\n"), ErrorKind::kMalformedRecord);
  EXPECT_EQ(load_error("a b\n", "a A\na B\nb B\n"), ErrorKind::kMalformedRecord);
}

TEST(LoadGraph, CommentsAndBlankLinesIgnored) {
  const auto r = load("# edges\n\na\tb\nb c\n\nc a\n", "# types\na A\n\nb B\nc A\n");
  EXPECT_EQ(r.graph.edge_count(), 3u);
}

TEST(LoadGraph, SinglePassFilterThenIsolated) {
  // d hangs off a; e-f is an isolated edge. Both d, e, f have degree 1.
  const auto r = load("a b\nb c\nc a\na d\ne f\n", "a A\nb B\nc A\nd B\ne A\nf A\n");
  EXPECT_EQ(r.graph.node_count(), 3u);
  ASSERT_EQ(r.dropped.size(), 3u);
  for (const auto& d : r.dropped) EXPECT_EQ(d.degree, 1u);
}

TEST(LoadGraph, FilterLeavesNodesThatLostNeighbors) {
  // Single pass: b has degree 2 before filtering (a, c); c has degree 1 and is
  // removed, so b survives with degree 1.
  const auto r = load("a b\nb c\na x\nx y\ny a\n", "a A\nb A\nc A\nx A\ny A\n");
  const auto b = r.graph.find_node("b");
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(r.graph.degree(*b), 1u);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].name, "c");
}

TEST(LoadGraph, DegreeFilterProperty) {
  // Survivors had at least min_degree neighbors before filtering and keep at
  // least one afterwards; dropped nodes either were below min_degree or became isolated.
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::ostringstream edges, types;
    const std::size_t n = 40;
    std::vector<std::size_t> degree_in(n, 0);
    for (std::size_t v = 0; v < n; ++v) types << "v" << v << ' ' << (v % 3) << '\n';
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (int i = 0; i < 45; ++i) {
      std::size_t a = rng.below(n), b = rng.below(n);
      if (a == b || !seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
      edges << 'v' << a << " v" << b << '\n';
      ++degree_in[a];
      ++degree_in[b];
    }
    std::istringstream e(edges.str()), t(types.str());
    LoadResult r;
    try {
      r = load_graph(e, t, 2);
    } catch (const Error& err) {
      ASSERT_EQ(err.kind(), ErrorKind::kEmptyGraph);
      continue;
    }
    for (NodeId v = 0; v < r.graph.node_count(); ++v) {
      const std::size_t original = degree_in[std::stoul(r.graph.node_name(v).substr(1))];
      EXPECT_GE(original, 2u);
      EXPECT_GE(r.graph.degree(v), 1u);
    }
    for (const auto& d : r.dropped) EXPECT_EQ(d.degree, degree_in[std::stoul(d.name.substr(1))]);
  }
}

TEST(LoadGraph, TypeIdsDenseAndFollowFirstAppearance) {
  // Type C only appears on a dropped node and disappears.
  const auto r = load("a b\nb c\nc a\na z\n", "z C\na A\nb B\nc A\n");
  ASSERT_EQ(r.graph.type_count(), 2u);
  EXPECT_EQ(r.graph.type_name(0), "A");
  EXPECT_EQ(r.graph.type_name(1), "B");
  for (NodeId v = 0; v < r.graph.node_count(); ++v) EXPECT_LT(r.graph.type_of(v), 2u);
}

TEST(HetGraph, NeighborsByType) {
  // 0:A adjacent to 1:B, 2:B, 3:A.
  const HetGraph g = make_graph({0, 1, 1, 0}, 2, {{0, 1}, {0, 2}, {0, 3}, {1, 3}});
  EXPECT_EQ(g.degree(0), 3u);
  const auto b = g.neighbors(0, 1);
  EXPECT_EQ(std::vector<NodeId>(b.begin(), b.end()), (std::vector<NodeId>{1, 2}));
  const auto a = g.neighbors(0, 0);
  EXPECT_EQ(std::vector<NodeId>(a.begin(), a.end()), (std::vector<NodeId>{3}));
  for (NodeId v = 0; v < g.node_count(); ++v)
    for (TypeId t = 0; t < 2; ++t)
      for (NodeId u : g.neighbors(v, t)) EXPECT_EQ(g.type_of(u), t);
}

TEST(HetGraph, SaveLoadRoundTrip) {
  Rng rng(2);
  const HetGraph g = bhin::testing::random_connected_graph(rng, 30, 3, 40);
  std::stringstream edges, types;
  save_graph(g, edges, types);
  const auto r = load_graph(edges, types, 1);
  const HetGraph& h = r.graph;
  ASSERT_EQ(h.node_count(), g.node_count());
  ASSERT_EQ(h.edge_count(), g.edge_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const NodeId w = *h.find_node(g.node_name(v));
    EXPECT_EQ(h.type_name(h.type_of(w)), g.type_name(g.type_of(v)));
    EXPECT_EQ(h.degree(w), g.degree(v));
    for (NodeId u : g.neighbors(v)) EXPECT_TRUE(h.has_edge(w, *h.find_node(g.node_name(u))));
  }
}

TEST(MetaNetwork, BlogCatalogShape) {
  // Users connect to users and groups; groups only to users.
  const HetGraph g = make_graph({0, 0, 0, 1, 1}, 2, {{0, 1}, {1, 2}, {0, 3}, {2, 4}}, {"User", "Group"});
  const MetaNetwork m = build_meta_network(g);
  EXPECT_TRUE(m.adjacent(0, 0));
  EXPECT_TRUE(m.adjacent(0, 1));
  EXPECT_TRUE(m.adjacent(1, 0));
  EXPECT_FALSE(m.adjacent(1, 1));
  EXPECT_EQ(m.type_degree(0), 2u);
  EXPECT_EQ(m.type_degree(1), 1u);
}

TEST(MetaNetwork, Homogeneous) {
  const HetGraph g = make_graph({0, 0, 0}, 1, {{0, 1}, {1, 2}});
  const MetaNetwork m = build_meta_network(g);
  EXPECT_EQ(m.type_count(), 1u);
  EXPECT_TRUE(m.adjacent(0, 0));
}

TEST(MetaNetwork, DoubanShape) {
  // Types M, U, A, D with relations M-U, U-U, M-A, M-D.
  const HetGraph g = make_graph({0, 1, 1, 2, 3}, 4, {{0, 1}, {1, 2}, {0, 3}, {0, 4}}, {"M", "U", "A", "D"});
  const MetaNetwork m = build_meta_network(g);
  const bool expected[4][4] = {{0, 1, 1, 1}, {1, 1, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}};
  for (TypeId x = 0; x < 4; ++x)
    for (TypeId y = 0; y < 4; ++y) EXPECT_EQ(m.adjacent(x, y), expected[x][y]) << x << "," << y;
}

TEST(PossibleTasks, PathABCk2) {
  const MetaNetwork m = meta_of({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  const TaskSet s = possible_tasks(m, 2);
  EXPECT_EQ(s.size(), 9u);
  for (auto [x, y] : std::vector<std::pair<TypeId, TypeId>>{{0, 1}, {1, 0}, {1, 2}, {2, 1}})
    EXPECT_TRUE(s.contains({0, x, y}));
  for (auto [x, y] : std::vector<std::pair<TypeId, TypeId>>{{0, 0}, {0, 2}, {2, 0}, {2, 2}, {1, 1}})
    EXPECT_TRUE(s.contains({1, x, y}));
}

TEST(PossibleTasks, BlogCatalogK5) {
  const TaskSet s = possible_tasks(meta_of({{1, 1}, {1, 0}}), 5);
  EXPECT_EQ(s.size(), 19u);
  EXPECT_FALSE(s.contains({0, 1, 1}));
}

TEST(PossibleTasks, SelfLoopAllHops) {
  const TaskSet s = possible_tasks(meta_of({{1}}), 4);
  EXPECT_EQ(s.size(), 4u);
}

TEST(PossibleTasks, ZeroWindowRejected) {
  EXPECT_THROW(possible_tasks(meta_of({{1}}), 0), Error);
}

TEST(PossibleTasks, MatchesPathEnumerationAndIsMonotone) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = 1 + rng.below(5);
    std::vector<std::vector<bool>> a(t, std::vector<bool>(t, false));
    for (std::size_t x = 0; x < t; ++x)
      for (std::size_t y = x; y < t; ++y) a[x][y] = a[y][x] = rng.uniform() < 0.4;
    const MetaNetwork m = meta_of(a);
    const std::size_t k = 1 + rng.below(5);
    const TaskSet s = possible_tasks(m, k);
    const TaskSet bigger = possible_tasks(m, k + 1);
    for (std::uint32_t z = 0; z < k; ++z)
      for (TypeId x = 0; x < t; ++x)
        for (TypeId y = 0; y < t; ++y) {
          EXPECT_EQ(s.contains({z, x, y}), reachable_in(m, x, y, z + 1));
          EXPECT_EQ(s.contains({z, x, y}), bigger.contains({z, x, y}));
          if (z == 0 && m.adjacent(x, y)) EXPECT_TRUE(s.contains({0, y, x}));
        }
  }
}

TEST(TaskShape, IndexRoundTrip) {
  const TaskShape shape{3, 4};
  for (std::size_t i = 0; i < shape.size(); ++i) EXPECT_EQ(shape.index(shape.task(i)), i);
}
