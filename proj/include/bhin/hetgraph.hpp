#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bhin {

using NodeId = std::uint32_t;
using TypeId = std::uint32_t;

struct Edge {
  NodeId u;
  NodeId v;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Typed, undirected network with neighbor lists partitioned by neighbor type.
///
/// Storage is CSR: neighbors of v live in [offsets_[v], offsets_[v+1]) sorted by
/// (type, id), and type_offsets_ holds |T|+1 cut points per node so the
/// neighbors of v having type t are a contiguous slice.
/// Immutable after construction.
class HetGraph {
 public:
  HetGraph() = default;

  /// Builds from already-dense ids. Edges are symmetrized; self-loops and
  /// duplicates are dropped. No degree filtering happens here.
  static HetGraph build(std::vector<TypeId> node_type, std::vector<std::string> type_names,
                        std::span<const Edge> edges, std::vector<std::string> node_names = {});

  std::size_t node_count() const { return node_type_.size(); }
  std::size_t type_count() const { return type_names_.size(); }
  /// Number of undirected edges.
  std::size_t edge_count() const { return adjacency_.size() / 2; }

  TypeId type_of(NodeId v) const { return node_type_[v]; }
  std::span<const TypeId> node_types() const { return node_type_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::span<const NodeId> neighbors(NodeId v, TypeId t) const {
    const std::size_t* cuts = type_offsets_.data() + static_cast<std::size_t>(v) * (type_count() + 1);
    return {adjacency_.data() + cuts[t], adjacency_.data() + cuts[t + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(NodeId u, NodeId v) const;

  std::span<const NodeId> nodes_of_type(TypeId t) const { return nodes_by_type_[t]; }

  const std::string& node_name(NodeId v) const { return node_names_[v]; }
  const std::string& type_name(TypeId t) const { return type_names_[t]; }
  std::span<const std::string> type_names() const { return type_names_; }
  std::optional<NodeId> find_node(std::string_view name) const;
  std::optional<TypeId> find_type(std::string_view name) const;

  /// Every undirected edge once, as (u, v) with u < v, in ascending order.
  std::vector<Edge> edges() const;

 private:
  std::vector<TypeId> node_type_;
  std::vector<std::string> type_names_;
  std::vector<std::string> node_names_;
  std::unordered_map<std::string, NodeId> node_index_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> type_offsets_;
  std::vector<NodeId> adjacency_;
  std::vector<std::vector<NodeId>> nodes_by_type_;
};

struct DroppedNode {
  std::string name;
  std::size_t degree;  // before filtering
};

struct LoadResult {
  HetGraph graph;
  std::vector<DroppedNode> dropped;
};

/// Parses an edge list and a node-type list and applies the degree filter:
/// nodes with degree < min_degree are removed in one pass over the original
/// graph, then nodes left isolated are removed too. Type ids follow first
/// appearance in the type list; types that lose every node are discarded.
LoadResult load_graph(std::istream& edges, std::istream& types, std::size_t min_degree = 2);
LoadResult load_graph(const std::filesystem::path& edges, const std::filesystem::path& types,
                      std::size_t min_degree = 2);

void save_graph(const HetGraph& g, std::ostream& edges, std::ostream& types);
void save_graph(const HetGraph& g, const std::filesystem::path& edges,
                const std::filesystem::path& types);
void write_dropped_report(std::span<const DroppedNode> dropped, std::ostream& out);

/// Graph over node types: A[x][y] is set iff some edge joins a node of type x
/// and a node of type y.
class MetaNetwork {
 public:
  MetaNetwork() = default;
  explicit MetaNetwork(std::size_t type_count);

  static MetaNetwork from_adjacency(const std::vector<std::vector<bool>>& adjacency);

  std::size_t type_count() const { return type_count_; }
  bool adjacent(TypeId x, TypeId y) const { return adjacency_[x * type_count_ + y] != 0; }
  std::size_t type_degree(TypeId x) const { return degree_[x]; }

  void connect(TypeId x, TypeId y);

 private:
  std::size_t type_count_ = 0;
  std::vector<char> adjacency_;
  std::vector<std::size_t> degree_;
};

MetaNetwork build_meta_network(const HetGraph& g);

/// Virtual task: predict a context node of type `context` from a source node of
/// type `source` that sits hop + 1 positions earlier in a walk.
struct TaskId {
  std::uint32_t hop;
  TypeId source;
  TypeId context;
  auto operator<=>(const TaskId&) const = default;
};

/// Dense k x |T| x |T| indexing shared by every per-task table.
struct TaskShape {
  std::size_t hops = 0;
  std::size_t types = 0;

  std::size_t size() const { return hops * types * types; }
  std::size_t index(TaskId t) const { return (t.hop * types + t.source) * types + t.context; }
  std::size_t index(std::size_t hop, TypeId source, TypeId context) const {
    return (hop * types + source) * types + context;
  }
  TaskId task(std::size_t index) const {
    return {static_cast<std::uint32_t>(index / (types * types)),
            static_cast<TypeId>((index / types) % types), static_cast<TypeId>(index % types)};
  }
  friend bool operator==(const TaskShape&, const TaskShape&) = default;
};

class TaskSet {
 public:
  TaskSet() = default;
  TaskSet(TaskShape shape, std::vector<char> possible);

  const TaskShape& shape() const { return shape_; }
  bool contains(TaskId t) const { return possible_[shape_.index(t)] != 0; }
  bool contains_index(std::size_t i) const { return possible_[i] != 0; }
  std::size_t size() const { return count_; }
  std::vector<TaskId> tasks() const;

 private:
  TaskShape shape_;
  std::vector<char> possible_;
  std::size_t count_ = 0;
};

/// Task (z, x, y) is possible iff type y is reachable from type x by a meta-path
/// of exactly z + 1 steps, i.e. (A^{z+1})[x][y] > 0.
TaskSet possible_tasks(const MetaNetwork& meta, std::size_t k);

}  // namespace bhin
