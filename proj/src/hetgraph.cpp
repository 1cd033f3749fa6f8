#include "bhin/hetgraph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "bhin/error.hpp"

namespace bhin {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  if (line.find('\t') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    return fields;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

// Reads non-empty, non-comment lines and splits each into fields. Every record
// must carry exactly `arity` fields.
template <typename Fn>
void for_each_record(std::istream& in, std::size_t arity, std::string_view what, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split_fields(view);
    for (auto& f : fields) f = trim(f);
    if (fields.size() != arity || std::ranges::any_of(fields, [](auto f) { return f.empty(); })) {
      throw Error(ErrorKind::kMalformedRecord,
                  std::string(what) + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(arity) + " fields, got '" + std::string(view) + "'");
    }
    fn(fields, line_no);
  }
}

}  // namespace

HetGraph HetGraph::build(std::vector<TypeId> node_type, std::vector<std::string> type_names,
                         std::span<const Edge> edges, std::vector<std::string> node_names) {
  HetGraph g;
  const std::size_t n = node_type.size();
  const std::size_t types = type_names.size();
  for (TypeId t : node_type) {
    if (t >= types) throw Error(ErrorKind::kInvalidArgument, "node type id out of range");
  }
  if (node_names.empty()) {
    node_names.reserve(n);
    for (std::size_t v = 0; v < n; ++v) node_names.push_back(std::to_string(v));
  } else if (node_names.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "node_names size does not match node count");
  }

  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) throw Error(ErrorKind::kInvalidArgument, "edge endpoint out of range");
    if (e.u == e.v) continue;
    canon.push_back({std::min(e.u, e.v), std::max(e.u, e.v)});
  }
  std::ranges::sort(canon, [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  g.offsets_.assign(n + 1, 0);
  for (const Edge& e : canon) {
    ++g.offsets_[e.u + 1];
    ++g.offsets_[e.v + 1];
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  g.adjacency_.resize(g.offsets_[n]);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const Edge& e : canon) {
    g.adjacency_[fill[e.u]++] = e.v;
    g.adjacency_[fill[e.v]++] = e.u;
  }

  g.type_offsets_.assign(n * (types + 1), 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto first = g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]);
    auto last = g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]);
    std::sort(first, last, [&](NodeId a, NodeId b) {
      return node_type[a] != node_type[b] ? node_type[a] < node_type[b] : a < b;
    });
    std::size_t* cuts = g.type_offsets_.data() + v * (types + 1);
    std::size_t pos = g.offsets_[v];
    for (std::size_t t = 0; t < types; ++t) {
      cuts[t] = pos;
      while (pos < g.offsets_[v + 1] && node_type[g.adjacency_[pos]] == t) ++pos;
    }
    cuts[types] = pos;
  }

  g.nodes_by_type_.assign(types, {});
  for (std::size_t v = 0; v < n; ++v) g.nodes_by_type_[node_type[v]].push_back(static_cast<NodeId>(v));

  g.node_index_.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!g.node_index_.emplace(node_names[v], static_cast<NodeId>(v)).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate node name '" + node_names[v] + "'");
    }
  }
  g.node_type_ = std::move(node_type);
  g.type_names_ = std::move(type_names);
  g.node_names_ = std::move(node_names);
  return g;
}

bool HetGraph::has_edge(NodeId u, NodeId v) const {
  const auto slice = neighbors(u, node_type_[v]);
  return std::binary_search(slice.begin(), slice.end(), v);
}

std::optional<NodeId> HetGraph::find_node(std::string_view name) const {
  const auto it = node_index_.find(std::string(name));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TypeId> HetGraph::find_type(std::string_view name) const {
  const auto it = std::ranges::find(type_names_, name);
  if (it == type_names_.end()) return std::nullopt;
  return static_cast<TypeId>(it - type_names_.begin());
}

std::vector<Edge> HetGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (NodeId u = 0; u < node_count(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.push_back({u, v});
    }
  }
  std::ranges::sort(out, [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  return out;
}

LoadResult load_graph(std::istream& edges_in, std::istream& types_in, std::size_t min_degree) {
  std::vector<std::string> names;
  std::vector<std::size_t> raw_type;
  std::vector<std::string> raw_type_names;
  std::unordered_map<std::string, std::size_t> name_index;
  std::unordered_map<std::string, std::size_t> type_index;

  for_each_record(types_in, 2, "type file", [&](const auto& f, std::size_t line_no) {
    std::string node(f[0]);
    std::string type(f[1]);
    auto [tit, new_type] = type_index.emplace(type, raw_type_names.size());
    if (new_type) raw_type_names.push_back(type);
    auto [nit, new_node] = name_index.emplace(node, names.size());
    if (new_node) {
      names.push_back(node);
      raw_type.push_back(tit->second);
    } else if (raw_type[nit->second] != tit->second) {
      throw Error(ErrorKind::kMalformedRecord, "type file line " + std::to_string(line_no) +
                                                   ": node '" + node + "' assigned two types");
    }
  });

  std::vector<Edge> raw_edges;
  for_each_record(edges_in, 2, "edge file", [&](const auto& f, std::size_t line_no) {
    NodeId ends[2];
    for (int i = 0; i < 2; ++i) {
      const auto it = name_index.find(std::string(f[i]));
      if (it == name_index.end()) {
        throw Error(ErrorKind::kUnknownNodeType, "edge file line " + std::to_string(line_no) +
                                                     ": node '" + std::string(f[i]) + "' has no type");
      }
      ends[i] = static_cast<NodeId>(it->second);
    }
    if (ends[0] != ends[1]) raw_edges.push_back({std::min(ends[0], ends[1]), std::max(ends[0], ends[1])});
  });
  std::ranges::sort(raw_edges, [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  raw_edges.erase(std::unique(raw_edges.begin(), raw_edges.end()), raw_edges.end());

  const std::size_t n = names.size();
  std::vector<std::size_t> degree(n, 0);
  for (const Edge& e : raw_edges) {
    ++degree[e.u];
    ++degree[e.v];
  }
  std::vector<char> keep(n);
  for (std::size_t v = 0; v < n; ++v) keep[v] = degree[v] >= min_degree && degree[v] > 0;

  std::vector<Edge> kept_edges;
  std::vector<std::size_t> kept_degree(n, 0);
  for (const Edge& e : raw_edges) {
    if (keep[e.u] && keep[e.v]) {
      kept_edges.push_back(e);
      ++kept_degree[e.u];
      ++kept_degree[e.v];
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (keep[v] && kept_degree[v] == 0) keep[v] = 0;
  }

  LoadResult result;
  std::vector<NodeId> remap(n, 0);
  std::vector<std::size_t> type_remap(raw_type_names.size(), SIZE_MAX);
  std::vector<std::string> type_names;
  std::vector<TypeId> node_type;
  std::vector<std::string> node_names;
  for (std::size_t v = 0; v < n; ++v) {
    if (!keep[v]) {
      result.dropped.push_back({names[v], degree[v]});
      continue;
    }
    std::size_t& t = type_remap[raw_type[v]];
    if (t == SIZE_MAX) {
      t = type_names.size();
      type_names.push_back(raw_type_names[raw_type[v]]);
    }
    remap[v] = static_cast<NodeId>(node_names.size());
    node_type.push_back(static_cast<TypeId>(t));
    node_names.push_back(names[v]);
  }
  if (node_names.empty()) {
    throw Error(ErrorKind::kEmptyGraph, "no node has degree >= " + std::to_string(min_degree));
  }
  for (Edge& e : kept_edges) e = {remap[e.u], remap[e.v]};
  result.graph = HetGraph::build(std::move(node_type), std::move(type_names), kept_edges,
                                 std::move(node_names));
  return result;
}

LoadResult load_graph(const std::filesystem::path& edges, const std::filesystem::path& types,
                      std::size_t min_degree) {
  std::ifstream e(edges);
  if (!e) throw Error(ErrorKind::kIo, "cannot open edge file " + edges.string());
  std::ifstream t(types);
  if (!t) throw Error(ErrorKind::kIo, "cannot open type file " + types.string());
  return load_graph(e, t, min_degree);
}

void save_graph(const HetGraph& g, std::ostream& edges, std::ostream& types) {
  for (NodeId v = 0; v < g.node_count(); ++v) {
    types << g.node_name(v) << '\t' << g.type_name(g.type_of(v)) << '\n';
  }
  for (const Edge& e : g.edges()) edges << g.node_name(e.u) << '\t' << g.node_name(e.v) << '\n';
}

void save_graph(const HetGraph& g, const std::filesystem::path& edges,
                const std::filesystem::path& types) {
  std::ofstream e(edges);
  std::ofstream t(types);
  if (!e || !t) throw Error(ErrorKind::kIo, "cannot write graph files");
  save_graph(g, e, t);
}

void write_dropped_report(std::span<const DroppedNode> dropped, std::ostream& out) {
  for (const auto& d : dropped) out << d.name << '\t' << d.degree << '\n';
}

MetaNetwork::MetaNetwork(std::size_t type_count)
    : type_count_(type_count), adjacency_(type_count * type_count, 0), degree_(type_count, 0) {}

MetaNetwork MetaNetwork::from_adjacency(const std::vector<std::vector<bool>>& adjacency) {
  MetaNetwork meta(adjacency.size());
  for (std::size_t x = 0; x < adjacency.size(); ++x) {
    if (adjacency[x].size() != adjacency.size()) {
      throw Error(ErrorKind::kShapeMismatch, "meta adjacency must be square");
    }
    for (std::size_t y = 0; y < adjacency.size(); ++y) {
      if (adjacency[x][y]) meta.connect(static_cast<TypeId>(x), static_cast<TypeId>(y));
    }
  }
  return meta;
}

void MetaNetwork::connect(TypeId x, TypeId y) {
  for (auto [a, b] : {std::pair{x, y}, std::pair{y, x}}) {
    char& cell = adjacency_[a * type_count_ + b];
    if (!cell) {
      cell = 1;
      ++degree_[a];
    }
  }
}

MetaNetwork build_meta_network(const HetGraph& g) {
  MetaNetwork meta(g.type_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    for (TypeId t = 0; t < g.type_count(); ++t) {
      if (!g.neighbors(v, t).empty()) meta.connect(g.type_of(v), t);
    }
  }
  return meta;
}

TaskSet::TaskSet(TaskShape shape, std::vector<char> possible)
    : shape_(shape), possible_(std::move(possible)) {
  count_ = static_cast<std::size_t>(std::ranges::count_if(possible_, [](char c) { return c != 0; }));
}

std::vector<TaskId> TaskSet::tasks() const {
  std::vector<TaskId> out;
  for (std::size_t i = 0; i < possible_.size(); ++i) {
    if (possible_[i]) out.push_back(shape_.task(i));
  }
  return out;
}

TaskSet possible_tasks(const MetaNetwork& meta, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "context window k must be >= 1");
  const std::size_t t = meta.type_count();
  TaskShape shape{k, t};
  std::vector<char> possible(shape.size(), 0);
  // reach holds the support of A^{z+1}; only positivity matters, so boolean
  // products stand in for nonnegative integer powers.
  std::vector<char> reach(t * t);
  for (std::size_t x = 0; x < t; ++x)
    for (std::size_t y = 0; y < t; ++y) reach[x * t + y] = meta.adjacent(x, y);
  for (std::size_t z = 0; z < k; ++z) {
    for (std::size_t x = 0; x < t; ++x)
      for (std::size_t y = 0; y < t; ++y) possible[shape.index(z, x, y)] = reach[x * t + y];
    std::vector<char> next(t * t, 0);
    for (std::size_t x = 0; x < t; ++x)
      for (std::size_t m = 0; m < t; ++m) {
        if (!reach[x * t + m]) continue;
        for (std::size_t y = 0; y < t; ++y)
          if (meta.adjacent(m, y)) next[x * t + y] = 1;
      }
    reach = std::move(next);
  }
  return TaskSet(shape, std::move(possible));
}

}  // namespace bhin
