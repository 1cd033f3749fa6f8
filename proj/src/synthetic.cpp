#include "bhin/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "bhin/error.hpp"
#include "bhin/rng.hpp"

namespace bhin {

namespace {

std::size_t parse_count(std::string_view text, std::string_view context) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::kInvalidArgument, "bad count in '" + std::string(context) + "'");
  }
  return value;
}

std::uint64_t pair_key(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
}

}  // namespace

SyntheticType parse_synthetic_type(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorKind::kInvalidArgument, "type spec must look like NAME:COUNT, got '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, colon)), parse_count(text.substr(colon + 1), text)};
}

SyntheticRelation parse_synthetic_relation(std::string_view text) {
  const auto colon = text.rfind(':');
  const auto dash = text.find('-');
  if (colon == std::string_view::npos || dash == std::string_view::npos || dash == 0 || dash + 1 >= colon) {
    throw Error(ErrorKind::kInvalidArgument, "relation spec must look like A-B:EDGES, got '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, dash)), std::string(text.substr(dash + 1, colon - dash - 1)),
          parse_count(text.substr(colon + 1), text)};
}

SyntheticNetwork make_synthetic(const SyntheticSpec& spec) {
  SyntheticNetwork net;
  std::vector<std::vector<NodeId>> members;
  for (const auto& t : spec.types) {
    if (std::ranges::find(net.type_names, t.name) != net.type_names.end()) {
      throw Error(ErrorKind::kInfeasibleSpec, "type '" + t.name + "' declared twice");
    }
    if (t.nodes == 0) throw Error(ErrorKind::kInfeasibleSpec, "type '" + t.name + "' has no nodes");
    const auto id = static_cast<TypeId>(net.type_names.size());
    net.type_names.push_back(t.name);
    members.emplace_back();
    for (std::size_t i = 0; i < t.nodes; ++i) {
      members.back().push_back(static_cast<NodeId>(net.node_names.size()));
      net.node_names.push_back(t.name + std::to_string(i));
      net.node_type.push_back(id);
    }
  }
  auto type_id = [&](const std::string& name) {
    const auto it = std::ranges::find(net.type_names, name);
    if (it == net.type_names.end()) throw Error(ErrorKind::kInfeasibleSpec, "relation uses undeclared type '" + name + "'");
    return static_cast<TypeId>(it - net.type_names.begin());
  };

  struct Planned {
    TypeId a, b;
    std::size_t edges;
    std::size_t order;
  };
  std::vector<Planned> plan;
  std::unordered_set<std::uint64_t> declared;
  for (std::size_t i = 0; i < spec.relations.size(); ++i) {
    const auto& r = spec.relations[i];
    TypeId a = type_id(r.a), b = type_id(r.b);
    if (a > b) std::swap(a, b);
    if (!declared.insert((static_cast<std::uint64_t>(a) << 32) | b).second) {
      throw Error(ErrorKind::kInfeasibleSpec, "relation " + r.a + "-" + r.b + " declared twice");
    }
    const std::size_t na = members[a].size(), nb = members[b].size();
    const std::size_t capacity = a == b ? na * (na - 1) / 2 : na * nb;
    if (r.edges > capacity) {
      throw Error(ErrorKind::kInfeasibleSpec, "relation " + r.a + "-" + r.b + " asks for " + std::to_string(r.edges) +
                                                  " edges but at most " + std::to_string(capacity) + " exist");
    }
    plan.push_back({a, b, r.edges, i});
  }
  std::ranges::stable_sort(plan, [](const Planned& x, const Planned& y) { return x.edges > y.edges; });

  const Rng root(spec.seed);
  std::vector<std::size_t> degree(net.node_names.size(), 0);
  for (const Planned& rel : plan) {
    Rng rng = root.split("relation", rel.order);
    const auto& left = members[rel.a];
    const auto& right = members[rel.b];
    std::unordered_set<std::uint64_t> used;
    used.reserve(rel.edges * 2);
    std::size_t budget = rel.edges;
    auto add = [&](NodeId u, NodeId v) {
      if (u == v || !used.insert(pair_key(u, v)).second) return false;
      net.edges.push_back({u, v});
      ++degree[u];
      ++degree[v];
      --budget;
      return true;
    };

    // Coverage: lift under-degree nodes of either side to degree 2.
    std::vector<NodeId> deficient;
    for (NodeId v : left)
      if (degree[v] < 2) deficient.push_back(v);
    if (rel.a != rel.b)
      for (NodeId v : right)
        if (degree[v] < 2) deficient.push_back(v);
    rng.shuffle(deficient);
    for (NodeId v : deficient) {
      const auto& partners = net.node_type[v] == rel.a ? right : left;
      for (std::size_t attempt = 0; degree[v] < 2 && budget > 0 && attempt < 64; ++attempt) {
        add(v, partners[rng.below(partners.size())]);
      }
      if (budget == 0) break;
    }

    // Uniform fill. Near-complete relations enumerate their complement instead
    // of rejection sampling.
    const std::size_t capacity =
        rel.a == rel.b ? left.size() * (left.size() - 1) / 2 : left.size() * right.size();
    if (budget * 2 <= capacity - used.size()) {
      while (budget > 0) add(left[rng.below(left.size())], right[rng.below(right.size())]);
    } else if (budget > 0) {
      std::vector<Edge> free;
      for (std::size_t i = 0; i < left.size(); ++i) {
        for (std::size_t j = rel.a == rel.b ? i + 1 : 0; j < right.size(); ++j) {
          if (!used.contains(pair_key(left[i], right[j]))) free.push_back({left[i], right[j]});
        }
      }
      for (std::size_t i = 0; budget > 0; ++i) {
        std::swap(free[i], free[i + rng.below(free.size() - i)]);
        add(free[i].u, free[i].v);
      }
    }
  }
  net.under_degree = static_cast<std::size_t>(std::ranges::count_if(degree, [](std::size_t d) { return d < 2; }));
  return net;
}

void write_synthetic_edges(const SyntheticNetwork& net, std::ostream& out) {
  for (const Edge& e : net.edges) out << net.node_names[e.u] << '\t' << net.node_names[e.v] << '\n';
}

void write_synthetic_types(const SyntheticNetwork& net, std::ostream& out) {
  for (std::size_t v = 0; v < net.node_names.size(); ++v) {
    out << net.node_names[v] << '\t' << net.type_names[net.node_type[v]] << '\n';
  }
}

HetGraph to_graph(const SyntheticNetwork& net) {
  return HetGraph::build(net.node_type, net.type_names, net.edges, net.node_names);
}

LoadResult load_synthetic(const SyntheticNetwork& net, std::size_t min_degree) {
  std::stringstream edges, types;
  write_synthetic_edges(net, edges);
  write_synthetic_types(net, types);
  return load_graph(edges, types, min_degree);
}

}  // namespace bhin
