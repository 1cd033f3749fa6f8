#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bhin/hetgraph.hpp"

namespace bhin {

struct SyntheticType {
  std::string name;
  std::size_t nodes;
};

struct SyntheticRelation {
  std::string a;
  std::string b;
  std::size_t edges;
};

struct SyntheticSpec {
  std::vector<SyntheticType> types;
  std::vector<SyntheticRelation> relations;
  std::uint64_t seed = 1;
};

/// "A:1000" -> type, "A-B:500" -> relation. InvalidArgument on bad syntax.
SyntheticType parse_synthetic_type(std::string_view text);
SyntheticRelation parse_synthetic_relation(std::string_view text);

struct SyntheticNetwork {
  std::vector<std::string> type_names;
  std::vector<std::string> node_names;  // "<type><index>"
  std::vector<TypeId> node_type;
  std::vector<Edge> edges;
  std::size_t under_degree = 0;  // nodes that could not reach degree 2 within the edge budget
};

/// Random heterogeneous network with exactly the requested number of distinct
/// edges per relation. Relations are generated largest first; within each,
/// nodes still below degree 2 are covered first (each brought to degree 2 in
/// a seeded order while the relation's budget lasts), then the rest of the
/// budget is drawn uniformly without duplicates. Throws InfeasibleSpec when a
/// relation asks for more edges than its node sets allow.
SyntheticNetwork make_synthetic(const SyntheticSpec& spec);

void write_synthetic_edges(const SyntheticNetwork& net, std::ostream& out);
void write_synthetic_types(const SyntheticNetwork& net, std::ostream& out);

/// In-memory graph without degree filtering.
HetGraph to_graph(const SyntheticNetwork& net);

/// What load_graph would return for the written files, degree filter included.
LoadResult load_synthetic(const SyntheticNetwork& net, std::size_t min_degree = 2);

}  // namespace bhin
