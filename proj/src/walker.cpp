#include "bhin/walker.hpp"

#include <cmath>

#include "bhin/error.hpp"

namespace bhin {

StochasticMatrix::StochasticMatrix(Matrix values, MetaNetwork support)
    : values_(std::move(values)), support_(std::move(support)) {
  if (values_.rows() != static_cast<Eigen::Index>(support_.type_count()) ||
      values_.cols() != static_cast<Eigen::Index>(support_.type_count())) {
    throw Error(ErrorKind::kShapeMismatch, "stochastic matrix shape does not match meta-network");
  }
  if (auto problem = check(values_, support_)) throw Error(ErrorKind::kInvalidArgument, *problem);
}

std::optional<std::string> StochasticMatrix::check(const Matrix& values, const MetaNetwork& support,
                                                   double tolerance) {
  const auto t = static_cast<Eigen::Index>(support.type_count());
  if (values.rows() != t || values.cols() != t) return "shape mismatch";
  for (Eigen::Index i = 0; i < t; ++i) {
    if (support.type_degree(static_cast<TypeId>(i)) == 0) {
      return "row " + std::to_string(i) + " has empty support";
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < t; ++j) {
      const double v = values(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        return "entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside [0,1]";
      }
      if (!support.adjacent(static_cast<TypeId>(i), static_cast<TypeId>(j)) && v != 0.0) {
        return "entry (" + std::to_string(i) + "," + std::to_string(j) + ") off the support";
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      return "row " + std::to_string(i) + " sums to " + std::to_string(sum);
    }
  }
  return std::nullopt;
}

StochasticMatrix uniform_stochastic_matrix(const MetaNetwork& meta) {
  const std::size_t t = meta.type_count();
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
  for (TypeId x = 0; x < t; ++x) {
    const std::size_t deg = meta.type_degree(x);
    if (deg == 0) throw Error(ErrorKind::kIsolatedType, "type " + std::to_string(x) + " has no meta-neighbors");
    for (TypeId y = 0; y < t; ++y) {
      if (meta.adjacent(x, y)) p(x, y) = 1.0 / static_cast<double>(deg);
    }
  }
  return StochasticMatrix(std::move(p), meta);
}

StochasticMatrix init_stochastic_matrix(const MetaNetwork& meta) {
  const std::size_t t = meta.type_count();
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
  for (TypeId x = 0; x < t; ++x)
    for (TypeId y = 0; y < t; ++y)
      if (meta.adjacent(x, y)) p(x, y) = 1.0;
  for (TypeId x = 0; x < t; ++x) {
    const double sum = p.row(x).sum();
    if (sum == 0.0) throw Error(ErrorKind::kIsolatedType, "type " + std::to_string(x) + " has no meta-neighbors");
    p.row(x) /= sum;
  }
  return StochasticMatrix(std::move(p), meta);
}

Matrix transition_power(const Matrix& p, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "transition_power needs n >= 1");
  Matrix out = p;
  for (std::size_t i = 1; i < n; ++i) out = out * p;
  return out;
}

namespace {

NodeId pick_uniform(std::span<const NodeId> nodes, Rng& rng) {
  return nodes[rng.below(nodes.size())];
}

}  // namespace

void sample_walk(const HetGraph& g, const StochasticMatrix& p, NodeId start, std::size_t length,
                 Rng& rng, Walk& out) {
  out.clear();
  if (length == 0) return;
  const std::size_t types = g.type_count();
  std::vector<double> weight(types);
  NodeId current = start;
  out.push_back(current);
  while (out.size() < length) {
    const TypeId from = g.type_of(current);
    double total = 0.0;
    std::size_t available = 0;
    for (TypeId t = 0; t < types; ++t) {
      const bool has = !g.neighbors(current, t).empty();
      available += has;
      weight[t] = has ? p(from, t) : 0.0;
      total += weight[t];
    }
    if (available == 0) {
      throw Error(ErrorKind::kDeadEnd, "node '" + g.node_name(current) + "' has no neighbors");
    }
    TypeId next_type = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      // If rounding leaves u at the top of the range, the last positive type wins.
      for (TypeId t = 0; t < types; ++t) {
        if (weight[t] <= 0.0) continue;
        next_type = t;
        acc += weight[t];
        if (u < acc) break;
      }
    } else {
      std::uint64_t pick = rng.below(available);
      for (TypeId t = 0; t < types; ++t) {
        if (g.neighbors(current, t).empty()) continue;
        if (pick-- == 0) {
          next_type = t;
          break;
        }
      }
    }
    current = pick_uniform(g.neighbors(current, next_type), rng);
    out.push_back(current);
  }
}

Walk sample_walk(const HetGraph& g, const StochasticMatrix& p, NodeId start, std::size_t length,
                 Rng& rng) {
  Walk w;
  sample_walk(g, p, start, length, rng, w);
  return w;
}

void sample_walk_neighbor_uniform(const HetGraph& g, NodeId start, std::size_t length, Rng& rng,
                                  Walk& out) {
  out.clear();
  if (length == 0) return;
  NodeId current = start;
  out.push_back(current);
  while (out.size() < length) {
    const auto nbrs = g.neighbors(current);
    if (nbrs.empty()) throw Error(ErrorKind::kDeadEnd, "node '" + g.node_name(current) + "' has no neighbors");
    current = pick_uniform(nbrs, rng);
    out.push_back(current);
  }
}

Walk sample_walk_neighbor_uniform(const HetGraph& g, NodeId start, std::size_t length, Rng& rng) {
  Walk w;
  sample_walk_neighbor_uniform(g, start, length, rng, w);
  return w;
}

}  // namespace bhin
