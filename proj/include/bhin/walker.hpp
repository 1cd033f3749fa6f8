#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhin/hetgraph.hpp"
#include "bhin/rng.hpp"

namespace bhin {

using Matrix = Eigen::MatrixXd;
using Walk = std::vector<NodeId>;

/// Row-stochastic |T| x |T| type-transition matrix whose support is the
/// meta-network adjacency. Entry (i, j) is the probability of choosing type j
/// for the next node when the current node has type i.
class StochasticMatrix {
 public:
  StochasticMatrix() = default;
  /// Throws ShapeMismatch / InvalidArgument if `values` is not a valid
  /// stochastic matrix over `support`.
  StochasticMatrix(Matrix values, MetaNetwork support);

  const Matrix& values() const { return values_; }
  const MetaNetwork& support() const { return support_; }
  std::size_t type_count() const { return support_.type_count(); }
  double operator()(TypeId i, TypeId j) const { return values_(i, j); }

  /// Describes the first invariant violation, or nullopt when the matrix is valid.
  static std::optional<std::string> check(const Matrix& values, const MetaNetwork& support,
                                          double tolerance = 1e-9);

 private:
  Matrix values_;
  MetaNetwork support_;
};

/// P_uni[x][y] = 1 / type_degree(x) on the support.
StochasticMatrix uniform_stochastic_matrix(const MetaNetwork& meta);

/// Ones on every meta-edge followed by row normalization; equals the uniform matrix.
StochasticMatrix init_stochastic_matrix(const MetaNetwork& meta);

/// Ordinary matrix power P^n, n >= 1.
Matrix transition_power(const Matrix& p, std::size_t n);

/// Type-biased walk: at each step the next type is drawn from the current
/// type's row of P restricted to types the current node actually has
/// neighbors of (renormalized), then the next node is drawn uniformly from
/// those neighbors. If P puts zero mass on every locally available type the
/// type is drawn uniformly among the available ones.
Walk sample_walk(const HetGraph& g, const StochasticMatrix& p, NodeId start, std::size_t length,
                 Rng& rng);
void sample_walk(const HetGraph& g, const StochasticMatrix& p, NodeId start, std::size_t length,
                 Rng& rng, Walk& out);

/// Deepwalk-style walk: next node uniform over all neighbors.
Walk sample_walk_neighbor_uniform(const HetGraph& g, NodeId start, std::size_t length, Rng& rng);
void sample_walk_neighbor_uniform(const HetGraph& g, NodeId start, std::size_t length, Rng& rng,
                                  Walk& out);

}  // namespace bhin
