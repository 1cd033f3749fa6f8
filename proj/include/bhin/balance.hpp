#pragma once

#include "bhin/skipgram.hpp"
#include "bhin/walker.hpp"

namespace bhin {

struct PerturbationConfig {
  double alpha = 0.1;   // perturbation strength
  double lr = 0.025;    // step size for P
  std::size_t hops = 5; // context window k
};

/// sum_{i<k} || P^{i+1} - (P_uni^{i+1} + alpha * (I_i - 1)) ||_F^2
double stochastic_loss(const Matrix& p, const StochasticMatrix& uniform, const TaskTensor& ratio,
                       const PerturbationConfig& cfg);

/// Exact gradient of stochastic_loss with respect to P, zero off the support.
/// Uses d(P^n) = sum_{a+b=n-1} P^a dP P^b.
Matrix stochastic_loss_gradient(const Matrix& p, const StochasticMatrix& uniform,
                                const TaskTensor& ratio, const PerturbationConfig& cfg);

/// Projected step: P - lr * grad on the support, clipped to [0, 1], rows
/// renormalized. A row that clips to all zeros becomes uniform over its support.
StochasticMatrix apply_stochastic_update(const StochasticMatrix& p, const Matrix& grad,
                                         const PerturbationConfig& cfg);

}  // namespace bhin
